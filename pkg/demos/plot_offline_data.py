"""
Offline data from a mixed behavior policy
=========================================

The learner never sees the reward. It gets a batch of transitions from a
behavior policy (half expert, half uniform) and a few expert trajectories.
"""

import tempfile
from pathlib import Path

import numpy as np

from bicql import (
    GridworldSpec,
    build_gridworld,
    collect_expert_demos,
    collect_transitions,
    load_dataset,
    make_expert,
    mixed_policy,
    save_dataset,
)

spec = GridworldSpec(5, 5, slip_prob=0.1)
mdp, reward = build_gridworld(spec)
expert = make_expert(mdp, reward)
behavior = mixed_policy(expert.policy, 0.5)

offline = collect_transitions(mdp, behavior, n_episodes=200, horizon=50, seed=0)
demos = collect_expert_demos(mdp, expert, n_trajectories=10, horizon=50, seed=1)
print(len(offline), "offline transitions,", len(demos), "expert transitions")

###############################################################################
# Coverage: how many (s, a) cells each dataset touches.
for name, d in (("offline", offline), ("expert", demos)):
    counts = d.state_action_counts(*mdp.shape)
    print(f"{name:8s} covers {np.count_nonzero(counts)} of {counts.size} cells")

###############################################################################
# The full-batch view collapses duplicates into weighted unique records.
agg = offline.aggregated()
print(len(agg), "unique records, weights sum to", round(float(agg.weights.sum()), 12))

###############################################################################
# Datasets round-trip through plain CSV.
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "expert.csv"
    save_dataset(demos, path)
    print(path.read_text().splitlines()[:3])
    assert load_dataset(path).records() == demos.records()
