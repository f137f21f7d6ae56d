"""
Conservative Q-learning on partial coverage
===========================================

With alpha = 0 and data covering every transition, the tabular learner lands
on the exact soft fixed point. With holes in the data, raising alpha pushes
the unseen actions down.
"""

import numpy as np

from bicql import CqlConfig, TransitionDataset, build_random_mdp, collect_transitions, soft_value_iteration, solve_lower_level

mdp, reward = build_random_mdp(8, 3, 3, seed=0, discount=0.9)

# Every (s, a, s') weighted by its probability: the exact expected loss.
s, a, t = np.nonzero(mdp.transitions)
full = TransitionDataset(s, a, t, weights=mdp.transitions[s, a, t] / (8 * 3))
cfg = CqlConfig(alpha=0.0, lr_q=12.0, target_sync_period=5, k_q=2000)
q = solve_lower_level(reward, full, cfg, mdp.discount, np.zeros(mdp.shape)).q
print("gap to soft value iteration:", np.max(np.abs(q - soft_value_iteration(mdp, reward))))

###############################################################################
# Now a behavior policy that never takes action 2.
mdp, reward = build_random_mdp(8, 3, 3, seed=1, discount=0.9)
behavior = np.tile([0.6, 0.4, 0.0], (8, 1))
data = collect_transitions(mdp, behavior, 30, 20, seed=0)
unseen = data.state_action_counts(*mdp.shape) == 0

for alpha in (0.0, 1.0, 5.0):
    cfg = CqlConfig(alpha=alpha, lr_q=1.0, target_sync_period=10, k_q=1500)
    q = solve_lower_level(reward, data, cfg, mdp.discount, np.zeros(mdp.shape)).q
    print(f"alpha={alpha}: mean Q seen {q[~unseen].mean():7.3f}, unseen {q[unseen].mean():7.3f}")
