"""
Soft value iteration on a slippery gridworld
============================================

Build a small gridworld, solve for its soft-optimal Q-function and check the
exact discounted return against a Monte-Carlo estimate.
"""

import numpy as np

from bicql import GridworldSpec, boltzmann_policy, build_gridworld, exact_policy_return, soft_value_iteration

# A 5x5 grid, goal in the far corner, 10% chance of slipping sideways.
spec = GridworldSpec(5, 5, slip_prob=0.1)
mdp, reward = build_gridworld(spec)
print("states x actions:", mdp.shape)

###############################################################################
# The soft Bellman fixed point. Actions are 0 up, 1 down, 2 left, 3 right.
q = soft_value_iteration(mdp, reward, tol=1e-10)
policy = boltzmann_policy(q)
start = spec.state_index(0, 0)
print("Q at the start cell:", np.round(q[start], 3))
print("policy at the start cell:", np.round(policy[start], 3))

###############################################################################
# Exact return from one linear solve, then a rollout estimate for comparison.
exact = exact_policy_return(mdp, reward, policy)

rng = np.random.default_rng(0)
n, horizon = 5000, 300
s = np.full(n, start)
total = np.zeros(n)
disc = 1.0
for _ in range(horizon):
    a = (rng.random(n)[:, None] > np.cumsum(policy[s], axis=1)).sum(axis=1).clip(max=3)
    total += disc * reward[s, a]
    s = (rng.random(n)[:, None] > np.cumsum(mdp.transitions[s, a], axis=1)).sum(axis=1).clip(max=mdp.n_states - 1)
    disc *= mdp.discount

se = total.std(ddof=1) / np.sqrt(n)
print(f"exact return {exact:.4f}, Monte-Carlo {total.mean():.4f} +- {se:.4f}")

###############################################################################
# A uniform policy does much worse on the same reward.
uniform = np.full(mdp.shape, 0.25)
print(f"uniform policy return {exact_policy_return(mdp, reward, uniform):.4f}")
