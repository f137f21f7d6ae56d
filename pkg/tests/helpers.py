"""Shared test oracles and fixtures-as-functions."""

import numpy as np

from bicql.cql import CqlConfig, solve_lower_level
from bicql.data import TransitionDataset, collect_transitions
from bicql.envs import build_random_mdp


def central_fd_grad(f, x, h=1e-5):
    """Central finite-difference gradient of scalar ``f`` at array ``x``."""
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp = x.copy()
        xm = x.copy()
        xp[idx] += h
        xm[idx] -= h
        g[idx] = (f(xp) - f(xm)) / (2 * h)
    return g


def rel_error(a, b):
    denom = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-12)
    return np.max(np.abs(a - b)) / denom


def full_coverage_dataset(mdp):
    """Every (s, a, s') with P > 0, weighted by P(s'|s,a) / (S*A)."""
    s, a, t = np.nonzero(mdp.transitions)
    w = mdp.transitions[s, a, t] / (mdp.n_states * mdp.n_actions)
    return TransitionDataset(s, a, t, weights=w)


def random_batch(rng, n_states, n_actions, size):
    return TransitionDataset(
        rng.integers(0, n_states, size),
        rng.integers(0, n_actions, size),
        rng.integers(0, n_states, size),
    )


def uncovered_mean_q(alpha, seed):
    """Mean learned Q over (s, a) cells absent from a partial-coverage dataset."""
    mdp, r = build_random_mdp(8, 4, 3, seed=seed, discount=0.9)
    g = np.random.default_rng(seed)
    # behavior never uses the last action and rarely the third
    beh = g.dirichlet(np.ones(4), size=8)
    beh[:, 3] = 0.0
    beh[:, 2] *= 0.05
    beh /= beh.sum(axis=1, keepdims=True)
    d = collect_transitions(mdp, beh, 30, 20, seed=seed)
    covered = d.state_action_counts(*mdp.shape) > 0
    cfg = CqlConfig(alpha=alpha, lr_q=1.0, target_sync_period=10, k_q=1500)
    q = solve_lower_level(r, d, cfg, mdp.discount, np.zeros(mdp.shape)).q
    return q[~covered].mean()
