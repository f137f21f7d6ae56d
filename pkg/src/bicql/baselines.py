"""Behavioral cloning baseline."""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, InvalidStateError


@dataclass(frozen=True)
class BcConfig:
    laplace_alpha: float = 0.5

    def __post_init__(self):
        if self.laplace_alpha < 0:
            raise InvalidInputError("laplace_alpha must be >= 0")


def behavioral_cloning(expert, n_states, n_actions, config=BcConfig()):
    """Laplace-smoothed empirical action frequencies per state.

    States absent from ``expert`` get the uniform policy.
    """
    if len(expert) == 0:
        raise InvalidStateError("expert dataset is empty")
    counts = expert.state_action_counts(n_states, n_actions).astype(float)
    totals = counts.sum(axis=1, keepdims=True)
    policy = np.full((n_states, n_actions), 1.0 / n_actions)
    visited = totals[:, 0] > 0
    policy[visited] = (counts[visited] + config.laplace_alpha) / (
        totals[visited] + config.laplace_alpha * n_actions
    )
    return policy
