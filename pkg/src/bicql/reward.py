"""Reward learning by soft-advantage regression, plus the expert likelihood monitor."""

from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, InvalidInputError, InvalidStateError
from .mdp import soft_value

EXPERT_ONLY = "expert_only"
FULL_DATASET = "full_dataset"


@dataclass(frozen=True)
class RewardConfig:
    lr_r: float = 1.0
    k_r: int = 100
    source: str = EXPERT_ONLY
    batch_size: int | None = None
    r_max: float | None = None  # clamp |r| <= r_max after each step when set

    def __post_init__(self):
        if self.lr_r < 0:
            raise InvalidInputError("lr_r must be >= 0")
        if self.k_r < 0:
            raise InvalidInputError("k_r must be >= 0")
        if self.source not in (EXPERT_ONLY, FULL_DATASET):
            raise InvalidInputError(f"unknown reward source {self.source!r}")
        if self.batch_size is not None and self.batch_size < 1:
            raise InvalidInputError("batch_size must be positive or None")
        if self.r_max is not None and self.r_max <= 0:
            raise InvalidInputError("r_max must be positive")


def soft_advantage_target(q, record, gamma):
    """``q[s, a] - gamma * logsumexp(q[s', .])`` for one ``(s, a, s')`` record."""
    s, a, s_next = record
    return float(q[s, a] - gamma * soft_value(q[s_next]))


def soft_advantage_targets(q, batch, gamma):
    if not batch.has_next_state:
        raise InvalidInputError("reward regression needs next_state in every record")
    return q[batch.states, batch.actions] - gamma * soft_value(q[batch.next_states])


def reward_regression_loss(reward, q, batch, gamma):
    """Mean squared gap between reward and soft-advantage targets, with gradient."""
    n = len(batch)
    if n == 0:
        raise InvalidStateError("empty batch")
    w = batch.weights if batch.weights is not None else np.full(n, 1.0 / n)
    t = soft_advantage_targets(q, batch, gamma)
    diff = reward[batch.states, batch.actions] - t
    n_states, n_actions = reward.shape
    grad = np.bincount(
        batch.states * n_actions + batch.actions,
        weights=2.0 * w * diff,
        minlength=n_states * n_actions,
    ).reshape(reward.shape)
    return float(np.sum(w * diff**2)), grad


def reward_step(reward, q, batch, config, gamma):
    """One gradient-descent step; returns ``(new_reward, loss)``."""
    with np.errstate(over="ignore", invalid="ignore"):
        loss, grad = reward_regression_loss(reward, q, batch, gamma)
        new = reward - config.lr_r * grad
    if not (np.isfinite(loss) and np.all(np.isfinite(new))):
        raise DivergenceError("non-finite reward update", iteration=None)
    if config.r_max is not None:
        np.clip(new, -config.r_max, config.r_max, out=new)
    return new, loss


def expert_log_likelihood(q, expert):
    """Mean log-probability of expert actions under the Boltzmann policy of ``q``."""
    if len(expert) == 0:
        raise InvalidStateError("expert dataset is empty")
    q = np.asarray(q, dtype=float)
    rows = q[expert.states]
    return float(np.mean(q[expert.states, expert.actions] - soft_value(rows)))
