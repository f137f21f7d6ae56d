"""Conservative soft Q-learning on a tabular Q-function.

Losses return ``(loss, grad)`` with ``grad`` a dense ``(S, A)`` array that is
zero outside the entries touched by the batch. Batches are
:class:`~bicql.data.TransitionDataset` instances; when a batch carries
``weights`` those replace the uniform ``1/B`` average.
"""

from dataclasses import dataclass

import numpy as np

from .data import BatchSampler
from .errors import DivergenceError, InvalidInputError, InvalidStateError
from .mdp import boltzmann_policy, soft_value


@dataclass(frozen=True)
class CqlConfig:
    alpha: float = 1.0
    lr_q: float = 0.1
    target_sync_period: int = 50
    k_q: int = 500
    batch_size: int | None = None

    def __post_init__(self):
        if self.alpha < 0:
            raise InvalidInputError("alpha must be >= 0")
        if self.lr_q < 0:
            raise InvalidInputError("lr_q must be >= 0")
        if self.target_sync_period < 1:
            raise InvalidInputError("target_sync_period must be >= 1")
        if self.k_q < 0:
            raise InvalidInputError("k_q must be >= 0")
        if self.batch_size is not None and self.batch_size < 1:
            raise InvalidInputError("batch_size must be positive or None")


@dataclass
class QLearnerState:
    q: np.ndarray
    q_target: np.ndarray
    step_count: int = 0

    @classmethod
    def fresh(cls, q):
        q = np.array(q, dtype=float)
        return cls(q, q.copy(), 0)

    def copy(self):
        return QLearnerState(self.q.copy(), self.q_target.copy(), self.step_count)


def _batch_weights(batch):
    n = len(batch)
    if n == 0:
        raise InvalidStateError("empty batch")
    if batch.weights is not None:
        return batch.weights
    return np.full(n, 1.0 / n)


def _scatter(shape, s, a, values):
    n_states, n_actions = shape
    flat = np.bincount(s * n_actions + a, weights=values, minlength=n_states * n_actions)
    return flat.reshape(shape)


def soft_bellman_targets(q_target, reward, batch, gamma):
    return reward[batch.states, batch.actions] + gamma * soft_value(q_target[batch.next_states])


def bellman_error_loss(q, q_target, reward, batch, gamma):
    """Half mean-squared soft Bellman error; gradient w.r.t. ``q`` only."""
    w = _batch_weights(batch)
    y = soft_bellman_targets(q_target, reward, batch, gamma)
    diff = q[batch.states, batch.actions] - y
    loss = 0.5 * float(np.sum(w * diff**2))
    return loss, _scatter(q.shape, batch.states, batch.actions, w * diff)


def cql_regularizer(q, batch, alpha):
    """``alpha * mean_i [logsumexp(q[s_i]) - q[s_i, a_i]]`` and its gradient."""
    w = _batch_weights(batch)
    rows = q[batch.states]
    loss = alpha * float(np.sum(w * (soft_value(rows) - q[batch.states, batch.actions])))
    grad = np.zeros(q.shape)
    np.add.at(grad, batch.states, alpha * w[:, None] * boltzmann_policy(rows))
    grad -= _scatter(q.shape, batch.states, batch.actions, alpha * w)
    return loss, grad


def q_step(state, reward, batch, config, gamma):
    """One descent step on ``L_BE + L_CQL``; syncs the target on schedule.

    Returns ``(new_state, loss_be, loss_cql)``.
    """
    # overflow is caught by the finiteness checks below
    with np.errstate(over="ignore", invalid="ignore"):
        loss_be, g_be = bellman_error_loss(state.q, state.q_target, reward, batch, gamma)
        loss_cql, g_cql = cql_regularizer(state.q, batch, config.alpha)
        q = state.q - config.lr_q * (g_be + g_cql)
    if not (np.isfinite(loss_be) and np.isfinite(loss_cql)):
        raise DivergenceError(f"non-finite Q loss at step {state.step_count}", state.step_count)
    if not np.all(np.isfinite(q)):
        raise DivergenceError(f"non-finite Q-table at step {state.step_count}", state.step_count)
    step = state.step_count + 1
    q_target = q.copy() if step % config.target_sync_period == 0 else state.q_target
    return QLearnerState(q, q_target, step), loss_be, loss_cql


def solve_lower_level(reward, dataset, config, gamma, init, sampler=None):
    """Run ``config.k_q`` CQL steps starting from ``init``.

    ``init`` is either a Q-table (a fresh learner with a synced target is
    created) or a :class:`QLearnerState` to warm-start from.
    """
    return solve_lower_level_with_losses(reward, dataset, config, gamma, init, sampler)[0]


def solve_lower_level_with_losses(reward, dataset, config, gamma, init, sampler=None):
    if len(dataset) == 0:
        raise InvalidStateError("offline dataset is empty")
    if not dataset.has_next_state:
        raise InvalidInputError("offline transitions need next_state")
    state = init.copy() if isinstance(init, QLearnerState) else QLearnerState.fresh(init)
    if sampler is None:
        sampler = BatchSampler(config.batch_size, rng_seed=0)
    loss_be = loss_cql = float("nan")
    for _ in range(config.k_q):
        batch = sampler.next_batch(dataset)
        state, loss_be, loss_cql = q_step(state, reward, batch, config, gamma)
    return state, loss_be, loss_cql
