"""Finite MDPs and exact maximum-entropy RL primitives.

Q-tables, reward tables and policy tables are plain ``(n_states, n_actions)``
float arrays. All functions here are pure.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NonConvergenceError

_PROB_ATOL = 1e-9


@dataclass(frozen=True)
class FiniteMdp:
    """Tabular MDP with transition tensor ``P[s, a, s']``."""

    transitions: np.ndarray
    initial_dist: np.ndarray
    discount: float

    def __post_init__(self):
        P = np.asarray(self.transitions, dtype=float)
        mu = np.asarray(self.initial_dist, dtype=float)
        if P.ndim != 3 or P.shape[0] != P.shape[2] or min(P.shape) < 1:
            raise InvalidInputError(f"transitions must have shape (S, A, S), got {P.shape}")
        if mu.shape != (P.shape[0],):
            raise InvalidInputError("initial_dist length must equal n_states")
        if np.any(P < 0) or np.any(np.abs(P.sum(axis=2) - 1.0) > _PROB_ATOL):
            raise InvalidInputError("every transitions[s, a] must be a probability vector")
        if np.any(mu < 0) or abs(mu.sum() - 1.0) > _PROB_ATOL:
            raise InvalidInputError("initial_dist must be a probability vector")
        if not 0.0 < self.discount < 1.0:
            raise InvalidInputError(f"discount must lie in (0, 1), got {self.discount}")
        object.__setattr__(self, "transitions", P)
        object.__setattr__(self, "initial_dist", mu)
        object.__setattr__(self, "discount", float(self.discount))

    @property
    def n_states(self):
        return self.transitions.shape[0]

    @property
    def n_actions(self):
        return self.transitions.shape[1]

    @property
    def shape(self):
        return self.n_states, self.n_actions


def _logsumexp(x, axis=-1):
    m = np.max(x, axis=axis, keepdims=True)
    out = m + np.log(np.sum(np.exp(x - m), axis=axis, keepdims=True))
    return np.squeeze(out, axis=axis)


def soft_value(q_row):
    """Log-sum-exp of a row of Q-values (max-shifted).

    Also accepts a 2-D array, in which case the soft value of every row is
    returned.
    """
    q = np.asarray(q_row, dtype=float)
    if q.size == 0 or q.shape[-1] == 0:
        raise InvalidInputError("soft_value of an empty row")
    if q.ndim == 0:
        raise InvalidInputError("soft_value expects a vector")
    return _logsumexp(q, axis=-1)


def boltzmann_policy(q):
    """Temperature-1 softmax over actions for every state."""
    q = np.asarray(q, dtype=float)
    if not np.all(np.isfinite(q)):
        raise InvalidInputError("Q-table has non-finite entries")
    z = np.exp(q - q.max(axis=-1, keepdims=True))
    return z / z.sum(axis=-1, keepdims=True)


def soft_bellman_backup(mdp, reward, q):
    """``r(s,a) + gamma * sum_s' P(s'|s,a) * logsumexp(Q(s', .))``."""
    return reward + mdp.discount * (mdp.transitions @ soft_value(q))


def soft_value_iteration(mdp, reward, tol=1e-10, max_iters=100_000, init=None):
    """Iterate the soft Bellman operator to its unique fixed point.

    Returns Q with ``||Q - T(Q)||_inf <= tol``. Raises NonConvergenceError
    (carrying the last residual) if ``max_iters`` is exhausted.
    """
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    reward = np.asarray(reward, dtype=float)
    if reward.shape != mdp.shape:
        raise InvalidInputError(f"reward shape {reward.shape} != mdp shape {mdp.shape}")
    q = np.zeros(mdp.shape) if init is None else np.array(init, dtype=float)
    residual = np.inf
    for _ in range(max_iters):
        tq = soft_bellman_backup(mdp, reward, q)
        residual = np.max(np.abs(tq - q))
        q = tq
        # residual of the returned iterate is at most gamma * residual
        if mdp.discount * residual <= tol:
            return q
    raise NonConvergenceError(
        f"soft value iteration did not reach tol={tol} in {max_iters} iterations "
        f"(residual {residual:.3e})",
        residual=residual,
    )


def policy_transition_matrix(mdp, policy):
    return np.einsum("sa,sat->st", policy, mdp.transitions)


def exact_policy_values(mdp, reward, policy):
    """State values ``(I - gamma P_pi)^{-1} r_pi`` via a dense linear solve."""
    policy = np.asarray(policy, dtype=float)
    if policy.shape != mdp.shape:
        raise InvalidInputError("policy shape does not match the mdp")
    if np.any(policy < -_PROB_ATOL) or np.any(np.abs(policy.sum(axis=1) - 1) > _PROB_ATOL):
        raise InvalidInputError("policy rows must be probability vectors")
    P_pi = policy_transition_matrix(mdp, policy)
    r_pi = np.sum(policy * reward, axis=1)
    A = np.eye(mdp.n_states) - mdp.discount * P_pi
    v = np.linalg.solve(A, r_pi)
    resid = np.max(np.abs(A @ v - r_pi))
    if resid > 1e-8 * max(1.0, np.max(np.abs(r_pi))):
        raise ArithmeticError(f"policy evaluation solve residual {resid:.3e} exceeds 1e-8")
    return v


def exact_policy_return(mdp, reward, policy):
    """Expected discounted return of ``policy`` from the initial distribution."""
    return float(mdp.initial_dist @ exact_policy_values(mdp, reward, policy))


def greedy_action_set(q_row, tie_tol=1e-6):
    """Indices whose value is within ``tie_tol`` of the row maximum."""
    if tie_tol < 0:
        raise InvalidInputError("tie_tol must be non-negative")
    q = np.asarray(q_row, dtype=float)
    return set(np.flatnonzero(q >= q.max() - tie_tol).tolist())
