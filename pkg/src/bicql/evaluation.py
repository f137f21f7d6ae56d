"""Scoring learned rewards and policies against the ground truth."""

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidStateError
from .mdp import (
    boltzmann_policy,
    exact_policy_return,
    greedy_action_set,
    soft_value_iteration,
)

EVAL_FIELDS = (
    "learned_return",
    "expert_return",
    "bc_return",
    "normalized_score",
    "bc_normalized_score",
    "expert_greedy_fraction",
    "reward_pearson",
    "covered_cells",
    "convergence_outer_iters",
    "samples_consumed",
)


@dataclass
class EvalReport:
    learned_return: float
    expert_return: float
    normalized_score: float | None
    expert_greedy_fraction: float
    reward_pearson: float | None
    covered_cells: int
    bc_return: float | None = None
    bc_normalized_score: float | None = None
    convergence_outer_iters: int | None = None
    samples_consumed: int | None = None

    def fields(self, include_bc=True):
        d = asdict(self)
        keys = [k for k in EVAL_FIELDS if include_bc or not k.startswith("bc_")]
        return {k: d[k] for k in keys}

    def to_kv(self, include_bc=True):
        return "".join(f"{k} = {_fmt(v)}\n" for k, v in self.fields(include_bc).items())


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".17g")


def normalized(value, expert_return):
    if expert_return == 0:
        return None
    return value / expert_return


def evaluate_learned_reward(mdp, true_reward, learned_reward, tol=1e-10):
    """Soft-optimal policy for ``learned_reward`` and its return under ``true_reward``."""
    q = soft_value_iteration(mdp, learned_reward, tol=tol)
    policy = boltzmann_policy(q)
    return policy, exact_policy_return(mdp, true_reward, policy)


def modal_actions(expert, n_states, n_actions):
    """Most frequent expert action per visited state (ties -> lowest index)."""
    counts = expert.state_action_counts(n_states, n_actions)
    visited = np.flatnonzero(counts.sum(axis=1))
    return {int(s): int(np.argmax(counts[s])) for s in visited}


def expert_optimality_check(q_learned, expert, tie_tol=1e-6):
    """Fraction of expert-visited states whose modal action is greedy under ``q_learned``."""
    if len(expert) == 0:
        raise InvalidStateError("expert dataset is empty")
    q_learned = np.asarray(q_learned, dtype=float)
    modal = modal_actions(expert, *q_learned.shape)
    hits = sum(a in greedy_action_set(q_learned[s], tie_tol) for s, a in modal.items())
    return hits / len(modal)


def reward_recovery_stats(true_reward, learned_reward, dataset):
    """Pearson correlation of rewards over distinct dataset-covered cells.

    Returns ``(pearson, covered_cells)``; ``pearson`` is None when fewer than
    two cells are covered or either side has zero variance.
    """
    if len(dataset) == 0:
        raise InvalidStateError("dataset is empty")
    counts = dataset.state_action_counts(*np.shape(true_reward))
    mask = counts > 0
    n = int(mask.sum())
    x = np.asarray(true_reward, dtype=float)[mask]
    y = np.asarray(learned_reward, dtype=float)[mask]
    if n < 2 or np.ptp(x) == 0 or np.ptp(y) == 0:
        return None, n
    return float(np.corrcoef(x, y)[0, 1]), n


def convergence_iteration(mdp, true_reward, reward_history, expert_return, fraction=0.9):
    """First outer iteration whose normalized score reaches ``fraction`` of the final one.

    ``reward_history[k]`` is the reward table after ``k`` outer iterations.
    """
    if not reward_history or expert_return == 0:
        return None
    scores = [
        evaluate_learned_reward(mdp, true_reward, r)[1] / expert_return for r in reward_history
    ]
    final = scores[-1]
    for k, s in enumerate(scores):
        if (final >= 0 and s >= fraction * final) or (final < 0 and s >= final / fraction):
            return k
    return len(scores) - 1


def evaluate_run(
    mdp,
    true_reward,
    learned_reward,
    q_learned,
    expert_policy,
    expert_data,
    dataset,
    tie_tol=1e-3,
    bc_policy=None,
    reward_history=None,
    samples_consumed=None,
):
    """Assemble an :class:`EvalReport` for one trained pair."""
    expert_return = exact_policy_return(mdp, true_reward, expert_policy)
    _, learned_return = evaluate_learned_reward(mdp, true_reward, learned_reward)
    pearson, covered = reward_recovery_stats(true_reward, learned_reward, dataset)
    report = EvalReport(
        learned_return=learned_return,
        expert_return=expert_return,
        normalized_score=normalized(learned_return, expert_return),
        expert_greedy_fraction=expert_optimality_check(q_learned, expert_data, tie_tol),
        reward_pearson=pearson,
        covered_cells=covered,
        samples_consumed=samples_consumed,
    )
    if bc_policy is not None:
        report.bc_return = exact_policy_return(mdp, true_reward, bc_policy)
        report.bc_normalized_score = normalized(report.bc_return, expert_return)
    if reward_history:
        report.convergence_outer_iters = convergence_iteration(
            mdp, true_reward, reward_history, expert_return
        )
    return report


@dataclass
class ExpertOptimalityResult:
    expert_return: float
    competitor_returns: list
    soft_slack: float
    soft_check: bool
    strict_expert_return: float
    strict_check: bool


def expert_dominance_check(mdp, true_reward, expert_q, competitors, low_temp_scale=10.0):
    """Compare the expert's true return against competitor policies.

    The soft check allows a slack of ``ln|A| / (1 - gamma)`` because a
    temperature-1 expert maximizes entropy-regularized return. The strict
    check uses the sharper expert ``softmax(scale * Q)``.
    """
    expert_return = exact_policy_return(mdp, true_reward, boltzmann_policy(expert_q))
    strict_return = exact_policy_return(mdp, true_reward, boltzmann_policy(low_temp_scale * expert_q))
    returns = [exact_policy_return(mdp, true_reward, p) for p in competitors]
    slack = math.log(mdp.n_actions) / (1.0 - mdp.discount)
    return ExpertOptimalityResult(
        expert_return=expert_return,
        competitor_returns=returns,
        soft_slack=slack,
        soft_check=all(expert_return >= r - slack for r in returns),
        strict_expert_return=strict_return,
        strict_check=all(strict_return >= r - 1e-9 for r in returns),
    )
