"""Outer bi-level loop: CQL lower level alternating with reward regression.

Also holds the fixed-point and contraction diagnostics computed from a run.
"""

import csv
import math
import threading
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .cql import CqlConfig, QLearnerState, solve_lower_level_with_losses
from .data import BatchSampler
from .errors import DivergenceError, InvalidInputError
from .reward import (
    EXPERT_ONLY,
    RewardConfig,
    expert_log_likelihood,
    reward_step,
)

CONVERGED = "converged"
MAX_ITERS = "max_iters"

REPORT_COLUMNS = ("iter", "loss_be", "loss_cql", "loss_r", "expert_ll", "delta_theta", "ratio", "ms")


@dataclass(frozen=True)
class TrainConfig:
    gamma: float = 0.95
    cql: CqlConfig = field(default_factory=CqlConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)
    max_outer_iters: int = 200
    theta_tol: float = 1e-4
    seed: int = 0
    reward_init: str = "zeros"  # or "uniform"
    reward_init_scale: float = 0.1
    record_timing: bool = False
    keep_history: bool = False

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise InvalidInputError("gamma must lie in (0, 1)")
        if self.max_outer_iters < 0:
            raise InvalidInputError("max_outer_iters must be >= 0")
        if self.theta_tol <= 0:
            raise InvalidInputError("theta_tol must be positive")
        if self.reward_init not in ("zeros", "uniform"):
            raise InvalidInputError(f"unknown reward_init {self.reward_init!r}")
        if self.reward_init_scale < 0:
            raise InvalidInputError("reward_init_scale must be >= 0")


@dataclass
class IterationRecord:
    iter: int
    loss_be: float
    loss_cql: float
    loss_r: float
    expert_ll: float
    delta_theta: float
    ratio: float | None
    ms: float | None


@dataclass
class TrainReport:
    records: list = field(default_factory=list)
    status: str = MAX_ITERS
    reward_history: list = field(default_factory=list)
    samples_consumed: int = 0

    def __len__(self):
        return len(self.records)

    @property
    def converged(self):
        return self.status == CONVERGED

    def column(self, name):
        return [getattr(r, name) for r in self.records]

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(report_to_csv(self))


def _fmt(x):
    if x is None:
        return ""
    return format(float(x), ".17g")


def report_to_csv(report):
    lines = [",".join(REPORT_COLUMNS)]
    for r in report.records:
        lines.append(
            ",".join(
                [str(r.iter)]
                + [_fmt(getattr(r, c)) for c in REPORT_COLUMNS[1:]]
            )
        )
    return "\n".join(lines) + "\n"


def read_report_csv(path):
    report = TrainReport()
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        for row in reader:

            def val(k):
                return float(row[k]) if row[k] != "" else None

            report.records.append(
                IterationRecord(
                    int(row["iter"]),
                    val("loss_be"),
                    val("loss_cql"),
                    val("loss_r"),
                    val("expert_ll"),
                    val("delta_theta"),
                    val("ratio"),
                    val("ms"),
                )
            )
    return report


def initial_reward(shape, config, rng):
    if config.reward_init == "zeros":
        return np.zeros(shape)
    s = config.reward_init_scale
    return rng.uniform(-s, s, size=shape)


def _check_indices(dataset, shape, name):
    try:
        dataset.validate(*shape, require_next_state=True)
    except Exception as exc:
        raise InvalidInputError(f"{name}: {exc}") from exc


def run_bicql(mdp_shape, dataset, expert, config, warn=True):
    """Alternate K_Q conservative Q steps with K_R reward-regression steps.

    Stops when the sup-norm change of the reward table after an upper-level
    block falls below ``config.theta_tol``, or after ``max_outer_iters``.
    Returns ``(reward, q, report)``. A divergence in either level raises
    :class:`DivergenceError` whose ``report`` holds the completed iterations.
    Hitting the iteration cap emits a ``RuntimeWarning`` unless ``warn`` is
    false; the report status records it either way.
    """
    mdp_shape = tuple(mdp_shape)
    _check_indices(dataset, mdp_shape, "offline dataset")
    _check_indices(expert, mdp_shape, "expert dataset")

    ss = np.random.SeedSequence(config.seed)
    init_seq, q_seq, r_seq = ss.spawn(3)
    reward = initial_reward(mdp_shape, config, np.random.default_rng(init_seq))
    learner = QLearnerState.fresh(np.zeros(mdp_shape))
    q_sampler = BatchSampler(config.cql.batch_size, rng_seed=q_seq)
    r_sampler = BatchSampler(config.reward.batch_size, rng_seed=r_seq)
    r_data = expert if config.reward.source == EXPERT_ONLY else dataset

    q_batch_n = config.cql.batch_size or len(dataset)
    r_batch_n = config.reward.batch_size or len(r_data)

    report = TrainReport()
    if config.keep_history:
        report.reward_history.append(reward.copy())
    prev_delta = None
    for k in range(1, config.max_outer_iters + 1):
        t0 = time.perf_counter()
        try:
            learner, loss_be, loss_cql = solve_lower_level_with_losses(
                reward, dataset, config.cql, config.gamma, learner, q_sampler
            )
            new_reward = reward
            loss_r = float("nan")
            for _ in range(config.reward.k_r):
                batch = r_sampler.next_batch(r_data)
                new_reward, loss_r = reward_step(new_reward, learner.q, batch, config.reward, config.gamma)
        except DivergenceError as exc:
            raise DivergenceError(f"outer iteration {k}: {exc}", iteration=k, report=report) from exc

        delta = float(np.max(np.abs(new_reward - reward)))
        ratio = None
        if prev_delta is not None and prev_delta > 0:
            ratio = delta / prev_delta
        elapsed = (time.perf_counter() - t0) * 1e3 if config.record_timing else None
        report.records.append(
            IterationRecord(
                k,
                loss_be,
                loss_cql,
                loss_r,
                expert_log_likelihood(learner.q, expert),
                delta,
                ratio,
                elapsed,
            )
        )
        report.samples_consumed += config.cql.k_q * q_batch_n + config.reward.k_r * r_batch_n
        reward = new_reward
        if config.keep_history:
            report.reward_history.append(reward.copy())
        prev_delta = delta
        if delta < config.theta_tol:
            report.status = CONVERGED
            break
    else:
        if warn and config.max_outer_iters > 0:
            warnings.warn(
                f"BiCQL did not converge within {config.max_outer_iters} outer iterations "
                f"(last delta {prev_delta:.3e})",
                RuntimeWarning,
                stacklevel=2,
            )
    return reward, learner.q, report


def fixed_point_residuals(reward, q, dataset, expert, config):
    """Sup-norm movement of each level when re-run from the given pair.

    The lower residual re-solves ``k_q`` CQL steps from ``q`` (target synced
    to ``q``); the upper residual applies ``k_r`` fresh reward steps against
    ``q``.
    """
    sampler = BatchSampler(config.cql.batch_size, rng_seed=config.seed)
    state, _, _ = solve_lower_level_with_losses(reward, dataset, config.cql, config.gamma, q, sampler)
    lower = float(np.max(np.abs(state.q - q)))

    r_data = expert if config.reward.source == EXPERT_ONLY else dataset
    r_sampler = BatchSampler(config.reward.batch_size, rng_seed=config.seed)
    new = reward
    for _ in range(config.reward.k_r):
        new, _ = reward_step(new, q, r_sampler.next_batch(r_data), config.reward, config.gamma)
    upper = float(np.max(np.abs(new - reward)))
    return lower, upper


def contraction_summary(report, tail_fraction=0.5):
    """Median and max of the contraction ratios over the tail of a run."""
    if len(report) < 3:
        raise InvalidInputError("contraction summary needs at least 3 iterations")
    if not 0.0 < tail_fraction <= 1.0:
        raise InvalidInputError("tail_fraction must lie in (0, 1]")
    n_tail = max(1, math.ceil(tail_fraction * len(report)))
    ratios = [r.ratio for r in report.records[-n_tail:] if r.ratio is not None and np.isfinite(r.ratio)]
    if not ratios:
        raise InvalidInputError("no defined contraction ratios in the tail")
    return float(np.median(ratios)), float(np.max(ratios))


def report_from_deltas(deltas):
    """Minimal report holding only the given reward deltas (for diagnostics)."""
    report = TrainReport()
    prev = None
    for i, d in enumerate(deltas, start=1):
        ratio = d / prev if prev else None
        report.records.append(IterationRecord(i, 0.0, 0.0, 0.0, 0.0, float(d), ratio, None))
        prev = d
    return report


class ResultSink:
    """Append-only, thread-safe collection of sweep results."""

    def __init__(self):
        self._lock = threading.Lock()
        self._items = []

    def append(self, item):
        with self._lock:
            self._items.append(item)

    def items(self):
        with self._lock:
            return list(self._items)


def sweep(mdp_shape, dataset, expert, config, seeds, max_workers=None, sink=None):
    """Run :func:`run_bicql` once per seed, in parallel threads.

    Returns a list of ``(seed, reward, q, report)`` ordered by ``seeds``.
    """
    sink = sink if sink is not None else ResultSink()

    def one(seed):
        # catch_warnings is not thread-safe, so opt out explicitly
        out = run_bicql(mdp_shape, dataset, expert, replace(config, seed=seed), warn=False)
        sink.append((seed, *out))
        return seed

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        list(pool.map(one, seeds))
    by_seed = {item[0]: item for item in sink.items()}
    return [by_seed[s] for s in seeds]
