"""Offline transition datasets, expert demonstrations, CSV storage and batching."""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DatasetParseError, InvalidInputError, InvalidStateError


@dataclass(frozen=True)
class TransitionDataset:
    """Ordered ``(state, action, next_state)`` records stored column-wise.

    ``next_states`` may be None for expert data collected without it.
    ``weights``, when set, replaces the uniform ``1/B`` averaging in the loss
    functions (used for exact full-batch expectations).
    """

    states: np.ndarray
    actions: np.ndarray
    next_states: np.ndarray | None = None
    weights: np.ndarray | None = None

    def __post_init__(self):
        s = np.asarray(self.states, dtype=np.int64).reshape(-1)
        a = np.asarray(self.actions, dtype=np.int64).reshape(-1)
        if s.shape != a.shape:
            raise InvalidInputError("states and actions must have equal length")
        object.__setattr__(self, "states", s)
        object.__setattr__(self, "actions", a)
        if self.next_states is not None:
            sn = np.asarray(self.next_states, dtype=np.int64).reshape(-1)
            if sn.shape != s.shape:
                raise InvalidInputError("next_states must match states in length")
            object.__setattr__(self, "next_states", sn)
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float).reshape(-1)
            if w.shape != s.shape:
                raise InvalidInputError("weights must match states in length")
            object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.states.shape[0]

    @property
    def has_next_state(self):
        return self.next_states is not None

    def records(self):
        if self.next_states is None:
            return list(zip(self.states.tolist(), self.actions.tolist()))
        return list(zip(self.states.tolist(), self.actions.tolist(), self.next_states.tolist()))

    @classmethod
    def from_records(cls, records):
        records = list(records)
        if not records:
            return cls(np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0, np.int64))
        arr = np.asarray(records, dtype=np.int64)
        if arr.shape[1] == 2:
            return cls(arr[:, 0], arr[:, 1])
        return cls(arr[:, 0], arr[:, 1], arr[:, 2])

    def subset(self, idx):
        return type(self)(
            self.states[idx],
            self.actions[idx],
            None if self.next_states is None else self.next_states[idx],
        )

    def concat(self, other):
        if self.has_next_state != other.has_next_state:
            raise InvalidInputError("cannot concatenate datasets with and without next_state")
        ns = None
        if self.has_next_state:
            ns = np.concatenate([self.next_states, other.next_states])
        return type(self)(
            np.concatenate([self.states, other.states]),
            np.concatenate([self.actions, other.actions]),
            ns,
        )

    def validate(self, n_states, n_actions, require_next_state=False, allow_empty=False):
        if not allow_empty and len(self) == 0:
            raise InvalidStateError("dataset is empty")
        if require_next_state and not self.has_next_state:
            raise InvalidInputError("records must carry next_state")
        bad = (self.states < 0) | (self.states >= n_states) | (self.actions < 0) | (self.actions >= n_actions)
        if self.has_next_state:
            bad |= (self.next_states < 0) | (self.next_states >= n_states)
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise InvalidInputError(f"record {i} has indices outside ({n_states}, {n_actions})")

    def aggregated(self):
        """Collapse duplicate records into unique ones carrying empirical weights.

        Losses evaluated on the result equal losses on the full dataset with
        uniform averaging, at a fraction of the cost. Existing weights are
        summed per record and renormalized.
        """
        if len(self) == 0:
            raise InvalidStateError("dataset is empty")
        cols = [self.states, self.actions]
        if self.has_next_state:
            cols.append(self.next_states)
        keys = np.stack(cols, axis=1)
        uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
        w = np.ones(len(self)) if self.weights is None else np.asarray(self.weights, dtype=float)
        mass = np.bincount(inverse.ravel(), weights=w, minlength=len(uniq))
        return type(self)(
            uniq[:, 0],
            uniq[:, 1],
            uniq[:, 2] if self.has_next_state else None,
            weights=mass / w.sum(),
        )

    def state_action_counts(self, n_states, n_actions):
        flat = self.states * n_actions + self.actions
        return np.bincount(flat, minlength=n_states * n_actions).reshape(n_states, n_actions)


# expert demonstrations share the same storage; the alias documents intent
ExpertDataset = TransitionDataset


def _rollout(mdp, policy, n_episodes, horizon, rng):
    if horizon < 1:
        raise InvalidInputError("horizon must be >= 1")
    if n_episodes < 0:
        raise InvalidInputError("n_episodes must be >= 0")
    policy = np.asarray(policy, dtype=float)
    if policy.shape != mdp.shape:
        raise InvalidInputError("policy shape does not match the mdp")
    pol_cdf = np.cumsum(policy, axis=1)
    P_cdf = np.cumsum(mdp.transitions, axis=2)
    mu_cdf = np.cumsum(mdp.initial_dist)

    def draw(cdf_rows, u):
        # clamp guards against cdf rows summing to 1 - eps
        idx = (u[:, None] >= cdf_rows).sum(axis=1)
        return np.minimum(idx, cdf_rows.shape[1] - 1)

    S = np.empty((n_episodes, horizon), np.int64)
    A = np.empty_like(S)
    S2 = np.empty_like(S)
    s = draw(np.broadcast_to(mu_cdf, (n_episodes, mu_cdf.size)), rng.random(n_episodes))
    for t in range(horizon):
        a = draw(pol_cdf[s], rng.random(n_episodes))
        s2 = draw(P_cdf[s, a], rng.random(n_episodes))
        S[:, t], A[:, t], S2[:, t] = s, a, s2
        s = s2
    return S.reshape(-1), A.reshape(-1), S2.reshape(-1)


def collect_transitions(mdp, behavior, n_episodes, horizon, seed=0):
    """Roll out ``behavior`` for ``n_episodes`` of fixed length; episode-major order."""
    rng = np.random.default_rng(seed)
    return TransitionDataset(*_rollout(mdp, behavior, n_episodes, horizon, rng))


def collect_expert_demos(mdp, expert, n_trajectories, horizon, seed=0):
    """Expert trajectories from the Boltzmann policy of ``expert.source_q``."""
    rng = np.random.default_rng(seed)
    return TransitionDataset(*_rollout(mdp, expert.policy, n_trajectories, horizon, rng))


HEADER_FULL = ("state", "action", "next_state")
HEADER_PAIRS = ("state", "action")


def save_dataset(dataset, path):
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(HEADER_FULL if dataset.has_next_state else HEADER_PAIRS)
        w.writerows(dataset.records())


def load_dataset(path, n_states=None, n_actions=None):
    """Read a dataset written by :func:`save_dataset`.

    Errors name the offending line (1-based, header is line 1).
    """
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        try:
            header = tuple(h.strip() for h in next(reader))
        except StopIteration:
            raise DatasetParseError("missing header", path, 1) from None
        if header not in (HEADER_FULL, HEADER_PAIRS):
            raise DatasetParseError(f"unexpected header {','.join(header)!r}", path, 1)
        width = len(header)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != width:
                raise DatasetParseError(f"expected {width} fields, got {len(row)}", path, lineno)
            try:
                vals = tuple(int(c) for c in row)
            except ValueError:
                raise DatasetParseError(f"non-integer field in {row!r}", path, lineno) from None
            if any(v < 0 for v in vals):
                raise DatasetParseError(f"negative index in {row!r}", path, lineno)
            if n_states is not None and (vals[0] >= n_states or (width == 3 and vals[2] >= n_states)):
                raise DatasetParseError(f"state index out of range in {row!r}", path, lineno)
            if n_actions is not None and vals[1] >= n_actions:
                raise DatasetParseError(f"action index out of range in {row!r}", path, lineno)
            rows.append(vals)
    if not rows:
        empty = np.zeros(0, np.int64)
        return TransitionDataset(empty, empty, empty if width == 3 else None)
    arr = np.asarray(rows, dtype=np.int64)
    return TransitionDataset(arr[:, 0], arr[:, 1], arr[:, 2] if width == 3 else None)


@dataclass
class BatchSampler:
    """Seeded mini-batch stream over a dataset.

    ``batch_size=None`` yields the whole dataset as a weighted aggregate, i.e.
    the exact expectation over the empirical distribution.
    """

    batch_size: int | None
    rng_seed: int = 0
    with_replacement: bool = True
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if self.batch_size is not None and self.batch_size < 1:
            raise InvalidInputError("batch_size must be positive")
        self._rng = np.random.default_rng(self.rng_seed)
        self._full_cache = None

    def next_batch(self, dataset):
        n = len(dataset)
        if n == 0:
            raise InvalidStateError("cannot sample from an empty dataset")
        if self.batch_size is None:
            if self._full_cache is None or self._full_cache[0] is not dataset:
                self._full_cache = (dataset, dataset.aggregated())
            return self._full_cache[1]
        if self.with_replacement:
            idx = self._rng.integers(0, n, size=self.batch_size)
        else:
            if self.batch_size > n:
                raise InvalidInputError("batch_size exceeds dataset size without replacement")
            idx = self._rng.permutation(n)[: self.batch_size]
        return dataset.subset(idx)


def next_batch(sampler, dataset):
    return sampler.next_batch(dataset)
