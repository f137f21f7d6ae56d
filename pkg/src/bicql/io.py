"""CSV storage for MDPs and (state, action) tables.

Numbers are written with 17 significant digits so files round-trip exactly.
"""

import csv
from pathlib import Path

import numpy as np

from .errors import DatasetParseError
from .mdp import FiniteMdp

MDP_HEADER = ("kind", "state", "action", "next_state", "value")
TABLE_HEADER = ("state", "action", "value")


def fmt(x):
    return format(float(x), ".17g")


def save_mdp(mdp, reward, path):
    """Dump dynamics, initial distribution, discount and reward in one file."""
    lines = [",".join(MDP_HEADER), f"shape,{mdp.n_states},{mdp.n_actions},,", f"discount,,,,{fmt(mdp.discount)}"]
    for s in np.flatnonzero(mdp.initial_dist):
        lines.append(f"initial,{s},,,{fmt(mdp.initial_dist[s])}")
    for s, a, t in zip(*np.nonzero(mdp.transitions)):
        lines.append(f"transition,{s},{a},{t},{fmt(mdp.transitions[s, a, t])}")
    for s in range(mdp.n_states):
        for a in range(mdp.n_actions):
            lines.append(f"reward,{s},{a},,{fmt(reward[s, a])}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_mdp(path):
    """Inverse of :func:`save_mdp`; returns ``(mdp, reward)``."""
    path = Path(path)
    P = mu = reward = None
    discount = None
    with path.open(encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = tuple(next(reader, ()))
        if header != MDP_HEADER:
            raise DatasetParseError("unexpected header", path, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise DatasetParseError(f"expected 5 fields, got {len(row)}", path, lineno)
            kind = row[0]
            try:
                if kind == "shape":
                    n_s, n_a = int(row[1]), int(row[2])
                    P = np.zeros((n_s, n_a, n_s))
                    mu = np.zeros(n_s)
                    reward = np.zeros((n_s, n_a))
                elif P is None:
                    raise DatasetParseError("shape row must come first", path, lineno)
                elif kind == "discount":
                    discount = float(row[4])
                elif kind == "initial":
                    mu[int(row[1])] = float(row[4])
                elif kind == "transition":
                    P[int(row[1]), int(row[2]), int(row[3])] = float(row[4])
                elif kind == "reward":
                    reward[int(row[1]), int(row[2])] = float(row[4])
                else:
                    raise DatasetParseError(f"unknown row kind {kind!r}", path, lineno)
            except (ValueError, IndexError) as exc:
                raise DatasetParseError(f"bad {kind} row: {exc}", path, lineno) from None
    if P is None or discount is None:
        raise DatasetParseError("missing shape or discount row", path)
    return FiniteMdp(P, mu, discount), reward


def save_table(table, path):
    table = np.asarray(table, dtype=float)
    lines = [",".join(TABLE_HEADER)]
    for s in range(table.shape[0]):
        for a in range(table.shape[1]):
            lines.append(f"{s},{a},{fmt(table[s, a])}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_table(path, shape):
    path = Path(path)
    table = np.full(shape, np.nan)
    with path.open(encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        if tuple(next(reader, ())) != TABLE_HEADER:
            raise DatasetParseError("unexpected header", path, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                s, a, v = int(row[0]), int(row[1]), float(row[2])
                table[s, a] = v
            except (ValueError, IndexError):
                raise DatasetParseError(f"bad row {row!r}", path, lineno) from None
    if np.isnan(table).any():
        raise DatasetParseError("table is missing entries", path)
    return table
