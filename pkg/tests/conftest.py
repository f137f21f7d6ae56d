import sys
from pathlib import Path

import numpy as np
import pytest

from bicql.cli import build_problem
from bicql.config import load_config
from bicql.mdp import FiniteMdp


def one_state_mdp(n_actions=1, gamma=0.9):
    return FiniteMdp(np.ones((1, n_actions, 1)), np.ones(1), gamma)


def chain_mdp(gamma=0.5):
    """s0 -> s1 -> s1 under every action, start at s0."""
    P = np.zeros((2, 1, 2))
    P[0, 0, 1] = 1.0
    P[1, 0, 1] = 1.0
    return FiniteMdp(P, np.array([1.0, 0.0]), gamma)


def random_q(rng, shape, scale=3.0):
    return rng.normal(scale=scale, size=shape)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


DEMO_CONFIG = Path(__file__).resolve().parent.parent / "demos" / "gridworld.cfg"


def acceptance_cfg(**overrides):
    """The shipped gridworld config with dotted-key overrides (``data__seed=3``)."""
    cfg = load_config(DEMO_CONFIG)
    for k, v in overrides.items():
        cfg[k.replace("__", ".")] = v
    return cfg


def acceptance_problem(**overrides):
    """``(cfg, mdp, true_reward, expert, dataset, demos)`` with the expert merged in."""
    cfg = acceptance_cfg(**overrides)
    mdp, reward, expert, offline, demos = build_problem(cfg)
    dataset = offline.concat(demos) if cfg["data.merge_expert"] else offline
    return cfg, mdp, reward, expert, dataset, demos


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(results, key=lambda k: int(k[1:])):
        terminalreporter.write_line(results[name])
