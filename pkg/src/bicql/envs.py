"""Benchmark MDP constructors and soft-optimal experts."""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .mdp import FiniteMdp, boltzmann_policy, soft_value_iteration

# action order for gridworlds: (dx, dy)
GRID_MOVES = ((0, 1), (0, -1), (-1, 0), (1, 0))
GRID_ACTION_NAMES = ("up", "down", "left", "right")


@dataclass(frozen=True)
class GridworldSpec:
    width: int
    height: int
    goal_cells: tuple = ((-1, -1),)
    slip_prob: float = 0.0
    step_reward: float = -0.01
    goal_reward: float = 1.0
    start_cells: tuple = ((0, 0),)
    discount: float = 0.95

    def __post_init__(self):
        goals = tuple(tuple(int(v) for v in g) for g in self.goal_cells)
        # (-1, -1) is shorthand for the far corner
        goals = tuple(
            (self.width - 1, self.height - 1) if g == (-1, -1) else g for g in goals
        )
        object.__setattr__(self, "goal_cells", goals)
        object.__setattr__(self, "start_cells", tuple(tuple(int(v) for v in c) for c in self.start_cells))

    def validate(self):
        if self.width < 1 or self.height < 1 or self.width * self.height < 2:
            raise InvalidInputError("gridworld needs width, height >= 1 and at least 2 cells")
        if not 0.0 <= self.slip_prob < 1.0:
            raise InvalidInputError("slip_prob must lie in [0, 1)")
        for x, y in self.goal_cells + self.start_cells:
            if not (0 <= x < self.width and 0 <= y < self.height):
                raise InvalidInputError(f"cell {(x, y)} outside a {self.width}x{self.height} grid")
        if not self.start_cells:
            raise InvalidInputError("at least one start cell is required")

    def state_index(self, x, y):
        return y * self.width + x

    def cell(self, state):
        return state % self.width, state // self.width


def build_gridworld(spec):
    """Slippery 4-action gridworld with absorbing goal cells.

    Returns ``(mdp, reward)``. The intended move succeeds with probability
    ``1 - slip_prob``; otherwise one of the other three directions is taken
    uniformly. Moves off the grid leave the agent in place.
    """
    spec.validate()
    n = spec.width * spec.height
    n_actions = len(GRID_MOVES)
    goals = {spec.state_index(x, y) for x, y in spec.goal_cells}
    P = np.zeros((n, n_actions, n))
    for s in range(n):
        if s in goals:
            P[s, :, s] = 1.0
            continue
        x, y = spec.cell(s)
        for a in range(n_actions):
            for b, (dx, dy) in enumerate(GRID_MOVES):
                p = 1.0 - spec.slip_prob if b == a else spec.slip_prob / (n_actions - 1)
                if p == 0.0:
                    continue
                nx, ny = x + dx, y + dy
                if not (0 <= nx < spec.width and 0 <= ny < spec.height):
                    nx, ny = x, y
                P[s, a, spec.state_index(nx, ny)] += p
    reward = np.full((n, n_actions), float(spec.step_reward))
    for g in goals:
        reward[g, :] = spec.goal_reward
    mu = np.zeros(n)
    for x, y in spec.start_cells:
        mu[spec.state_index(x, y)] += 1.0
    mu /= mu.sum()
    return FiniteMdp(P, mu, spec.discount), reward


def build_random_mdp(n_states, n_actions, branching, reward_scale=1.0, seed=0, discount=0.9):
    """Random sparse MDP: each (s, a) reaches ``branching`` successors.

    Successor probabilities are Dirichlet(1, ..., 1); rewards are uniform in
    ``[-reward_scale, reward_scale]``; the initial distribution is uniform.
    """
    if n_states < 1 or n_actions < 1:
        raise InvalidInputError("n_states and n_actions must be positive")
    if not 1 <= branching <= n_states:
        raise InvalidInputError("branching must lie in [1, n_states]")
    if reward_scale <= 0:
        raise InvalidInputError("reward_scale must be positive")
    rng = np.random.default_rng(seed)
    P = np.zeros((n_states, n_actions, n_states))
    for s in range(n_states):
        for a in range(n_actions):
            succ = rng.choice(n_states, size=branching, replace=False)
            P[s, a, succ] = rng.dirichlet(np.ones(branching))
    reward = rng.uniform(-reward_scale, reward_scale, size=(n_states, n_actions))
    mu = np.full(n_states, 1.0 / n_states)
    return FiniteMdp(P, mu, discount), reward


def build_deterministic_random_mdp(n_states, n_actions, reward_scale=1.0, seed=0, discount=0.9):
    """Random MDP where every (s, a) has a single successor."""
    return build_random_mdp(n_states, n_actions, 1, reward_scale, seed, discount)


@dataclass
class ExpertSpec:
    """Soft-optimal expert; its policy is ``boltzmann_policy(source_q)``."""

    source_q: np.ndarray
    policy: np.ndarray = field(init=False)

    def __post_init__(self):
        self.source_q = np.asarray(self.source_q, dtype=float)
        self.policy = boltzmann_policy(self.source_q)

    def low_temperature(self, scale=10.0):
        """Expert built from ``scale * source_q`` (a sharper, near-greedy policy)."""
        return ExpertSpec(scale * self.source_q)


def make_expert(mdp, true_reward, tol=1e-10, max_iters=100_000):
    q = soft_value_iteration(mdp, true_reward, tol=tol, max_iters=max_iters)
    return ExpertSpec(q)


def mixed_policy(policy, uniform_weight):
    """``(1 - w) * policy + w * uniform``."""
    if not 0.0 <= uniform_weight <= 1.0:
        raise InvalidInputError("uniform_weight must lie in [0, 1]")
    policy = np.asarray(policy, dtype=float)
    return (1.0 - uniform_weight) * policy + uniform_weight / policy.shape[1]


def uniform_policy(n_states, n_actions):
    return np.full((n_states, n_actions), 1.0 / n_actions)
