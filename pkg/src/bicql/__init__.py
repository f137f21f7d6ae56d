"""Bi-level offline inverse RL (conservative soft Q-learning + reward regression) on finite MDPs."""

from .baselines import BcConfig, behavioral_cloning
from .cql import (
    CqlConfig,
    QLearnerState,
    bellman_error_loss,
    cql_regularizer,
    q_step,
    solve_lower_level,
)
from .data import (
    BatchSampler,
    ExpertDataset,
    TransitionDataset,
    collect_expert_demos,
    collect_transitions,
    load_dataset,
    next_batch,
    save_dataset,
)
from .driver import (
    TrainConfig,
    TrainReport,
    contraction_summary,
    fixed_point_residuals,
    run_bicql,
    sweep,
)
from .envs import (
    ExpertSpec,
    GridworldSpec,
    build_gridworld,
    build_random_mdp,
    make_expert,
    mixed_policy,
    uniform_policy,
)
from .errors import (
    DatasetParseError,
    DivergenceError,
    InvalidInputError,
    InvalidStateError,
    NonConvergenceError,
)
from .evaluation import (
    EvalReport,
    evaluate_learned_reward,
    expert_optimality_check,
    reward_recovery_stats,
)
from .mdp import (
    FiniteMdp,
    boltzmann_policy,
    exact_policy_return,
    greedy_action_set,
    soft_value,
    soft_value_iteration,
)
from .reward import (
    RewardConfig,
    expert_log_likelihood,
    reward_regression_loss,
    reward_step,
    soft_advantage_target,
)

__all__ = [
    "BatchSampler",
    "BcConfig",
    "CqlConfig",
    "DatasetParseError",
    "DivergenceError",
    "EvalReport",
    "ExpertDataset",
    "ExpertSpec",
    "FiniteMdp",
    "GridworldSpec",
    "InvalidInputError",
    "InvalidStateError",
    "NonConvergenceError",
    "QLearnerState",
    "RewardConfig",
    "TrainConfig",
    "TrainReport",
    "TransitionDataset",
    "behavioral_cloning",
    "bellman_error_loss",
    "boltzmann_policy",
    "build_gridworld",
    "build_random_mdp",
    "collect_expert_demos",
    "collect_transitions",
    "contraction_summary",
    "cql_regularizer",
    "evaluate_learned_reward",
    "exact_policy_return",
    "expert_log_likelihood",
    "expert_optimality_check",
    "fixed_point_residuals",
    "greedy_action_set",
    "load_dataset",
    "make_expert",
    "mixed_policy",
    "next_batch",
    "q_step",
    "reward_recovery_stats",
    "reward_regression_loss",
    "reward_step",
    "run_bicql",
    "save_dataset",
    "soft_advantage_target",
    "soft_value",
    "soft_value_iteration",
    "solve_lower_level",
    "sweep",
    "uniform_policy",
]

__version__ = "0.1.0"
