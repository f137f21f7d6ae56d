"""Flat ``section.key = value`` run configuration files.

Unknown keys are errors. Every key has a default; :func:`dump_config` writes
the fully merged configuration back out in canonical order.
"""

from pathlib import Path

from .cql import CqlConfig
from .driver import TrainConfig
from .envs import GridworldSpec
from .reward import RewardConfig


class ConfigError(ValueError):
    def __init__(self, message, path=None, line=None):
        where = f"{path}:{line}: " if path is not None and line is not None else ""
        super().__init__(where + message)


def _bool(text):
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_int(text):
    t = text.strip().lower()
    return None if t in ("none", "full", "") else int(t)


def _opt_float(text):
    t = text.strip().lower()
    return None if t in ("none", "") else float(t)


def _cells(text):
    cells = []
    for part in text.split(";"):
        part = part.strip()
        if part:
            x, y = part.split(",")
            cells.append((int(x), int(y)))
    return tuple(cells)


def _ints(text):
    return tuple(int(p) for p in text.replace(";", ",").split(",") if p.strip())


def _fmt_value(v):
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        if v and isinstance(v[0], tuple):
            return ";".join(f"{x},{y}" for x, y in v)
        return ",".join(str(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


# key -> (default, parser)
SCHEMA = {
    "env.kind": ("gridworld", str),
    "env.gamma": (0.95, float),
    "env.width": (5, int),
    "env.height": (5, int),
    "env.goals": (((4, 4),), _cells),
    "env.starts": (((0, 0),), _cells),
    "env.slip": (0.1, float),
    "env.step_reward": (-0.01, float),
    "env.goal_reward": (1.0, float),
    "env.n_states": (10, int),
    "env.n_actions": (3, int),
    "env.branching": (3, int),
    "env.reward_scale": (1.0, float),
    "env.seed": (0, int),
    "data.n_episodes": (200, int),
    "data.horizon": (50, int),
    "data.behavior_uniform_mix": (0.5, float),
    "data.n_expert_trajectories": (10, int),
    "data.expert_horizon": (50, int),
    "data.merge_expert": (True, _bool),
    "data.seed": (0, int),
    "train.alpha": (1.0, float),
    "train.lr_q": (0.1, float),
    "train.target_sync_period": (50, int),
    "train.k_q": (500, int),
    "train.batch_size_q": (None, _opt_int),
    "train.lr_r": (1.0, float),
    "train.k_r": (100, int),
    "train.batch_size_r": (None, _opt_int),
    "train.source": ("expert_only", str),
    "train.r_max": (None, _opt_float),
    "train.max_outer_iters": (200, int),
    "train.theta_tol": (1e-4, float),
    "train.reward_init": ("zeros", str),
    "train.reward_init_scale": (0.1, float),
    "train.record_timing": (False, _bool),
    "train.workers": (1, int),
    "eval.bc": (True, _bool),
    "eval.bc_alpha": (0.5, float),
    "eval.tie_tol": (1e-3, float),
    "eval.use_true_reward": (False, _bool),
    "eval.convergence_speed": (False, _bool),
    "diagnose.lower_tol": (1e-2, float),
    "diagnose.upper_tol": (1e-3, float),
    "diagnose.tail_fraction": (0.5, float),
    "run.output_dir": ("out", str),
    "run.seeds": ((0,), _ints),
}

# one-trajectory and ten-trajectory expert presets
EXPERT_PRESETS = {"low": 1, "medium": 10}


def defaults():
    return {k: v[0] for k, v in SCHEMA.items()}


def parse_config_text(text, path=None):
    cfg = defaults()
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'section.key = value', got {raw!r}", path, lineno)
        key, value = (p.strip() for p in line.split("=", 1))
        if key == "data.expert_preset":
            if value not in EXPERT_PRESETS:
                raise ConfigError(f"unknown expert preset {value!r}", path, lineno)
            cfg["data.n_expert_trajectories"] = EXPERT_PRESETS[value]
            continue
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}", path, lineno)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r}", path, lineno)
        seen.add(key)
        try:
            cfg[key] = SCHEMA[key][1](value)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value for {key}: {exc}", path, lineno) from None
    _validate(cfg, path)
    return cfg


def _validate(cfg, path):
    if cfg["env.kind"] not in ("gridworld", "random"):
        raise ConfigError(f"env.kind must be gridworld or random, got {cfg['env.kind']!r}", path)
    if not cfg["run.seeds"]:
        raise ConfigError("run.seeds must list at least one seed", path)
    try:
        train_config(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc), path) from None


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text, path)


def dump_config(cfg):
    return "".join(f"{k} = {_fmt_value(cfg[k])}\n" for k in SCHEMA)


def gridworld_spec(cfg):
    return GridworldSpec(
        width=cfg["env.width"],
        height=cfg["env.height"],
        goal_cells=cfg["env.goals"],
        slip_prob=cfg["env.slip"],
        step_reward=cfg["env.step_reward"],
        goal_reward=cfg["env.goal_reward"],
        start_cells=cfg["env.starts"],
        discount=cfg["env.gamma"],
    )


def train_config(cfg, seed=None):
    return TrainConfig(
        gamma=cfg["env.gamma"],
        cql=CqlConfig(
            alpha=cfg["train.alpha"],
            lr_q=cfg["train.lr_q"],
            target_sync_period=cfg["train.target_sync_period"],
            k_q=cfg["train.k_q"],
            batch_size=cfg["train.batch_size_q"],
        ),
        reward=RewardConfig(
            lr_r=cfg["train.lr_r"],
            k_r=cfg["train.k_r"],
            source=cfg["train.source"],
            batch_size=cfg["train.batch_size_r"],
            r_max=cfg["train.r_max"],
        ),
        max_outer_iters=cfg["train.max_outer_iters"],
        theta_tol=cfg["train.theta_tol"],
        seed=cfg["run.seeds"][0] if seed is None else seed,
        reward_init=cfg["train.reward_init"],
        reward_init_scale=cfg["train.reward_init_scale"],
        record_timing=cfg["train.record_timing"],
        keep_history=cfg["eval.convergence_speed"],
    )
