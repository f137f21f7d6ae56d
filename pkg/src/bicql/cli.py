"""Command-line entry point: ``bicql {gen,train,eval,diagnose} --config FILE``.

Exit codes: 0 success, 1 error (or failed diagnostic), 2 training finished
without meeting the convergence tolerance.
"""

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .baselines import BcConfig, behavioral_cloning
from .data import collect_expert_demos, collect_transitions, load_dataset, save_dataset
from .driver import (
    contraction_summary,
    fixed_point_residuals,
    read_report_csv,
    run_bicql,
)
from .envs import build_gridworld, build_random_mdp, make_expert, mixed_policy
from .errors import DatasetParseError, DivergenceError, InvalidInputError, InvalidStateError, NonConvergenceError
from .evaluation import EVAL_FIELDS, evaluate_run
from .io import fmt, load_mdp, load_table, save_mdp, save_table

OUTPUT_DIR_ENV = "BICQL_OUTPUT_DIR"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2


class CliError(RuntimeError):
    pass


def output_dir(cfg):
    return Path(os.environ.get(OUTPUT_DIR_ENV) or cfg["run.output_dir"])


def seed_suffix(cfg, seed):
    return "" if len(cfg["run.seeds"]) == 1 else f"_seed{seed}"


def build_env(cfg):
    if cfg["env.kind"] == "gridworld":
        return build_gridworld(cfgmod.gridworld_spec(cfg))
    return build_random_mdp(
        cfg["env.n_states"],
        cfg["env.n_actions"],
        cfg["env.branching"],
        cfg["env.reward_scale"],
        seed=cfg["env.seed"],
        discount=cfg["env.gamma"],
    )


def _require(path):
    if not path.exists():
        raise CliError(f"missing required file: {path}")
    return path


def _echo_config(cfg, out):
    (out / "config_effective.cfg").write_text(cfgmod.dump_config(cfg), encoding="utf-8")


def _load_inputs(cfg, out):
    mdp, true_reward = load_mdp(_require(out / "mdp.csv"))
    dataset = load_dataset(_require(out / "offline.csv"), *mdp.shape)
    expert = load_dataset(_require(out / "expert.csv"), *mdp.shape)
    if len(dataset) == 0 or len(expert) == 0:
        raise CliError("training needs non-empty offline.csv and expert.csv")
    if cfg["data.merge_expert"]:
        dataset = dataset.concat(expert)
    return mdp, true_reward, dataset, expert


def build_problem(cfg):
    """Environment, expert and both datasets exactly as ``gen`` writes them.

    Returns ``(mdp, true_reward, expert, offline, demos)``.
    """
    mdp, reward = build_env(cfg)
    expert = make_expert(mdp, reward)
    behavior = mixed_policy(expert.policy, cfg["data.behavior_uniform_mix"])
    d_seq, e_seq = np.random.SeedSequence(cfg["data.seed"]).spawn(2)
    offline = collect_transitions(mdp, behavior, cfg["data.n_episodes"], cfg["data.horizon"], seed=d_seq)
    demos = collect_expert_demos(
        mdp, expert, cfg["data.n_expert_trajectories"], cfg["data.expert_horizon"], seed=e_seq
    )
    return mdp, reward, expert, offline, demos


def cmd_gen(cfg):
    out = output_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    mdp, reward, _, offline, demos = build_problem(cfg)
    save_mdp(mdp, reward, out / "mdp.csv")
    save_dataset(offline, out / "offline.csv")
    save_dataset(demos, out / "expert.csv")
    _echo_config(cfg, out)
    print(f"mdp: {mdp.n_states} states x {mdp.n_actions} actions")
    print(f"offline.csv: {len(offline)} records")
    print(f"expert.csv: {len(demos)} records")
    return EXIT_OK


def _write_history(history, path):
    lines = ["iter,state,action,value"]
    for k, table in enumerate(history):
        for (s, a), v in np.ndenumerate(table):
            lines.append(f"{k},{s},{a},{fmt(v)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _read_history(path, shape):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    n_iter = int(data[:, 0].max()) + 1 if len(data) else 0
    history = [np.zeros(shape) for _ in range(n_iter)]
    for k, s, a, v in data:
        history[int(k)][int(s), int(a)] = v
    return history


def cmd_train(cfg):
    out = output_dir(cfg)
    mdp, _, dataset, expert = _load_inputs(cfg, out)
    _echo_config(cfg, out)

    def one(seed):
        sfx = seed_suffix(cfg, seed)
        tc = cfgmod.train_config(cfg, seed=seed)
        try:
            reward, q, report = run_bicql(mdp.shape, dataset, expert, tc, warn=False)
        except DivergenceError as exc:
            if exc.report is not None:
                exc.report.write_csv(out / f"train_report{sfx}.csv")
            return seed, "diverged", str(exc)
        save_table(reward, out / f"reward_learned{sfx}.csv")
        save_table(q, out / f"q_learned{sfx}.csv")
        report.write_csv(out / f"train_report{sfx}.csv")
        if tc.keep_history:
            _write_history(report.reward_history, out / f"reward_history{sfx}.csv")
        return seed, report.status, f"{len(report)} outer iterations"

    seeds = cfg["run.seeds"]
    workers = max(1, cfg["train.workers"])
    if workers == 1 or len(seeds) == 1:
        results = [one(s) for s in seeds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, seeds))

    code = EXIT_OK
    for seed, status, detail in results:
        print(f"seed {seed}: {status} ({detail})")
        if status == "diverged":
            code = EXIT_ERROR
        elif status != "converged" and code == EXIT_OK:
            code = EXIT_NOT_CONVERGED
    return code


def cmd_eval(cfg):
    out = output_dir(cfg)
    mdp, true_reward, dataset, expert_data = _load_inputs(cfg, out)
    expert = make_expert(mdp, true_reward)
    bc = None
    if cfg["eval.bc"]:
        bc = behavioral_cloning(expert_data, *mdp.shape, BcConfig(cfg["eval.bc_alpha"]))

    include_bc = bc is not None
    columns = ["seed"] + [k for k in EVAL_FIELDS if include_bc or not k.startswith("bc_")]
    rows = [",".join(columns)]
    kv = []
    for seed in cfg["run.seeds"]:
        sfx = seed_suffix(cfg, seed)
        history = None
        samples = None
        if cfg["eval.use_true_reward"]:
            learned, q = true_reward, expert.source_q
        else:
            learned = load_table(_require(out / f"reward_learned{sfx}.csv"), mdp.shape)
            q = load_table(_require(out / f"q_learned{sfx}.csv"), mdp.shape)
            if cfg["eval.convergence_speed"]:
                history = _read_history(_require(out / f"reward_history{sfx}.csv"), mdp.shape)
            report_path = out / f"train_report{sfx}.csv"
            if report_path.exists():
                tc = cfgmod.train_config(cfg, seed=seed)
                n_iter = len(read_report_csv(report_path))
                n_r = len(expert_data) if tc.reward.source == "expert_only" else len(dataset)
                samples = n_iter * (
                    tc.cql.k_q * (tc.cql.batch_size or len(dataset)) + tc.reward.k_r * (tc.reward.batch_size or n_r)
                )
        report = evaluate_run(
            mdp,
            true_reward,
            learned,
            q,
            expert.policy,
            expert_data,
            dataset,
            tie_tol=cfg["eval.tie_tol"],
            bc_policy=bc,
            reward_history=history,
            samples_consumed=samples,
        )
        fields = report.fields(include_bc)
        rows.append(",".join([str(seed)] + [_cell(fields[c]) for c in columns[1:]]))
        kv.append(f"seed = {seed}\n" + report.to_kv(include_bc))
        print(f"seed {seed}: normalized_score = {_cell(report.normalized_score)}")
    (out / "eval_report.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    (out / "eval_report.txt").write_text("\n".join(kv), encoding="utf-8")
    return EXIT_OK


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return fmt(v)


def cmd_diagnose(cfg):
    out = output_dir(cfg)
    mdp, _, dataset, expert_data = _load_inputs(cfg, out)
    rows = ["seed,lower_residual,upper_residual,median_ratio,max_ratio,passed"]
    all_ok = True
    for seed in cfg["run.seeds"]:
        sfx = seed_suffix(cfg, seed)
        reward = load_table(_require(out / f"reward_learned{sfx}.csv"), mdp.shape)
        q = load_table(_require(out / f"q_learned{sfx}.csv"), mdp.shape)
        tc = cfgmod.train_config(cfg, seed=seed)
        lower, upper = fixed_point_residuals(reward, q, dataset, expert_data, tc)
        med = mx = None
        report_path = out / f"train_report{sfx}.csv"
        if report_path.exists():
            try:
                med, mx = contraction_summary(read_report_csv(report_path), cfg["diagnose.tail_fraction"])
            except InvalidInputError:
                pass
        ok = lower <= cfg["diagnose.lower_tol"] and upper <= cfg["diagnose.upper_tol"]
        all_ok &= ok
        rows.append(",".join([str(seed), fmt(lower), fmt(upper), _cell(med), _cell(mx), str(ok).lower()]))
        print(f"seed {seed}: lower={lower:.3e} upper={upper:.3e} {'ok' if ok else 'FAILED'}")
    (out / "diagnostics.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    if not all_ok:
        print("diagnostic failed: residuals above thresholds", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "train": cmd_train, "eval": cmd_eval, "diagnose": cmd_diagnose}


def build_parser():
    parser = argparse.ArgumentParser(prog="bicql", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = cfgmod.load_config(args.config)
        return COMMANDS[args.command](cfg)
    except (
        cfgmod.ConfigError,
        CliError,
        DatasetParseError,
        InvalidInputError,
        InvalidStateError,
        NonConvergenceError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
