import numpy as np
import pytest

from bicql.cli import EXIT_ERROR, EXIT_NOT_CONVERGED, EXIT_OK, main
from bicql.config import ConfigError, dump_config, load_config, parse_config_text
from bicql.data import load_dataset
from bicql.driver import read_report_csv
from bicql.io import load_mdp, load_table

SMALL = """\
env.width = 3
env.height = 3
env.goals = 2,2
data.n_episodes = 20
data.horizon = 10
data.n_expert_trajectories = 2
data.expert_horizon = 10
train.lr_q = 2.0
train.target_sync_period = 10
train.k_q = 50
train.k_r = 20
train.source = full_dataset
train.max_outer_iters = {iters}
run.output_dir = {out}
"""


def write_cfg(tmp_path, iters=5, extra="", name="run.cfg", out=None):
    out = out or (tmp_path / "out")
    path = tmp_path / name
    path.write_text(SMALL.format(iters=iters, out=out.as_posix()) + extra)
    return path, out


def run(cmd, cfg):
    return main([cmd, "--config", str(cfg)])


def test_gen_writes_expected_files(tmp_path, capsys):
    cfg, out = write_cfg(tmp_path, out=tmp_path / "nested" / "dir")
    assert run("gen", cfg) == EXIT_OK
    mdp, r = load_mdp(out / "mdp.csv")
    assert mdp.shape == (9, 4)
    assert len(load_dataset(out / "offline.csv")) == 200
    expert = load_dataset(out / "expert.csv")
    assert len(expert) == 20 and expert.has_next_state
    assert (out / "config_effective.cfg").exists()
    assert "offline.csv: 200 records" in capsys.readouterr().out


def test_gen_is_reproducible(tmp_path):
    cfg, out = write_cfg(tmp_path)
    run("gen", cfg)
    first = {p.name: p.read_bytes() for p in out.iterdir()}
    run("gen", cfg)
    assert {p.name: p.read_bytes() for p in out.iterdir()} == first


def test_train_eval_diagnose_pipeline(tmp_path):
    cfg, out = write_cfg(tmp_path, iters=3)
    run("gen", cfg)
    code = run("train", cfg)
    assert code in (EXIT_OK, EXIT_NOT_CONVERGED)
    for name in ("reward_learned.csv", "q_learned.csv", "train_report.csv"):
        assert (out / name).exists()
    assert run("eval", cfg) == EXIT_OK
    header = (out / "eval_report.csv").read_text().splitlines()[0].split(",")
    assert "normalized_score" in header and "bc_normalized_score" in header
    assert "normalized_score = " in (out / "eval_report.txt").read_text()
    run("diagnose", cfg)
    assert (out / "diagnostics.csv").read_text().startswith("seed,lower_residual,upper_residual")


def test_train_is_byte_identical(tmp_path):
    cfg, out = write_cfg(tmp_path, iters=3, extra="train.batch_size_q = 16\ntrain.batch_size_r = 8\n")
    run("gen", cfg)
    run("train", cfg)
    first = (out / "train_report.csv").read_bytes()
    run("train", cfg)
    assert (out / "train_report.csv").read_bytes() == first


def test_zero_iterations(tmp_path):
    cfg, out = write_cfg(tmp_path, iters=0)
    run("gen", cfg)
    assert run("train", cfg) == EXIT_NOT_CONVERGED
    np.testing.assert_array_equal(load_table(out / "reward_learned.csv", (9, 4)), 0.0)
    assert len(read_report_csv(out / "train_report.csv")) == 0
    # a report this short has no contraction ratio; the cells stay empty
    assert run("diagnose", cfg) == EXIT_ERROR
    row = (out / "diagnostics.csv").read_text().splitlines()[1].split(",")
    assert row[3] == "" and row[4] == "" and row[5] == "false"


def test_seed_suffixes(tmp_path):
    cfg, out = write_cfg(tmp_path, iters=2, extra="run.seeds = 0,1\ntrain.workers = 2\n")
    run("gen", cfg)
    run("train", cfg)
    for s in (0, 1):
        assert (out / f"reward_learned_seed{s}.csv").exists()
    assert not (out / "reward_learned.csv").exists()
    assert run("eval", cfg) == EXIT_OK
    assert len((out / "eval_report.csv").read_text().splitlines()) == 3


def test_eval_true_reward_scores_one(tmp_path):
    cfg, out = write_cfg(tmp_path, extra="eval.use_true_reward = true\n")
    run("gen", cfg)
    assert run("eval", cfg) == EXIT_OK
    lines = (out / "eval_report.csv").read_text().splitlines()
    cols = dict(zip(lines[0].split(","), lines[1].split(",")))
    assert float(cols["normalized_score"]) == pytest.approx(1.0, abs=1e-9)


def test_eval_without_bc(tmp_path):
    cfg, out = write_cfg(tmp_path, extra="eval.bc = false\neval.use_true_reward = true\n")
    run("gen", cfg)
    run("eval", cfg)
    assert "bc_" not in (out / "eval_report.csv").read_text()


def test_missing_artifacts(tmp_path, capsys):
    cfg, _ = write_cfg(tmp_path)
    assert run("train", cfg) == EXIT_ERROR
    assert "missing required file" in capsys.readouterr().err
    run("gen", cfg)
    assert run("eval", cfg) == EXIT_ERROR


def test_untrained_artifacts_fail_diagnosis(tmp_path):
    cfg, out = write_cfg(tmp_path)
    run("gen", cfg)
    for name in ("reward_learned.csv", "q_learned.csv"):
        (out / name).write_text("state,action,value\n")
    assert run("diagnose", cfg) == EXIT_ERROR


def test_unknown_key(tmp_path, capsys):
    cfg, _ = write_cfg(tmp_path, extra="train.momentum = 0.9\n")
    assert run("gen", cfg) == EXIT_ERROR
    assert "unknown key" in capsys.readouterr().err


def test_output_dir_env_override(tmp_path, monkeypatch):
    cfg, out = write_cfg(tmp_path)
    alt = tmp_path / "elsewhere"
    monkeypatch.setenv("BICQL_OUTPUT_DIR", str(alt))
    run("gen", cfg)
    assert (alt / "mdp.csv").exists() and not out.exists()


def test_config_round_trip(tmp_path):
    cfg, _ = write_cfg(tmp_path)
    loaded = load_config(cfg)
    assert parse_config_text(dump_config(loaded)) == loaded


def test_config_errors_name_the_line():
    with pytest.raises(ConfigError, match=r"x\.cfg:2: "):
        parse_config_text("env.width = 3\nenv.width = 4\n", path="x.cfg")
    with pytest.raises(ConfigError):
        parse_config_text("data.expert_preset = huge\n")
    with pytest.raises(ConfigError):
        parse_config_text("train.alpha = -1\n")


def test_expert_preset():
    assert parse_config_text("data.expert_preset = low\n")["data.n_expert_trajectories"] == 1
