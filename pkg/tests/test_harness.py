import numpy as np
import pytest

from uavmfg.cli import main
from uavmfg.config import config_hash, desk_scale_config, load_config, with_overrides
from uavmfg.harness import (PlotDataError, emit_plot_data, evaluate_population,
                            out_root_dir, run_experiment, run_name,
                            run_robustness, run_sweep)
from uavmfg.network import load_checkpoint


def tiny_config(**kw):
    base = dict(grid_rows=3, grid_cols=3, episodes=6, steps_per_episode=10,
                outer_iters=2, minibatch=16, buffer_capacity=200,
                target_period=20, eval_slots=8, mf_rollout_slots=10,
                mf_average_last=5)
    base.update(kw)
    return desk_scale_config(**base)


@pytest.fixture(scope="module")
def completed_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("runs")
    cfg = tiny_config(seed=3)
    run_dir = run_experiment(cfg, out_root=root)
    return cfg, run_dir


def test_run_dir_layout(completed_run):
    cfg, run_dir = completed_run
    for name in ("config.txt", "manifest.txt", "metrics.csv",
                 "equilibrium.csv", "summary.csv", "checkpoint.npz"):
        assert (run_dir / name).exists(), name
    assert run_dir.name == run_name(cfg)
    assert cfg.algo in run_dir.name and f"seed{cfg.seed}" in run_dir.name


def test_manifest_contents(completed_run):
    cfg, run_dir = completed_run
    manifest = dict(line.split(" = ", 1) for line in
                    (run_dir / "manifest.txt").read_text().splitlines())
    assert manifest["config_hash"] == config_hash(cfg)
    assert manifest["seed"] == str(cfg.seed)
    assert manifest["algo"] == cfg.algo
    assert manifest["schema_version"]
    assert manifest["code_version"]


def test_metrics_and_equilibrium_shapes(completed_run):
    from uavmfg.harness import MET_COLS, _read_csv
    cfg, run_dir = completed_run
    rows = _read_csv(run_dir / "metrics.csv")
    per_iter = max(1, cfg.episodes // cfg.outer_iters)
    assert len(rows) <= per_iter * cfg.outer_iters
    assert list(rows[0]) == MET_COLS
    assert [int(r["episode"]) for r in rows] == list(range(len(rows)))
    assert all(np.isfinite(float(r["mean_reward"])) for r in rows)
    eq = _read_csv(run_dir / "equilibrium.csv")
    assert 1 <= len(eq) <= cfg.outer_iters
    assert all(0.0 <= float(r["distance"]) <= 1.0 for r in eq)


def test_summary_schema(completed_run):
    from uavmfg.harness import SUM_COLS, _read_csv
    cfg, run_dir = completed_run
    rows = _read_csv(run_dir / "summary.csv")
    assert len(rows) == 1
    assert list(rows[0]) == SUM_COLS
    assert float(rows[0]["eval_slots"]) == cfg.eval_slots
    assert 0.0 <= float(rows[0]["flying_probability"]) <= 1.0


def test_config_round_trips_from_run_dir(completed_run):
    cfg, run_dir = completed_run
    loaded = load_config(run_dir / "config.txt")
    assert config_hash(loaded) == config_hash(cfg)


def test_checkpoint_loads(completed_run):
    _, run_dir = completed_run
    net, target, _, rng, _ = load_checkpoint(run_dir / "checkpoint.npz", lr=0.005)
    assert net.sizes == target.sizes
    assert np.isfinite(rng.random())


def test_rerun_byte_identical(tmp_path):
    cfg = tiny_config(seed=21)
    d1 = run_experiment(cfg, out_root=tmp_path / "a")
    d2 = run_experiment(cfg, out_root=tmp_path / "b")
    for name in ("config.txt", "manifest.txt", "metrics.csv",
                 "equilibrium.csv", "summary.csv"):
        assert (d1 / name).read_bytes() == (d2 / name).read_bytes(), name


def test_seed_changes_results(tmp_path):
    from uavmfg.harness import _read_csv
    d1 = run_experiment(tiny_config(seed=1), out_root=tmp_path)
    d2 = run_experiment(tiny_config(seed=2), out_root=tmp_path)
    assert d1 != d2
    r1 = [r["mean_reward"] for r in _read_csv(d1 / "metrics.csv")]
    r2 = [r["mean_reward"] for r in _read_csv(d2 / "metrics.csv")]
    assert r1 != r2


def test_sweep_one_dir_per_point(tmp_path):
    cfg = tiny_config(seed=4, sweep_q=(0.3, 0.9))
    dirs = run_sweep(cfg, out_root=tmp_path)
    assert len(dirs) == 2
    qs = sorted(load_config(d / "config.txt").q_stay_active for d in dirs)
    assert qs == [0.3, 0.9]
    for d in dirs:
        assert load_config(d / "config.txt").sweep_q == ()
    # no sweep axes: a single ordinary run
    assert len(run_sweep(tiny_config(seed=4), out_root=tmp_path / "single")) == 1


def test_plot_data_policy_vs_q(tmp_path):
    from uavmfg.harness import _read_csv
    dirs = [run_experiment(tiny_config(seed=s, q_stay_active=q),
                           out_root=tmp_path)
            for q in (0.3, 0.9) for s in (1, 2)]
    out = emit_plot_data(dirs, "policy_vs_q", tmp_path / "fig" / "pq.csv")
    rows = _read_csv(out)
    assert list(rows[0]) == ["q", "flying_probability", "mean_power_mw"]
    assert sorted(float(r["q"]) for r in rows) == [0.3, 0.9]  # seeds averaged
    out2 = emit_plot_data(dirs, "ee_vs_q", tmp_path / "fig" / "eq.csv")
    assert list(_read_csv(out2)[0]) == ["q", "eta_db", "ee"]


def test_plot_data_algorithms(completed_run, tmp_path):
    from uavmfg.harness import _read_csv
    cfg, run_dir = completed_run
    out = emit_plot_data([run_dir], "algorithms", tmp_path / "alg.csv")
    rows = _read_csv(out)
    assert list(rows[0]) == ["algo", "episode", "mean_reward"]
    assert rows[0]["algo"] == cfg.algo
    assert [int(r["episode"]) for r in rows] == list(range(len(rows)))


def test_plot_data_errors(completed_run, tmp_path):
    _, run_dir = completed_run
    with pytest.raises(PlotDataError):
        emit_plot_data([], "algorithms", tmp_path / "x.csv")
    with pytest.raises(PlotDataError):
        emit_plot_data([run_dir], "pie_chart", tmp_path / "x.csv")


def test_robustness_no_removal_is_stable(tmp_path):
    cfg = tiny_config(seed=6)
    result = run_robustness(cfg, removal_count=0, out_root=tmp_path)
    assert (result["run_dir"] / "robustness.csv").exists()
    assert result["removed"] == []
    assert np.isfinite(result["before"]["mean_reward"])
    assert np.isfinite(result["after"]["mean_reward"])


def test_robustness_removal_bounds():
    cfg = tiny_config(seed=6)
    with pytest.raises(ValueError):
        run_robustness(cfg, removal_count=cfg.n_cells)


def test_out_root_resolution(tmp_path, monkeypatch):
    cfg = tiny_config(out_dir=str(tmp_path / "from_cfg"))
    monkeypatch.delenv("UAVMFG_OUT_ROOT", raising=False)
    assert out_root_dir(None, cfg) == tmp_path / "from_cfg"
    monkeypatch.setenv("UAVMFG_OUT_ROOT", str(tmp_path / "from_env"))
    assert out_root_dir(None, cfg) == tmp_path / "from_env"
    assert out_root_dir(tmp_path / "explicit", cfg) == tmp_path / "explicit"


def test_evaluate_population_keys(completed_run):
    from uavmfg.env import SimModel
    from uavmfg.harness import SUM_COLS, greedy_policy, solve
    cfg, _ = completed_run
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    report, sim = solve(cfg, rng)
    summary = evaluate_population(sim, cfg, greedy_policy(report, cfg), rng, 5)
    assert sorted(summary) == sorted(SUM_COLS)
    assert summary["eval_slots"] == 5


def test_partial_obs_run(tmp_path):
    cfg = tiny_config(seed=8, partial_obs=True, coverage_fraction=0.75)
    run_dir = run_experiment(cfg, out_root=tmp_path)
    assert "cov0.75" in run_dir.name
    assert (run_dir / "summary.csv").exists()


def test_cli_run_and_validate(tmp_path, capsys):
    overrides = ["grid_rows=3", "grid_cols=3", "episodes=4",
                 "steps_per_episode=10", "outer_iters=2", "minibatch=16",
                 "buffer_capacity=100", "eval_slots=5", "mf_rollout_slots=8",
                 "mf_average_last=4", "seed=12"]
    argv = ["run", "--desk", "--out", str(tmp_path)]
    for o in overrides:
        argv += ["--set", o]
    assert main(argv) == 0
    run_dir = capsys.readouterr().out.strip()
    assert main(["validate-config", str(run_dir) + "/config.txt"]) == 0
    assert capsys.readouterr().out.strip() == "ok"


def test_cli_error_paths(tmp_path, capsys):
    assert main(["validate-config", str(tmp_path / "nope.txt")]) == 1
    assert "FileNotFoundError" in capsys.readouterr().err
    assert main(["run", "--desk", "--set", "gamma=high",
                 "--out", str(tmp_path)]) == 1
    assert "ConfigSchemaError" in capsys.readouterr().err
    assert main(["plotdata", "algorithms", str(tmp_path / "missing_run"),
                 "--out", str(tmp_path / "x.csv")]) == 1
    capsys.readouterr()
