"""Experiment orchestration: equilibrium runs, evaluation, sweeps, robustness,
and tidy CSV plot data.

Run directory layout::

    config.txt       full resolved config (reproduces the run with the seed)
    manifest.txt     schema version, config hash, seed, algorithm, code version
    metrics.csv      one row per training episode across all outer iterations
    equilibrium.csv  TV distance and contraction ratio per outer iteration
    summary.csv      frozen-greedy population evaluation statistics
    checkpoint.npz   final network, target network, and RNG state

All CSVs are UTF-8 with a header row and '.' decimals; floats are written with
repr so identical (config, seed) pairs produce byte-identical files.
"""

from __future__ import annotations

import csv
import itertools
import os
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import train_baseline
from .config import (SCHEMA_VERSION, config_hash, load_config, save_config,
                     with_overrides)
from .env import FullObsPopulation, RepresentativeEnv, SimModel
from .meanfield import MeanField, propagate_population, solve_equilibrium, uniform_feasible
from .network import save_checkpoint
from .partial_obs import PartialObsEnv, PartialObsPopulation, obs_meanfield_uniform
from .softq import QPolicy, ReplayBuffer, TrainerConfig, TrainingDiverged, train_best_response
from .spaces import ObsActionSpace


class PlotDataError(Exception):
    pass


MET_COLS = ["episode", "outer_iter", "mean_reward", "mean_ee",
            "mean_interference_penalty", "flying_probability", "mean_power_mw",
            "mean_loss", "active"]
SUM_COLS = ["mean_reward", "mean_ee", "mean_interference_penalty",
            "flying_probability", "mean_power_mw", "rep_mean_reward",
            "rep_flying_probability", "rep_mean_power_mw", "eval_slots"]


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _read_csv(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def out_root_dir(explicit=None, cfg=None):
    if explicit is not None:
        return Path(explicit)
    env = os.environ.get("UAVMFG_OUT_ROOT")
    if env:
        return Path(env)
    return Path(cfg.out_dir if cfg is not None else "runs")


def run_name(cfg):
    tags = [cfg.algo, f"q{cfg.q_stay_active:g}", f"sig{cfg.sigma_penalty:g}",
            f"eta{cfg.eta_db:g}"]
    if cfg.partial_obs:
        tags.append(f"cov{cfg.coverage_fraction:g}")
    tags.append(f"seed{cfg.seed}")
    return "_".join(tags) + "_" + config_hash(cfg)[:8]


def _policy_kind(cfg):
    if cfg.algo == "me_mfdqn":
        return "soft", cfg.entropy_weight_final
    if cfg.algo == "boltz_mfdqn":
        return "boltzmann", cfg.boltzmann_t_end
    return "epsilon", cfg.epsilon_end


def _make_env(sim, cfg, mf):
    include_mf = cfg.algo != "eg_idqn"
    if cfg.partial_obs:
        return PartialObsEnv(sim, mf, cfg.coverage_fraction, cfg.staleness_cap,
                             include_meanfield=include_mf,
                             feature_mode=cfg.feature_mode)
    return RepresentativeEnv(sim, mf, include_meanfield=include_mf,
                             feature_mode=cfg.feature_mode)


def _initial_meanfield(sim, cfg):
    if cfg.partial_obs:
        return obs_meanfield_uniform(ObsActionSpace(cfg.gus_per_cell,
                                                    len(cfg.power_levels_mw)))
    return uniform_feasible(sim)


def solve(cfg, rng, metrics_rows=None):
    """Run the two-step fixed point for the configured algorithm.

    The per-iteration training budget is cfg.episodes // cfg.outer_iters so
    cfg.episodes is the total across the whole run.  Returns (report, sim).
    ``metrics_rows``, if given, collects MetricsRow tuples even when training
    aborts partway.
    """
    sim = SimModel(cfg)
    per_iter = max(1, cfg.episodes // cfg.outer_iters)
    train_cfg = with_overrides(cfg, episodes=per_iter)
    kind, param = _policy_kind(cfg)
    include_mf = cfg.algo != "eg_idqn"
    carry = {"net": None, "buffer": None, "episode": 0}
    rows = metrics_rows if metrics_rows is not None else []

    def best_response(mf, i):
        env = _make_env(sim, cfg, mf)
        net = carry["net"] if cfg.resume_weights else None
        buffer = None if cfg.flush_buffer else carry["buffer"]
        if buffer is None and not cfg.flush_buffer:
            tc = TrainerConfig.from_config(cfg)
            buffer = ReplayBuffer(tc.buffer_capacity, env.feature_dim,
                                  env.num_actions)
        if cfg.algo == "me_mfdqn":
            net, target, stats = train_best_response(env, train_cfg, rng,
                                                     net=net, buffer=buffer)
        else:
            net, target, stats = train_baseline(env, train_cfg, rng, cfg.algo,
                                                net=net, buffer=buffer)
        carry["net"] = net
        carry["target"] = target
        if not cfg.flush_buffer:
            carry["buffer"] = buffer
        for st in stats:
            rows.append((carry["episode"], i, st["mean_reward"], st["mean_ee"],
                         st["mean_interference_penalty"], st["flying_probability"],
                         st["mean_power_w"] * 1000.0, st["mean_loss"], 1))
            carry["episode"] += 1
        mf_feats = mf.features(cfg.feature_mode) if include_mf else np.zeros(0)
        return QPolicy(net, mf_feats, kind=kind, param=param), stats

    def propagate(policy, mf):
        if cfg.partial_obs:
            pop = PartialObsPopulation(sim, cfg.coverage_fraction, cfg.staleness_cap)
            space = pop.obs_space
            joint, marg = propagate_population(pop, policy, rng,
                                               cfg.mf_rollout_slots,
                                               cfg.mf_average_last,
                                               space.dim_joint, space.dim_if)
            return MeanField(joint.reshape(space.dim_z, space.dim_a), space,
                             marginal_if=marg)
        pop = FullObsPopulation(sim, cfg.feature_mode)
        joint, _ = propagate_population(pop, policy, rng, cfg.mf_rollout_slots,
                                        cfg.mf_average_last,
                                        sim.space.dim_s * sim.space.dim_a)
        return MeanField(joint.reshape(sim.space.dim_s, sim.space.dim_a), sim.space)

    report = solve_equilibrium(_initial_meanfield(sim, cfg), best_response,
                               propagate, cfg.outer_iters, cfg.tol_tv)
    report.net = carry["net"]
    report.target_net = carry.get("target")
    return report, sim


def evaluate_population(sim, cfg, policy, rng, slots, pop=None):
    """Frozen-policy rollout of the whole population; per-slot means over
    active cells plus the representative cell's own statistics."""
    if pop is None:
        if cfg.partial_obs:
            pop = PartialObsPopulation(sim, cfg.coverage_fraction, cfg.staleness_cap)
        else:
            pop = FullObsPopulation(sim, cfg.feature_mode)
    if pop.world is None:
        pop.reset(rng)
    rep = sim.geom.rep_cell
    acc = {k: [] for k in ("reward", "ee", "interference_penalty", "flying",
                           "power_w")}
    rep_acc = {k: [] for k in ("reward", "flying", "power_w")}
    for _ in range(slots):
        pop.slot(policy, rng)
        out = pop.last_out
        for k in acc:
            acc[k].append(np.nanmean(out[k]))
        rep_acc["reward"].append(out["reward"][rep])
        rep_acc["flying"].append(out["flying"][rep])
        rep_acc["power_w"].append(out["power_w"][rep])
    return {
        "mean_reward": float(np.mean(acc["reward"])),
        "mean_ee": float(np.mean(acc["ee"])),
        "mean_interference_penalty": float(np.mean(acc["interference_penalty"])),
        "flying_probability": float(np.mean(acc["flying"])),
        "mean_power_mw": float(np.mean(acc["power_w"])) * 1000.0,
        "rep_mean_reward": float(np.nanmean(rep_acc["reward"])),
        "rep_flying_probability": float(np.nanmean(rep_acc["flying"])),
        "rep_mean_power_mw": float(np.nanmean(rep_acc["power_w"])) * 1000.0,
        "eval_slots": slots,
    }


def greedy_policy(report, cfg):
    mf_feats = (report.meanfield.features(cfg.feature_mode)
                if cfg.algo != "eg_idqn" else np.zeros(0))
    return QPolicy(report.net, mf_feats, kind="greedy")


def _write_run_dir(run_dir, cfg, rows, report, summary, rng):
    run_dir.mkdir(parents=True, exist_ok=True)
    save_config(cfg, run_dir / "config.txt")
    manifest = [f"schema_version = {SCHEMA_VERSION}",
                f"config_hash = {config_hash(cfg)}",
                f"seed = {cfg.seed}",
                f"algo = {cfg.algo}",
                f"code_version = {__version__}"]
    (run_dir / "manifest.txt").write_text("\n".join(manifest) + "\n", encoding="utf-8")
    _write_csv(run_dir / "metrics.csv", MET_COLS, rows)
    if report is not None:
        eq_rows = []
        for i, d in enumerate(report.distances):
            ratio = report.contraction_ratios[i - 1] if i >= 1 and i - 1 < len(
                report.contraction_ratios) else ""
            eq_rows.append((i, d, ratio))
        _write_csv(run_dir / "equilibrium.csv",
                   ["iteration", "distance", "contraction_ratio"], eq_rows)
        if report.net is not None:
            save_checkpoint(run_dir / "checkpoint.npz", report.net,
                            report.target_net, rng=rng)
    if summary is not None:
        _write_csv(run_dir / "summary.csv", SUM_COLS,
                   [tuple(summary[c] for c in SUM_COLS)])


def run_experiment(cfg, out_root=None):
    """Train, evaluate, persist; returns the run directory path.

    On trainer divergence the partial metrics are still written before the
    error propagates.
    """
    root = out_root_dir(out_root, cfg)
    run_dir = root / run_name(cfg)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    rows = []
    try:
        report, sim = solve(cfg, rng, metrics_rows=rows)
    except TrainingDiverged:
        _write_run_dir(run_dir, cfg, rows, None, None, rng)
        raise
    summary = evaluate_population(sim, cfg, greedy_policy(report, cfg), rng,
                                  cfg.eval_slots)
    _write_run_dir(run_dir, cfg, rows, report, summary, rng)
    return run_dir


def run_robustness(cfg, removal_count, removal_slot=None, out_root=None):
    """Train, then evaluate the frozen policy before and after deactivating
    ``removal_count`` random non-representative UAVs.

    Returns the before/after evaluation dicts; also writes robustness.csv in
    the run directory."""
    if removal_count >= cfg.n_cells:
        raise ValueError("removal_count must be smaller than the population")
    root = out_root_dir(out_root, cfg)
    run_dir = root / (run_name(cfg) + f"_rob{removal_count}")
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    rows = []
    report, sim = solve(cfg, rng, metrics_rows=rows)
    policy = greedy_policy(report, cfg)

    if cfg.partial_obs:
        pop = PartialObsPopulation(sim, cfg.coverage_fraction, cfg.staleness_cap)
    else:
        pop = FullObsPopulation(sim, cfg.feature_mode)
    pop.reset(rng)
    slots = cfg.eval_slots if removal_slot is None else removal_slot
    before = evaluate_population(sim, cfg, policy, rng, slots, pop=pop)
    candidates = np.array([k for k in range(sim.geom.n_cells)
                           if k != sim.geom.rep_cell])
    removed = rng.choice(candidates, size=removal_count, replace=False)
    pop.world.deactivate(removed)
    after = evaluate_population(sim, cfg, policy, rng, cfg.eval_slots, pop=pop)

    _write_run_dir(run_dir, cfg, rows, report, before, rng)
    rob_rows = [tuple([phase] + [d[c] for c in SUM_COLS])
                for phase, d in (("before", before), ("after", after))]
    _write_csv(run_dir / "robustness.csv", ["phase"] + SUM_COLS, rob_rows)
    return {"before": before, "after": after, "removed": removed.tolist(),
            "run_dir": run_dir}


SWEEP_AXES = (("q_stay_active", "sweep_q"), ("sigma_penalty", "sweep_sigma"),
              ("eta_db", "sweep_eta_db"), ("coverage_fraction", "sweep_coverage"))


def run_sweep(cfg, out_root=None):
    """One run directory per point of the cartesian product of the non-empty
    sweep axes (all axes empty: a single run)."""
    axes = [(key, tuple(getattr(cfg, sweep_key))) for key, sweep_key in SWEEP_AXES
            if getattr(cfg, sweep_key)]
    if not axes:
        return [run_experiment(cfg, out_root)]
    dirs = []
    for combo in itertools.product(*(vals for _, vals in axes)):
        overrides = {key: v for (key, _), v in zip(axes, combo)}
        point = with_overrides(cfg, sweep_q=(), sweep_sigma=(), sweep_eta_db=(),
                               sweep_coverage=(), **overrides)
        dirs.append(run_experiment(point, out_root))
    return dirs


# ----------------------------------------------------------------------
# plot data

FIGURE_KINDS = ("algorithms", "policy_vs_q", "ee_vs_q", "policy_vs_sigma",
                "ee_vs_sigma", "observability")


def _summary_of(run_dir):
    rows = _read_csv(Path(run_dir) / "summary.csv")
    if not rows:
        raise PlotDataError(f"{run_dir}: empty summary.csv")
    return {k: float(v) for k, v in rows[0].items()}


def _aggregate(rows, key_cols, value_cols):
    """Average value columns over rows sharing the same keys (seeds)."""
    groups = {}
    for row in rows:
        key = tuple(row[c] for c in key_cols)
        groups.setdefault(key, []).append([row[c] for c in value_cols])
    out = []
    for key in sorted(groups):
        vals = np.mean(np.asarray(groups[key], dtype=float), axis=0)
        out.append(tuple(key) + tuple(float(v) for v in vals))
    return out


def emit_plot_data(run_dirs, figure_kind, out_path):
    """Collect runs into one tidy CSV for the requested figure family."""
    run_dirs = list(run_dirs)
    if not run_dirs:
        raise PlotDataError("no run directories given")
    if figure_kind not in FIGURE_KINDS:
        raise PlotDataError(f"unknown figure kind {figure_kind!r}; "
                            f"expected one of {FIGURE_KINDS}")
    records = []
    for rd in run_dirs:
        rd = Path(rd)
        cfg = load_config(rd / "config.txt")
        if figure_kind == "algorithms":
            for row in _read_csv(rd / "metrics.csv"):
                records.append({"algo": cfg.algo, "episode": int(row["episode"]),
                                "mean_reward": float(row["mean_reward"])})
        else:
            s = _summary_of(rd)
            records.append({"q": cfg.q_stay_active, "sigma": cfg.sigma_penalty,
                            "eta_db": cfg.eta_db,
                            "coverage": cfg.coverage_fraction,
                            "flying_probability": s["flying_probability"],
                            "mean_power_mw": s["mean_power_mw"],
                            "ee": s["mean_ee"],
                            "mean_reward": s["mean_reward"]})
    if figure_kind == "algorithms":
        header = ["algo", "episode", "mean_reward"]
        rows = _aggregate(records, ["algo", "episode"], ["mean_reward"])
    elif figure_kind == "policy_vs_q":
        header = ["q", "flying_probability", "mean_power_mw"]
        rows = _aggregate(records, ["q"], ["flying_probability", "mean_power_mw"])
    elif figure_kind == "ee_vs_q":
        header = ["q", "eta_db", "ee"]
        rows = _aggregate(records, ["q", "eta_db"], ["ee"])
    elif figure_kind == "policy_vs_sigma":
        header = ["sigma", "flying_probability", "mean_power_mw"]
        rows = _aggregate(records, ["sigma"],
                          ["flying_probability", "mean_power_mw"])
    elif figure_kind == "ee_vs_sigma":
        header = ["sigma", "eta_db", "ee"]
        rows = _aggregate(records, ["sigma", "eta_db"], ["ee"])
    else:
        header = ["coverage", "mean_reward", "ee"]
        rows = _aggregate(records, ["coverage"], ["mean_reward", "ee"])
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    _write_csv(out_path, header, rows)
    return out_path
