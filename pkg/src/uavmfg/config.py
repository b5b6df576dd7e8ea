"""Experiment configuration: defaults, flat key-value file format, validation.

Every physical constant carries its unit in the key name (``tau_s``,
``n0_dbm``, ``power_levels_mw``, ...).  Unknown keys are rejected, values are
range-checked, and a config hashes deterministically so that run manifests
can prove reproducibility.
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass, field

SCHEMA_VERSION = 1


class ConfigError(Exception):
    pass


class ConfigParseError(ConfigError):
    """Malformed key-value text."""


class ConfigSchemaError(ConfigError):
    """Unknown key or wrong value type."""


class ConfigUnitError(ConfigError):
    """Value outside its physically valid range."""


@dataclass
class ExperimentConfig:
    # -- geometry / population -------------------------------------------
    grid_rows: int = 19
    grid_cols: int = 19
    cell_side_m: float = 1000.0
    altitude_m: float = 100.0
    gus_per_cell: int = 4

    # -- ground-user demand chain ----------------------------------------
    p_activate: float = 0.3          # Pr(active | idle)
    q_stay_active: float = 0.7       # Pr(active | active)

    # -- radio -------------------------------------------------------------
    bandwidth_hz: float = 1e6
    eta_db: float = 0.0              # SINR decoding threshold
    n0_dbm: float = -110.0
    power_levels_mw: tuple = (0.0, 50.0, 100.0, 150.0, 200.0)
    los_c1: float = 10.0
    los_c2: float = 0.6
    a_los: float = 10 ** -3.692
    a_nlos: float = 10 ** -3.842
    nakagami_m: float = 2.0
    omega_spread: float = 1.0

    # -- slot timing --------------------------------------------------------
    tau_s: float = 60.0
    tau1_s: float = 25.0
    tau2_s: float = 35.0

    # -- solar harvesting ----------------------------------------------------
    harvest_efficiency: float = 0.4
    panel_area_m2: float = 1.0
    solar_intensity_w_m2: float = 1367.0
    cloud_absorption_per_m: float = 0.01
    cloud_levels_m: tuple = (0.0, 700.0)

    # -- battery / energy -----------------------------------------------------
    circuit_power_w: float = 0.01
    e_max_j: float = 5e5
    e_min_j: float = 5e4             # alarm threshold
    xi_per_j: float = 1e-3           # energy alarm penalty factor
    battery_levels: int = 8
    speed_cap_mps: float = 60.0

    # -- rotary-wing propulsion (see demos/01 for the hover-power derivation)
    uav_weight_n: float = 20.0
    air_density_kg_m3: float = 1.225
    rotor_radius_m: float = 0.4
    rotor_area_m2: float = 0.503
    rotor_solidity: float = 0.05
    blade_angular_velocity_rad_s: float = 300.0
    fuselage_drag_ratio: float = 0.6
    profile_drag_coeff: float = 0.012
    induced_power_factor: float = 0.1

    # -- reward shaping -----------------------------------------------------
    sigma_penalty: float = 240.0

    # -- trainer -----------------------------------------------------------
    gamma: float = 0.9
    entropy_weight: float = 0.5
    entropy_weight_final: float = 0.5   # set below entropy_weight for anneal
    learning_rate: float = 0.005
    minibatch: int = 300
    buffer_capacity: int = 1000
    target_period: int = 100
    episodes: int = 1000
    steps_per_episode: int = 200
    reward_scale: float = 1000.0
    feature_mode: str = "compact"       # "compact" | "full"
    resume_weights: bool = True
    flush_buffer: bool = True

    # -- baseline exploration schedules ------------------------------------
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_frac: float = 0.3
    boltzmann_t_start: float = 1.0
    boltzmann_t_end: float = 0.1

    # -- mean-field fixed point ---------------------------------------------
    outer_iters: int = 10
    tol_tv: float = 1e-2
    mf_rollout_slots: int = 50
    mf_average_last: int = 25

    # -- partial observability -----------------------------------------------
    partial_obs: bool = False
    coverage_fraction: float = 1.0
    staleness_cap: int = 16

    # -- harness --------------------------------------------------------------
    algo: str = "me_mfdqn"   # me_mfdqn | boltz_mfdqn | eg_mfdqn | eg_idqn
    seed: int = 0
    eval_slots: int = 100
    out_dir: str = "runs"

    # -- sweep axes -------------------------------------------------------------
    sweep_q: tuple = ()
    sweep_sigma: tuple = ()
    sweep_eta_db: tuple = ()
    sweep_coverage: tuple = ()

    # ------------------------------------------------------------------
    @property
    def n_cells(self):
        return self.grid_rows * self.grid_cols

    @property
    def power_levels_w(self):
        return tuple(p / 1000.0 for p in self.power_levels_mw)

    @property
    def eta_linear(self):
        return 10 ** (self.eta_db / 10.0)

    @property
    def n0_w(self):
        return 10 ** (self.n0_dbm / 10.0) / 1000.0

    @property
    def alpha_los(self):
        return 2.225 - 0.05 * math.log10(self.altitude_m)

    @property
    def alpha_nlos(self):
        return 4.32 - 0.76 * math.log10(self.altitude_m)


_ALGOS = ("me_mfdqn", "boltz_mfdqn", "eg_mfdqn", "eg_idqn")


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    """Range-check every field; raises ConfigUnitError with the key name."""

    def check(ok, key, msg):
        if not ok:
            raise ConfigUnitError(f"{key}: {msg}")

    check(cfg.grid_rows >= 1 and cfg.grid_cols >= 1, "grid_rows/grid_cols", "must be >= 1")
    check(cfg.cell_side_m > 0, "cell_side_m", "must be > 0")
    check(cfg.altitude_m > 0, "altitude_m", "must be > 0")
    check(cfg.gus_per_cell >= 1, "gus_per_cell", "must be >= 1")
    check(0.0 <= cfg.p_activate <= 1.0, "p_activate", "probability outside [0, 1]")
    check(0.0 <= cfg.q_stay_active <= 1.0, "q_stay_active", "probability outside [0, 1]")
    check(cfg.bandwidth_hz > 0, "bandwidth_hz", "must be > 0")
    levels = cfg.power_levels_mw
    check(len(levels) >= 2, "power_levels_mw", "need at least the null level and one positive level")
    check(levels[0] == 0.0, "power_levels_mw", "first level must be 0")
    check(all(b > a for a, b in zip(levels, levels[1:])), "power_levels_mw", "must be strictly ascending")
    check(cfg.a_los > 0 and cfg.a_nlos > 0, "a_los/a_nlos", "reference path losses must be > 0")
    check(cfg.nakagami_m >= 1.0, "nakagami_m", "shape must be >= 1")
    check(cfg.omega_spread > 0, "omega_spread", "must be > 0")
    check(cfg.tau1_s > 0 and cfg.tau2_s > 0, "tau1_s/tau2_s", "must be > 0")
    check(abs(cfg.tau1_s + cfg.tau2_s - cfg.tau_s) < 1e-9, "tau_s", "must equal tau1_s + tau2_s")
    check(all(c >= 0 for c in cfg.cloud_levels_m), "cloud_levels_m", "must be >= 0")
    check(cfg.e_max_j > cfg.e_min_j > 0, "e_max_j/e_min_j", "need e_max > e_min_alarm > 0")
    check(cfg.battery_levels >= 2, "battery_levels", "must be >= 2")
    check(0.0 <= cfg.gamma < 1.0, "gamma", "discount outside [0, 1)")
    check(cfg.entropy_weight > 0, "entropy_weight", "must be > 0")
    check(0 < cfg.entropy_weight_final <= cfg.entropy_weight, "entropy_weight_final",
          "must be in (0, entropy_weight]")
    check(cfg.learning_rate > 0, "learning_rate", "must be > 0")
    check(1 <= cfg.minibatch <= cfg.buffer_capacity, "minibatch", "must be in [1, buffer_capacity]")
    check(cfg.target_period >= 1, "target_period", "must be >= 1")
    check(cfg.episodes >= 1 and cfg.steps_per_episode >= 1, "episodes/steps_per_episode", "must be >= 1")
    check(cfg.reward_scale > 0, "reward_scale", "must be > 0")
    check(cfg.feature_mode in ("compact", "full"), "feature_mode", "must be 'compact' or 'full'")
    check(0.0 <= cfg.epsilon_end <= cfg.epsilon_start <= 1.0, "epsilon_start/epsilon_end",
          "need 0 <= end <= start <= 1")
    check(0.0 < cfg.epsilon_decay_frac <= 1.0, "epsilon_decay_frac", "must be in (0, 1]")
    check(0.0 < cfg.boltzmann_t_end <= cfg.boltzmann_t_start, "boltzmann_t_start/boltzmann_t_end",
          "need 0 < end <= start")
    check(cfg.outer_iters >= 1, "outer_iters", "must be >= 1")
    check(cfg.tol_tv > 0, "tol_tv", "must be > 0")
    check(1 <= cfg.mf_average_last <= cfg.mf_rollout_slots, "mf_average_last",
          "must be in [1, mf_rollout_slots]")
    check(0.0 < cfg.coverage_fraction <= 1.0, "coverage_fraction", "must be in (0, 1]")
    check(cfg.staleness_cap >= 1, "staleness_cap", "must be >= 1")
    check(cfg.algo in _ALGOS, "algo", f"must be one of {_ALGOS}")
    check(cfg.eval_slots >= 1, "eval_slots", "must be >= 1")
    for key, axis in (("sweep_q", cfg.sweep_q), ("sweep_coverage", cfg.sweep_coverage)):
        check(all(0.0 <= v <= 1.0 for v in axis), key, "entries outside [0, 1]")
    check(all(v >= 0 for v in cfg.sweep_sigma), "sweep_sigma", "entries must be >= 0")
    return cfg


# ----------------------------------------------------------------------
# flat key-value text format

_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _parse_value(key, raw, pytype):
    raw = raw.strip()
    try:
        if pytype is bool:
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if pytype is int:
            return int(raw)
        if pytype is float:
            return float(raw)
        if pytype is tuple:
            if raw == "":
                return ()
            return tuple(float(tok) for tok in raw.split(","))
        return raw
    except ValueError as exc:
        raise ConfigSchemaError(f"{key}: cannot parse {raw!r} as {pytype.__name__}") from exc


def parse_config_text(text: str) -> ExperimentConfig:
    overrides = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigParseError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (tok.strip() for tok in stripped.split("=", 1))
        if key == "schema_version":
            if int(raw) != SCHEMA_VERSION:
                raise ConfigSchemaError(f"unsupported schema_version {raw}")
            continue
        if key not in _FIELDS:
            raise ConfigSchemaError(f"line {lineno}: unknown key {key!r}")
        f = _FIELDS[key]
        pytype = {int: int, float: float, bool: bool, str: str, tuple: tuple}[
            f.type if isinstance(f.type, type) else {"int": int, "float": float,
                                                     "bool": bool, "str": str,
                                                     "tuple": tuple}[f.type]]
        overrides[key] = _parse_value(key, raw, pytype)
    return validate(ExperimentConfig(**overrides))


def parse_override(key: str, raw: str):
    """Parse one KEY=VALUE override using the field's declared type."""
    if key not in _FIELDS:
        raise ConfigSchemaError(f"unknown key {key!r}")
    f = _FIELDS[key]
    pytype = f.type if isinstance(f.type, type) else {"int": int, "float": float,
                                                      "bool": bool, "str": str,
                                                      "tuple": tuple}[f.type]
    return _parse_value(key, raw, pytype)


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def config_text(cfg: ExperimentConfig) -> str:
    lines = [f"schema_version = {SCHEMA_VERSION}"]
    for f in dataclasses.fields(ExperimentConfig):
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            lines.append(f"{f.name} = " + ",".join(repr(v) for v in value))
        else:
            lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"


def save_config(cfg: ExperimentConfig, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(config_text(cfg))


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(config_text(cfg).encode("utf-8")).hexdigest()


def with_overrides(cfg: ExperimentConfig, **kwargs) -> ExperimentConfig:
    return validate(dataclasses.replace(cfg, **kwargs))


def desk_scale_config(**kwargs) -> ExperimentConfig:
    """Minutes-scale defaults: 7x7 grid, 300 episodes of 100 steps."""
    base = dict(grid_rows=7, grid_cols=7, episodes=300, steps_per_episode=100,
                outer_iters=3, entropy_weight_final=0.05)
    base.update(kwargs)
    return validate(ExperimentConfig(**base))
