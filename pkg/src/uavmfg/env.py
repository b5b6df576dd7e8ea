"""UAV downlink network environment.

Two simulators share the same physics:

* ``RepresentativeEnv`` - the single representative UAV cell, with the other
  cells' behavior drawn from a frozen mean-field's interference marginal.
  This is the training environment.
* ``World`` / ``step_world`` - the full population of cells stepped jointly,
  used for mean-field propagation, evaluation, and robustness experiments.

A slot follows the fly-hover-communicate protocol: mode 1 flies to a new
hover point during tau1 and transmits during tau2; mode 2 hovers all slot and
transmits in both phases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import (ChannelParams, achievable_rate, elevation_from_horizontal,
                      sample_link)
from .demand import DemandChain, sample_stationary, step_demand
from .energy import (EnergyParams, harvest_energy, propulsion_power, quantize_battery,
                     slot_reward, step_battery, total_energy)
from .spaces import StateActionSpace


class Geometry:
    """Square-cell grid; each cell hosts U ground users with a hover point
    directly above each one."""

    def __init__(self, grid_rows, grid_cols, cell_side_m, altitude_m, n_gus):
        self.grid_rows = grid_rows
        self.grid_cols = grid_cols
        self.cell_side_m = cell_side_m
        self.altitude_m = altitude_m
        self.n_gus = n_gus
        self.gu_offsets = self._gu_offsets(cell_side_m, n_gus)
        rows, cols = np.divmod(np.arange(grid_rows * grid_cols), grid_cols)
        self.cell_centers = np.stack([cols * cell_side_m, rows * cell_side_m], axis=1).astype(float)
        self.rep_cell = (grid_rows // 2) * grid_cols + (grid_cols // 2)
        # horizontal distance between hover points of the same cell
        diff = self.gu_offsets[:, None, :] - self.gu_offsets[None, :, :]
        self.hover_dist = np.hypot(diff[..., 0], diff[..., 1])

    @staticmethod
    def _gu_offsets(side, n_gus):
        if n_gus == 1:
            return np.zeros((1, 2))
        if n_gus == 4:
            q = side / 4.0
            return np.array([[-q, -q], [q, -q], [-q, q], [q, q]], dtype=float)
        ang = 2.0 * np.pi * np.arange(n_gus) / n_gus
        return side / 4.0 * np.stack([np.cos(ang), np.sin(ang)], axis=1)

    @property
    def n_cells(self):
        return self.grid_rows * self.grid_cols

    def hover_xy(self, cells, hovers):
        return self.cell_centers[cells] + self.gu_offsets[hovers]

    def gu_xy(self, cells, gus):
        return self.cell_centers[cells] + self.gu_offsets[gus]


@dataclass
class AgentState:
    demand_bits: np.ndarray     # (U,) bool, current-slot demand of the cell's GUs
    prev_hover: int
    battery: float

    def bits_int(self):
        return int(np.dot(self.demand_bits.astype(int), 1 << np.arange(len(self.demand_bits))))

    def battery_level(self, e_max, levels):
        return quantize_battery(self.battery, e_max, levels)

    def index(self, space: StateActionSpace, e_max):
        return space.encode_state(self.bits_int(), self.prev_hover,
                                  self.battery_level(e_max, space.battery_levels))


@dataclass
class AgentAction:
    assoc: int | None    # served GU; None for the silent action
    hover: int
    power_idx: int


@dataclass
class SlotOutcome:
    mode: int
    rate_bits: float
    e_total: float
    harvest: float
    ee: float
    reward: float
    sinr1: float
    sinr2: float
    power_w: float
    interference_penalty: float = 0.0
    infeasible: bool = False


class SimModel:
    """All derived physical constants, tables, and spaces for one config."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.chan = ChannelParams.from_config(cfg)
        self.energy = EnergyParams.from_config(cfg)
        self.chain = DemandChain(cfg.p_activate, cfg.q_stay_active)
        self.geom = Geometry(cfg.grid_rows, cfg.grid_cols, cfg.cell_side_m,
                             cfg.altitude_m, cfg.gus_per_cell)
        self.space = StateActionSpace(cfg.gus_per_cell, cfg.battery_levels,
                                      len(cfg.power_levels_mw))
        self.power_levels_w = np.asarray(cfg.power_levels_w)
        self.eta = cfg.eta_linear
        self.n0 = cfg.n0_w
        self.bandwidth = cfg.bandwidth_hz
        self.tau1 = cfg.tau1_s
        self.tau2 = cfg.tau2_s
        self.sigma = cfg.sigma_penalty
        self.xi = cfg.xi_per_j
        self.cloud_levels = np.asarray(cfg.cloud_levels_m, dtype=float)

        U, Lp = cfg.gus_per_cell, len(cfg.power_levels_mw)
        self.speed = self.geom.hover_dist / self.tau1                    # (U, U)
        self.mode_table = np.where(np.eye(U, dtype=bool), 2, 1)          # (prev, hover)
        self.e_total_table = np.empty((U, U, Lp))
        for prev in range(U):
            for hover in range(U):
                mode = self.mode_table[prev, hover]
                for p in range(Lp):
                    self.e_total_table[prev, hover, p] = total_energy(
                        mode, self.power_levels_w[p], self.speed[prev, hover],
                        self.energy, self.tau1, self.tau2)
        # own-cell link geometry: hover point -> GU
        alt = cfg.altitude_m
        self.own_dist3d = np.sqrt(self.geom.hover_dist ** 2 + alt ** 2)
        self.own_theta = elevation_from_horizontal(self.geom.hover_dist, alt)

    # feasibility: e_total <= battery, replicated across the association axis
    def feasible_hp(self, prev_hover, battery):
        return self.e_total_table[prev_hover] <= battery                # (U, Lp)

    def feasible_mask(self, prev_hover, battery):
        U = self.geom.n_gus
        return np.tile(self.feasible_hp(prev_hover, battery).ravel(), U)

    def feasible_masks_batch(self, prev_hover, battery):
        U = self.geom.n_gus
        fh = self.e_total_table[prev_hover] <= battery[:, None, None]   # (K, U, Lp)
        return np.tile(fh.reshape(len(prev_hover), -1), (1, U))

    def null_action(self, prev_hover):
        return self.space.encode_action(0, prev_hover, 0)

    def interference_penalty(self, power_w, mode):
        phi = 1.0 if mode == 2 else 0.0
        return self.sigma * power_w * (phi * self.tau1 + self.tau2)

    def reset_state(self, rng):
        bits = sample_stationary(self.geom.n_gus, self.chain, rng)
        hover = int(rng.integers(self.geom.n_gus))
        return AgentState(bits, hover, self.energy.e_max_j)

    def draw_harvest(self, rng, size=None):
        clouds = rng.choice(self.cloud_levels, size=size)
        scale = (self.energy.harvest_efficiency * self.energy.panel_area_m2
                 * self.energy.solar_intensity_w_m2 * (self.tau1 + self.tau2))
        return scale * np.exp(-self.energy.cloud_absorption_per_m * clouds)


class RepresentativeEnv:
    """Single-agent slot interface against a frozen mean-field.

    Each slot, every other cell's (hover point, power, mode, serving-active)
    tuple is drawn i.i.d. from the mean-field's interference marginal, and the
    resulting interference enters both phases' SINR.
    """

    def __init__(self, sim: SimModel, meanfield, include_meanfield=True,
                 feature_mode="compact"):
        self.sim = sim
        self.space = sim.space
        self.include_meanfield = include_meanfield
        self.feature_mode = feature_mode
        self.mf_features = (meanfield.features(feature_mode)
                            if include_meanfield else np.zeros(0))
        marg = np.clip(meanfield.marginal_if, 0.0, None)
        self.if_probs = marg / marg.sum()
        cells = np.arange(self.space.dim_if)
        self.if_hover, self.if_pidx, self.if_mode2, self.if_active = \
            self.space.decode_if_cells(cells)
        geom = sim.geom
        others = np.array([k for k in range(geom.n_cells) if k != geom.rep_cell])
        self.n_interferers = len(others)
        # distance from every interferer hover point to every representative GU
        if self.n_interferers:
            tx = geom.cell_centers[others][:, None, :] + geom.gu_offsets[None, :, :]
            rx = geom.cell_centers[geom.rep_cell][None, None, :] + geom.gu_offsets
            d = tx[:, :, None, :] - rx[None, :, :]  # (K-1, U_hover, U_gu, 2)
            horiz = np.hypot(d[..., 0], d[..., 1])
            self.int_dist3d = np.sqrt(horiz ** 2 + geom.altitude_m ** 2)
            self.int_theta = elevation_from_horizontal(horiz, geom.altitude_m)
        self.num_actions = self.space.dim_a
        self.feature_dim = state_feature_dim(self.space, feature_mode) + len(self.mf_features)

    def reset(self, rng) -> AgentState:
        return self.sim.reset_state(rng)

    def feasible_mask(self, state: AgentState):
        return self.sim.feasible_mask(state.prev_hover, state.battery)

    def features(self, state: AgentState):
        sf = encode_state_features(state, self.sim, self.feature_mode)
        return np.concatenate([sf, self.mf_features])

    def step(self, state: AgentState, a_idx, rng):
        sim = self.sim
        assoc, hover, p_idx = sim.space.decode_action(int(a_idx))
        infeasible = sim.e_total_table[state.prev_hover, hover, p_idx] > state.battery
        if infeasible:
            assoc, hover, p_idx = 0, state.prev_hover, 0
        mode = int(sim.mode_table[state.prev_hover, hover])
        power = float(sim.power_levels_w[p_idx])
        serving_active = p_idx > 0 and bool(state.demand_bits[assoc])

        sinr1 = sinr2 = 0.0
        if serving_active:
            own_gain, _ = sample_link(sim.own_dist3d[hover, assoc],
                                      sim.own_theta[hover, assoc], sim.chan, rng)
            i1 = i2 = 0.0
            if self.n_interferers:
                cells = rng.choice(self.space.dim_if, size=self.n_interferers,
                                   p=self.if_probs)
                on2 = self.if_active[cells] > 0
                if on2.any():
                    idx = np.nonzero(on2)[0]
                    gains, _ = sample_link(self.int_dist3d[idx, self.if_hover[cells][idx], assoc],
                                           self.int_theta[idx, self.if_hover[cells][idx], assoc],
                                           sim.chan, rng)
                    powers = sim.power_levels_w[self.if_pidx[cells][idx]]
                    contrib = gains * powers
                    i2 = float(contrib.sum())
                    i1 = float(contrib[self.if_mode2[cells][idx] > 0].sum())
            sinr2 = float(own_gain) * power / (i2 + sim.n0)
            if mode == 2:
                sinr1 = float(own_gain) * power / (i1 + sim.n0)

        rate = achievable_rate(mode, sinr1, sinr2, sim.eta, sim.bandwidth,
                               sim.tau1, sim.tau2)
        e_total = float(sim.e_total_table[state.prev_hover, hover, p_idx])
        harvest = float(sim.draw_harvest(rng))
        ee = rate / e_total
        reward = slot_reward(ee, power, mode, state.battery, e_total, sim.sigma,
                             sim.xi, sim.energy.e_min_j, sim.tau1, sim.tau2)
        battery = step_battery(state.battery, e_total, harvest, sim.energy.e_max_j)
        bits = step_demand(state.demand_bits, sim.chain, rng)
        nxt = AgentState(bits, hover, battery)
        outcome = SlotOutcome(mode=mode, rate_bits=rate, e_total=e_total,
                              harvest=harvest, ee=ee, reward=reward,
                              sinr1=sinr1, sinr2=sinr2, power_w=power,
                              interference_penalty=sim.interference_penalty(power, mode),
                              infeasible=bool(infeasible))
        return nxt, outcome


# ----------------------------------------------------------------------
# feature encoding


def state_feature_dim(space: StateActionSpace, feature_mode):
    U = space.n_gus
    return U + 2 if feature_mode == "full" else 2 * U + 1


def encode_state_features(state: AgentState, sim: SimModel, feature_mode):
    """Per-GU demand bits plus hover and battery-level features.

    COMPACT uses a one-hot hover; FULL keeps the nominal scalar (U+2)-wide
    state encoding.
    """
    U = sim.geom.n_gus
    levels = sim.space.battery_levels
    lvl = state.battery_level(sim.energy.e_max_j, levels) / max(levels - 1, 1)
    bits = state.demand_bits.astype(float)
    if feature_mode == "full":
        return np.concatenate([bits, [state.prev_hover / max(U - 1, 1)], [lvl]])
    onehot = np.zeros(U)
    onehot[state.prev_hover] = 1.0
    return np.concatenate([bits, onehot, [lvl]])


def encode_features(state: AgentState, meanfield, sim: SimModel, feature_mode="compact"):
    """Full network input for one state against a frozen mean-field."""
    return np.concatenate([encode_state_features(state, sim, feature_mode),
                           meanfield.features(feature_mode)])


def batch_state_features(demands, prev_hover, battery, sim: SimModel, feature_mode):
    """(K, feat) state features for a whole population."""
    K, U = demands.shape
    levels = sim.space.battery_levels
    lvl = quantize_battery(battery, sim.energy.e_max_j, levels) / max(levels - 1, 1)
    bits = demands.astype(float)
    if feature_mode == "full":
        return np.concatenate([bits, (prev_hover / max(U - 1, 1))[:, None],
                               lvl[:, None]], axis=1)
    onehot = np.eye(U)[prev_hover]
    return np.concatenate([bits, onehot, lvl[:, None]], axis=1)


# ----------------------------------------------------------------------
# full population


class World:
    """Joint simulator state for all cells."""

    def __init__(self, sim: SimModel, rng):
        K, U = sim.geom.n_cells, sim.geom.n_gus
        self.sim = sim
        self.demands = sample_stationary((K, U), sim.chain, rng)
        self.prev_hover = rng.integers(U, size=K)
        self.battery = np.full(K, sim.energy.e_max_j)
        self.active = np.ones(K, dtype=bool)   # robustness experiments clear entries

    def state_indices(self):
        sim = self.sim
        U = sim.geom.n_gus
        bits_int = self.demands.astype(int) @ (1 << np.arange(U))
        lvl = quantize_battery(self.battery, sim.energy.e_max_j, sim.space.battery_levels)
        return sim.space.encode_state(bits_int, self.prev_hover, lvl)

    def state_features(self, feature_mode):
        return batch_state_features(self.demands, self.prev_hover, self.battery,
                                    self.sim, feature_mode)

    def feasible_masks(self):
        return self.sim.feasible_masks_batch(self.prev_hover, self.battery)

    def deactivate(self, cells):
        self.active[np.asarray(cells)] = False


def step_world(world: World, actions, rng):
    """Advance every cell one slot under the given joint action indices.

    Links are sampled once per slot; interference respects the two-phase
    protocol (flight-phase interference comes only from full-slot hoverers).
    Returns a dict of per-cell outcome arrays (NaN rows for inactive cells).
    """
    sim = world.sim
    K = sim.geom.n_cells
    assoc, hover, p_idx = sim.space.decode_actions(np.asarray(actions))
    assoc, hover, p_idx = assoc.copy(), hover.copy(), p_idx.copy()

    # energy-infeasible or deactivated cells fall back to silent hovering
    e_req = sim.e_total_table[world.prev_hover, hover, p_idx]
    bad = (e_req > world.battery) | ~world.active
    assoc[bad] = 0
    hover[bad] = world.prev_hover[bad]
    p_idx[bad] = 0
    infeasible = bad & world.active

    mode2 = hover == world.prev_hover
    power = sim.power_levels_w[p_idx]
    serving_active = (p_idx > 0) & world.demands[np.arange(K), assoc] & world.active
    tx2 = serving_active              # transmitting during the hover phase
    tx1 = serving_active & mode2      # transmitting during the flight phase

    sinr1 = np.zeros(K)
    sinr2 = np.zeros(K)
    rx = np.nonzero(serving_active)[0]
    if len(rx):
        tx = rx                        # receivers are exactly the transmitters
        txy = sim.geom.hover_xy(tx, hover[tx])
        rxy = sim.geom.gu_xy(rx, assoc[rx])
        d = txy[:, None, :] - rxy[None, :, :]
        horiz = np.hypot(d[..., 0], d[..., 1])
        dist3d = np.sqrt(horiz ** 2 + sim.geom.altitude_m ** 2)
        theta = elevation_from_horizontal(horiz, sim.geom.altitude_m)
        gains, _ = sample_link(dist3d, theta, sim.chan, rng)   # (T, R)
        pg = gains * power[tx][:, None]
        own = np.einsum("ii->i", pg).copy()
        total2 = pg.sum(axis=0)
        total1 = (pg * mode2[tx][:, None]).sum(axis=0)
        i2 = total2 - own
        i1 = total1 - own * mode2[rx]
        sinr2[rx] = own / (i2 + sim.n0)
        s1 = own / (i1 + sim.n0)
        sinr1[rx] = np.where(mode2[rx], s1, 0.0)

    per_second = sim.bandwidth * np.log2(1.0 + sim.eta)
    rate = (np.where(sinr2 >= sim.eta, sim.tau2, 0.0)
            + np.where(mode2 & (sinr1 >= sim.eta), sim.tau1, 0.0)) * per_second
    rate = np.where(serving_active, rate, 0.0)

    e_total = sim.e_total_table[world.prev_hover, hover, p_idx]
    ee = rate / e_total
    phi = mode2.astype(float)
    penalty_if = sim.sigma * power * (phi * sim.tau1 + sim.tau2)
    alarm = sim.xi * np.maximum(e_total + sim.energy.e_min_j - world.battery, 0.0)
    reward = ee - penalty_if - alarm

    harvest = sim.draw_harvest(rng, size=K)
    new_battery = np.minimum(np.maximum(world.battery - e_total, 0.0) + harvest,
                             sim.energy.e_max_j)
    act = world.active
    world.battery = np.where(act, new_battery, world.battery)
    world.prev_hover = np.where(act, hover, world.prev_hover)
    world.demands = step_demand(world.demands, sim.chain, rng)

    nan = np.where(act, 1.0, np.nan)
    return {
        "reward": reward * nan,
        "ee": ee * nan,
        "interference_penalty": penalty_if * nan,
        "rate_bits": rate * nan,
        "e_total": e_total * nan,
        "power_w": power * nan,
        "flying": (~mode2).astype(float) * nan,
        "sinr1": sinr1,
        "sinr2": sinr2,
        "mode": np.where(mode2, 2, 1),
        "hover": hover,
        "assoc": assoc,
        "power_idx": p_idx,
        "infeasible": infeasible,
    }


class FullObsPopulation:
    """Population rollout adapter used by mean-field propagation."""

    def __init__(self, sim: SimModel, feature_mode="compact"):
        self.sim = sim
        self.feature_mode = feature_mode
        self.world = None
        self.last_out = None

    def reset(self, rng):
        self.world = World(self.sim, rng)
        self.last_out = None

    def slot(self, policy, rng):
        """Act with the policy everywhere, step, and report (s, a) joint indices
        of the non-representative cells."""
        world = self.world
        s_idx = world.state_indices()
        masks = world.feasible_masks()
        feats = world.state_features(self.feature_mode)
        actions = policy.act_batch(feats, masks, rng)
        self.last_out = step_world(world, actions, rng)
        keep = np.ones(self.sim.geom.n_cells, dtype=bool)
        keep[self.sim.geom.rep_cell] = False
        return s_idx[keep] * self.sim.space.dim_a + np.asarray(actions)[keep], None
