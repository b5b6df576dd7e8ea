"""Partially observable variant: limited demand sensing and belief histories.

Each slot the UAV only senses the demand of the ``ceil(coverage * U)`` ground
users nearest its hover point.  Symbols: 1 = observed active, 0 = observed
idle, 2 = unobserved.  The unbounded observation history is compressed to a
per-GU (last seen bit, staleness) pair; staleness saturates at a cap and is
fed to the network normalized.

The population distribution lives on (compressed observation, action); its
interference marginal cannot be pushed forward exactly (the true demand is
hidden), so it is estimated empirically during the same rollout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .env import AgentState, SimModel, World, step_world
from .meanfield import MeanField
from .spaces import ObsActionSpace

UNOBSERVED = 2


def coverage_table(sim: SimModel, coverage_fraction):
    """(U, U) bool: from hover point n, which GUs are sensed."""
    U = sim.geom.n_gus
    count = max(1, math.ceil(coverage_fraction * U))
    cover = np.zeros((U, U), dtype=bool)
    for n in range(U):
        cover[n, np.argsort(sim.geom.hover_dist[n], kind="stable")[:count]] = True
    return cover


def observe(demand_bits, hover, cover):
    """Observation symbols for one cell given its true demand."""
    sym = np.full(len(demand_bits), UNOBSERVED, dtype=int)
    seen = cover[hover]
    sym[seen] = np.asarray(demand_bits, dtype=int)[seen]
    return sym


@dataclass
class CompressedHistory:
    xhat: np.ndarray        # (U,) last observed demand bit
    staleness: np.ndarray   # (U,) slots since last observation, saturated

    @classmethod
    def initial(cls, n_gus, cap):
        return cls(np.zeros(n_gus, dtype=int), np.full(n_gus, cap, dtype=int))

    def update(self, symbols, cap):
        seen = symbols != UNOBSERVED
        xhat = np.where(seen, symbols, self.xhat)
        staleness = np.where(seen, 0, np.minimum(self.staleness + 1, cap))
        return CompressedHistory(xhat, staleness)


@dataclass
class PartialObsState:
    agent: AgentState
    history: CompressedHistory


def obs_meanfield_uniform(space: ObsActionSpace):
    joint = np.ones((space.dim_z, space.dim_a))
    return MeanField(joint, space, marginal_if=np.ones(space.dim_if))


class PartialObsEnv:
    """Representative-agent view under limited sensing.

    The physics are identical to the fully observed env; only the agent's
    features change, and the frozen mean-field is the observation-action
    distribution plus an empirically estimated interference marginal.
    """

    def __init__(self, sim: SimModel, meanfield, coverage_fraction, staleness_cap,
                 include_meanfield=True, feature_mode="compact"):
        from .env import RepresentativeEnv
        self.sim = sim
        self.cap = staleness_cap
        self.cover = coverage_table(sim, coverage_fraction)
        self.obs_space = ObsActionSpace(sim.geom.n_gus, sim.space.n_powers)
        self.inner = RepresentativeEnv(sim, meanfield,
                                       include_meanfield=include_meanfield,
                                       feature_mode=feature_mode)
        self.mf_features = self.inner.mf_features
        self.num_actions = self.inner.num_actions
        U = sim.geom.n_gus
        self.feature_dim = 2 * U + 2 + len(self.mf_features)

    def reset(self, rng):
        agent = self.inner.reset(rng)
        hist = CompressedHistory.initial(self.sim.geom.n_gus, self.cap)
        sym = observe(agent.demand_bits, agent.prev_hover, self.cover)
        return PartialObsState(agent, hist.update(sym, self.cap))

    def feasible_mask(self, state: PartialObsState):
        return self.inner.feasible_mask(state.agent)

    def features(self, state: PartialObsState):
        sim = self.sim
        U = sim.geom.n_gus
        lvl = state.agent.battery_level(sim.energy.e_max_j, sim.space.battery_levels)
        z = np.concatenate([state.history.xhat.astype(float),
                            state.history.staleness / self.cap,
                            [state.agent.prev_hover / max(U - 1, 1)],
                            [lvl / max(sim.space.battery_levels - 1, 1)]])
        return np.concatenate([z, self.mf_features])

    def z_index(self, state: PartialObsState):
        return self.obs_space.encode_z(int(state.history.xhat.sum()),
                                       float(state.history.staleness.mean()))

    def step(self, state: PartialObsState, a_idx, rng):
        agent, outcome = self.inner.step(state.agent, a_idx, rng)
        sym = observe(agent.demand_bits, agent.prev_hover, self.cover)
        hist = state.history.update(sym, self.cap)
        return PartialObsState(agent, hist), outcome


def train_pomfg(env: "PartialObsEnv", cfg, rng, net=None, buffer=None):
    """Maximum-entropy training on compressed-history features; the loop is
    identical to the fully observed case, only the inputs differ."""
    from .softq import train_best_response
    return train_best_response(env, cfg, rng, net=net, buffer=buffer)


class PartialObsPopulation:
    """Population rollout adapter producing (z, a) joint indices plus the
    empirically observed interference-marginal indices."""

    def __init__(self, sim: SimModel, coverage_fraction, staleness_cap):
        self.sim = sim
        self.cap = staleness_cap
        self.cover = coverage_table(sim, coverage_fraction)
        self.obs_space = ObsActionSpace(sim.geom.n_gus, sim.space.n_powers)
        self.world = None
        self.xhat = None
        self.staleness = None
        self.last_out = None

    def reset(self, rng):
        self.world = World(self.sim, rng)
        K, U = self.sim.geom.n_cells, self.sim.geom.n_gus
        self.xhat = np.zeros((K, U), dtype=int)
        self.staleness = np.full((K, U), self.cap, dtype=int)
        self._sense()

    def _sense(self):
        seen = self.cover[self.world.prev_hover]     # (K, U)
        self.xhat = np.where(seen, self.world.demands.astype(int), self.xhat)
        self.staleness = np.where(seen, 0, np.minimum(self.staleness + 1, self.cap))

    def _features(self):
        sim = self.sim
        U = sim.geom.n_gus
        from .energy import quantize_battery
        lvl = quantize_battery(self.world.battery, sim.energy.e_max_j,
                               sim.space.battery_levels)
        return np.concatenate([
            self.xhat.astype(float),
            self.staleness / self.cap,
            (self.world.prev_hover / max(U - 1, 1))[:, None],
            (lvl / max(sim.space.battery_levels - 1, 1))[:, None]], axis=1)

    def slot(self, policy, rng):
        sim = self.sim
        world = self.world
        z_idx = self.obs_space.encode_z(self.xhat.sum(axis=1),
                                        self.staleness.mean(axis=1))
        masks = world.feasible_masks()
        actions = policy.act_batch(self._features(), masks, rng)
        demands_before = world.demands.copy()
        out = step_world(world, actions, rng)
        self.last_out = out
        hover, assoc, p_idx = out["hover"], out["assoc"], out["power_idx"]
        mode2 = (out["mode"] == 2).astype(int)
        active = ((p_idx > 0)
                  & demands_before[np.arange(len(assoc)), assoc]).astype(int)
        if_idx = sim.space.if_index(hover, p_idx, mode2, active)
        self._sense()
        keep = np.ones(sim.geom.n_cells, dtype=bool)
        keep[sim.geom.rep_cell] = False
        joint = self.obs_space.encode_joint(z_idx[keep], np.asarray(actions)[keep])
        return joint, if_idx[keep]
