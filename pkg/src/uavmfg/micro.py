"""Enumerable micro instance: 1 GU per cell, 2 power levels, 3 battery levels.

Six states, two actions, and a fully enumerable transition law, so the soft
Bellman fixed point, the best response, and the distribution push-forward are
all exact.  Rewards come from the real channel/energy functions evaluated at
their means (fading pinned to its unit mean, LoS forced on the overhead link,
interference at its expectation under the frozen mean-field); battery dynamics
are abstracted to level granularity: transmitting costs one level, a clear-sky
slot recharges one level with probability 1/2, clamped to [0, 2].
"""

from __future__ import annotations

import numpy as np

from .channel import (ChannelParams, elevation_from_horizontal, los_probability,
                      mean_link_gain)
from .config import ExperimentConfig, validate, with_overrides
from .energy import EnergyParams, slot_reward, total_energy
from .meanfield import MeanField
from .spaces import StateActionSpace


def micro_config(**kwargs):
    base = dict(grid_rows=3, grid_cols=3, gus_per_cell=1, battery_levels=3,
                power_levels_mw=(0.0, 50.0), episodes=150, steps_per_episode=60,
                minibatch=64, buffer_capacity=600, target_period=50,
                outer_iters=20, tol_tv=1e-3)
    base.update(kwargs)
    return validate(ExperimentConfig(**base))


class MicroInstance:
    """Exact (R, P) tables for a frozen mean-field, plus exact propagation."""

    N_LEVELS = 3
    RECHARGE_PROB = 0.5   # the two cloud states are equiprobable; only the
                          # clear-sky slot restores a battery level

    def __init__(self, cfg=None):
        self.cfg = cfg = cfg if cfg is not None else micro_config()
        self.space = StateActionSpace(1, self.N_LEVELS, 2)
        self.chan = ChannelParams.from_config(cfg)
        self.energy = EnergyParams.from_config(cfg)
        self.chain_p = cfg.p_activate
        self.chain_q = cfg.q_stay_active
        self.p_tx = cfg.power_levels_w[1]
        self.n0 = cfg.n0_w
        self.eta = cfg.eta_linear
        self.n_neighbors = cfg.n_cells - 1
        d = cfg.altitude_m
        # overhead link: LoS forced, fading at its mean
        self.own_gain = cfg.a_los * d ** -cfg.alpha_los
        horiz = cfg.cell_side_m
        dist = np.hypot(horiz, d)
        theta = float(elevation_from_horizontal(horiz, d))
        self.neighbor_gain = float(mean_link_gain(dist, theta, self.chan))
        # mode is always 2 with one hover point
        self.e_tx = total_energy(2, self.p_tx, 0.0, self.energy, cfg.tau1_s, cfg.tau2_s)
        self.e_silent = total_energy(2, 0.0, 0.0, self.energy, cfg.tau1_s, cfg.tau2_s)
        rate = (cfg.tau1_s + cfg.tau2_s) * cfg.bandwidth_hz * np.log2(1.0 + self.eta)
        self.rate_success = float(rate)
        self.transitions = self._build_transitions()

    # state s = (demand bit)*3 + battery level; action 0 silent, 1 transmit
    def decode(self, s):
        bits, _, lvl = self.space.decode_state(s)
        return bits, lvl

    def level_energy(self, lvl):
        return (lvl + 0.5) / self.N_LEVELS * self.energy.e_max_j

    def expected_interference(self, meanfield):
        """Mean interference power: every neighbor transmits independently
        with the mean-field's serving-active probability."""
        _, p_idx, _, active = self.space.decode_if_cells(np.arange(self.space.dim_if))
        pr_on = float(meanfield.marginal_if[(active > 0) & (p_idx > 0)].sum())
        return self.n_neighbors * pr_on * self.p_tx * self.neighbor_gain

    def rewards(self, meanfield):
        """(6, 2) reward table under the frozen mean-field."""
        cfg = self.cfg
        interference = self.expected_interference(meanfield)
        sinr = self.p_tx * self.own_gain / (interference + self.n0)
        R = np.zeros((self.space.dim_s, 2))
        for s in range(self.space.dim_s):
            bits, lvl = self.decode(s)
            e = self.level_energy(lvl)
            for a in range(2):
                delivered = self.rate_success if (a and bits and sinr >= self.eta) else 0.0
                e_total = self.e_tx if a else self.e_silent
                power = self.p_tx if a else 0.0
                ee = delivered / e_total
                R[s, a] = slot_reward(ee, power, 2, e, e_total, cfg.sigma_penalty,
                                      cfg.xi_per_j, cfg.e_min_j, cfg.tau1_s, cfg.tau2_s)
        return R

    def _build_transitions(self):
        """(6, 2, 6) exact transition tensor."""
        P = np.zeros((self.space.dim_s, 2, self.space.dim_s))
        for s in range(self.space.dim_s):
            bits, lvl = self.decode(s)
            pr_active = self.chain_q if bits else self.chain_p
            for a in range(2):
                for recharge, pr_r in ((1, self.RECHARGE_PROB), (0, 1 - self.RECHARGE_PROB)):
                    nlvl = int(np.clip(lvl - a + recharge, 0, self.N_LEVELS - 1))
                    for nbits, pr_x in ((1, pr_active), (0, 1 - pr_active)):
                        ns = self.space.encode_state(nbits, 0, nlvl)
                        P[s, a, ns] += pr_r * pr_x
        return P

    def best_response(self, meanfield, gamma, phi):
        """Exact soft-optimal policy against the frozen mean-field."""
        from .softq import soft_policy, tabular_soft_value_iteration
        q = tabular_soft_value_iteration(self.rewards(meanfield), self.transitions,
                                         gamma, phi)
        return soft_policy(q, phi), q

    def propagate_exact(self, policy_probs, tol=1e-12, max_iter=10000):
        """Stationary mean-field under the policy: power-iterate the induced
        state chain, then take the product with the policy."""
        T = np.einsum("sa,sat->st", policy_probs, self.transitions)
        mu = np.full(self.space.dim_s, 1.0 / self.space.dim_s)
        for _ in range(max_iter):
            nxt = mu @ T
            if np.abs(nxt - mu).max() < tol:
                mu = nxt
                break
            mu = nxt
        return MeanField(mu[:, None] * policy_probs, self.space)

    def propagate_empirical(self, policy_probs, n_agents, slots, rng,
                            average_last=None):
        """Monte Carlo version of the push-forward, for cross-checking."""
        if average_last is None:
            average_last = slots // 2
        states = rng.integers(self.space.dim_s, size=n_agents)
        joint = np.zeros((self.space.dim_s, 2))
        cum_pi = policy_probs.cumsum(axis=1)
        cum_p = self.transitions.cumsum(axis=2)
        for t in range(slots):
            actions = (cum_pi[states] > rng.random((n_agents, 1))).argmax(axis=1)
            if t >= slots - average_last:
                np.add.at(joint, (states, actions), 1.0)
            states = (cum_p[states, actions] > rng.random((n_agents, 1))).argmax(axis=1)
        return MeanField(joint, self.space)

    def uniform_meanfield(self):
        return MeanField(np.ones((self.space.dim_s, 2)), self.space)

    def solve(self, gamma=None, phi=None, outer_iters=None, tol=None,
              initial=None):
        """Exact two-step fixed point; returns the report."""
        from .meanfield import solve_equilibrium
        cfg = self.cfg
        gamma = cfg.gamma if gamma is None else gamma
        phi = cfg.entropy_weight if phi is None else phi
        outer = cfg.outer_iters if outer_iters is None else outer_iters
        tol = cfg.tol_tv if tol is None else tol
        mf0 = self.uniform_meanfield() if initial is None else initial

        def br(mf, _i):
            pi, q = self.best_response(mf, gamma, phi)
            return pi, {"q": q}

        def prop(pi, _mf):
            return self.propagate_exact(pi)

        return solve_equilibrium(mf0, br, prop, outer, tol)


class MicroEnv:
    """Slot interface over the micro MDP so the network trainers can run on
    an instance with a known exact solution."""

    def __init__(self, instance: MicroInstance, meanfield, include_meanfield=True):
        self.inst = instance
        self.R = instance.rewards(meanfield)
        self.cum_p = instance.transitions.cumsum(axis=2)
        self.mf_features = meanfield.marginal_if if include_meanfield else np.zeros(0)
        self.num_actions = 2
        self.feature_dim = instance.space.dim_s + len(self.mf_features)

    def reset(self, rng):
        return int(rng.integers(self.inst.space.dim_s))

    def feasible_mask(self, state):
        return np.ones(2, dtype=bool)

    def features(self, state):
        onehot = np.zeros(self.inst.space.dim_s)
        onehot[state] = 1.0
        return np.concatenate([onehot, self.mf_features])

    def step(self, state, a_idx, rng):
        from .env import SlotOutcome
        reward = float(self.R[state, a_idx])
        nxt = int((self.cum_p[state, a_idx] > rng.random()).argmax())
        outcome = SlotOutcome(mode=2, rate_bits=0.0, e_total=0.0, harvest=0.0,
                              ee=0.0, reward=reward, sinr1=0.0, sinr2=0.0,
                              power_w=self.inst.p_tx if a_idx else 0.0)
        return nxt, outcome
