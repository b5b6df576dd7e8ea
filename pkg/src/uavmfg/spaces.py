"""Discrete state/action indexing and the interference-relevant marginal map.

A UAV's discrete state is (demand bit-pattern, previous hover point, battery
level); its action is (associated GU, hover point, power index).  Power index
0 is the null transmission: the association is then irrelevant, which makes
the action table contain duplicate silent actions, matching the nominal
dim(A) = U^2 * L_p action space.
"""

from __future__ import annotations

import numpy as np


class StateActionSpace:
    def __init__(self, n_gus, battery_levels, n_powers):
        self.n_gus = n_gus
        self.battery_levels = battery_levels
        self.n_powers = n_powers
        self.dim_s = (2 ** n_gus) * n_gus * battery_levels
        self.dim_a = n_gus * n_gus * n_powers
        self.dim_if = n_gus * n_powers * 2 * 2
        self._if_table = self._build_if_table()

    # -- state --------------------------------------------------------
    def encode_state(self, bits_int, prev_hover, e_level):
        return (bits_int * self.n_gus + prev_hover) * self.battery_levels + e_level

    def decode_state(self, idx):
        e_level = idx % self.battery_levels
        rest = idx // self.battery_levels
        return rest // self.n_gus, rest % self.n_gus, e_level

    # -- action -------------------------------------------------------
    def encode_action(self, assoc, hover, p_idx):
        return (assoc * self.n_gus + hover) * self.n_powers + p_idx

    def decode_action(self, idx):
        p_idx = idx % self.n_powers
        rest = idx // self.n_powers
        return rest // self.n_gus, rest % self.n_gus, p_idx

    def decode_actions(self, idx):
        """Vectorized decode -> (assoc, hover, p_idx) integer arrays."""
        idx = np.asarray(idx)
        p_idx = idx % self.n_powers
        rest = idx // self.n_powers
        return rest // self.n_gus, rest % self.n_gus, p_idx

    # -- interference-relevant marginal ---------------------------------
    def if_index(self, hover, p_idx, mode2, active):
        return ((hover * self.n_powers + p_idx) * 2 + mode2) * 2 + active

    def _build_if_table(self):
        """(dim_s, dim_a) table mapping each pair to its marginal cell."""
        s = np.arange(self.dim_s)
        a = np.arange(self.dim_a)
        bits, prev, _ = (np.array(v) for v in zip(*[self.decode_state(i) for i in s]))
        assoc, hover, p_idx = self.decode_actions(a)
        mode2 = hover[None, :] == prev[:, None]
        active = (((bits[:, None] >> assoc[None, :]) & 1) > 0) & (p_idx[None, :] > 0)
        return self.if_index(hover[None, :], p_idx[None, :],
                             mode2.astype(int), active.astype(int))

    def if_marginal(self, joint):
        """Exact push-forward of a joint (dim_s, dim_a) table."""
        out = np.zeros(self.dim_if)
        np.add.at(out, self._if_table.ravel(), np.asarray(joint).ravel())
        return out

    def decode_if(self, idx):
        active = idx % 2
        idx //= 2
        mode2 = idx % 2
        idx //= 2
        return idx // self.n_powers, idx % self.n_powers, mode2, active

    def decode_if_cells(self, idx):
        idx = np.asarray(idx)
        active = idx % 2
        rest = idx // 2
        mode2 = rest % 2
        rest = rest // 2
        return rest // self.n_powers, rest % self.n_powers, mode2, active


class ObsActionSpace:
    """Histogram support for the partially observable mean-field.

    The compressed history z is summarized by (count of believed-active GUs,
    staleness bucket of the mean staleness: 0, 1-4, >=5); the action
    contributes (hover, power index).  No exact interference push-forward
    exists here, so the interference marginal is estimated alongside the joint
    during population rollouts.
    """

    N_BUCKETS = 3

    def __init__(self, n_gus, n_powers):
        self.n_gus = n_gus
        self.n_powers = n_powers
        self.dim_z = (n_gus + 1) * self.N_BUCKETS
        self.dim_a = n_gus * n_gus * n_powers
        self.dim_joint = self.dim_z * self.dim_a
        self.dim_if = n_gus * n_powers * 2 * 2

    @staticmethod
    def staleness_bucket(mean_staleness):
        b = np.where(np.asarray(mean_staleness) < 0.5, 0,
                     np.where(np.asarray(mean_staleness) < 5.0, 1, 2))
        return int(b) if b.ndim == 0 else b

    def encode_z(self, active_count, mean_staleness):
        return active_count * self.N_BUCKETS + self.staleness_bucket(mean_staleness)

    def encode_joint(self, z_idx, a_idx):
        return z_idx * self.dim_a + a_idx
