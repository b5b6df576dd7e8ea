"""Mean-field distributions over (state, action) pairs and the two-step
fixed-point iteration.

The population distribution L is a joint table over the discrete state and
action spaces.  One outer iteration maps L to L' by first training a best
response against the frozen L, then propagating a fresh population under that
policy and histogramming where it settles.  Convergence is measured in total
variation, which on these finite spaces coincides with the discrete
1-Wasserstein metric under the trivial ground distance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class MeanField:
    """Joint distribution plus its interference-relevant marginal.

    ``marginal_if`` is derived exactly from the joint when the space supports
    the push-forward (full observability); otherwise it must be supplied
    (partial observability estimates it empirically during rollouts).
    """

    def __init__(self, joint, space, marginal_if=None):
        joint = np.asarray(joint, dtype=float)
        total = joint.sum()
        if total <= 0:
            raise ValueError("mean-field joint must have positive mass")
        self.joint = joint / total
        self.space = space
        if marginal_if is None:
            marginal_if = space.if_marginal(self.joint)
        m = np.asarray(marginal_if, dtype=float)
        self.marginal_if = m / m.sum()

    def features(self, feature_mode="compact"):
        if feature_mode == "full":
            return self.joint.ravel()
        return self.marginal_if

    def distance(self, other):
        """Total variation between the joints."""
        return 0.5 * float(np.abs(self.joint - other.joint).sum())


def distance(mf_a, mf_b):
    """TV distance between two mean-fields (or raw probability tables)."""
    a = mf_a.joint if hasattr(mf_a, "joint") else np.asarray(mf_a, dtype=float)
    b = mf_b.joint if hasattr(mf_b, "joint") else np.asarray(mf_b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"support mismatch: {a.shape} vs {b.shape}")
    return 0.5 * float(np.abs(a - b).sum())


def empirical_meanfield(state_indices, action_indices, space):
    """Normalized (s, a) histogram of a population snapshot."""
    s = np.asarray(state_indices)
    a = np.asarray(action_indices)
    if s.size == 0:
        raise ValueError("empty population")
    joint = np.zeros((space.dim_s, space.dim_a))
    np.add.at(joint, (s, a), 1.0)
    return MeanField(joint, space)


def uniform_feasible(sim):
    """Uniform initial mean-field over energy-feasible (s, a) pairs.

    Each battery level is represented by its midpoint energy when deciding
    feasibility, so low levels exclude the expensive fly-and-blast actions.
    """
    space = sim.space
    joint = np.zeros((space.dim_s, space.dim_a))
    levels = space.battery_levels
    for s in range(space.dim_s):
        _, prev, lvl = space.decode_state(s)
        e_mid = (lvl + 0.5) / levels * sim.energy.e_max_j
        joint[s] = sim.feasible_mask(prev, e_mid)
    return MeanField(joint, space)


def propagate_population(population, policy, rng, slots, average_last, dim_joint,
                         dim_if=None):
    """Roll a fresh population forward and histogram its late-time behavior.

    Returns (joint counts normalized, if-marginal or None).  The first
    ``slots - average_last`` slots are burn-in; the histogram averages the
    remainder, by which point the population has settled under the policy.
    """
    population.reset(rng)
    joint = np.zeros(dim_joint)
    marg = np.zeros(dim_if) if dim_if is not None else None
    start = slots - average_last
    for t in range(slots):
        idx, if_idx = population.slot(policy, rng)
        if t >= start:
            np.add.at(joint, idx, 1.0)
            if marg is not None and if_idx is not None:
                np.add.at(marg, if_idx, 1.0)
    joint /= joint.sum()
    if marg is not None:
        # silent populations leave no interference evidence; fall back to flat
        marg = marg / marg.sum() if marg.sum() > 0 else np.full(dim_if, 1.0 / dim_if)
    return joint, marg


@dataclass
class EquilibriumReport:
    distances: list = field(default_factory=list)       # d(L_i, L_{i+1})
    contraction_ratios: list = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    meanfield: MeanField = None
    policy: object = None
    training_history: list = field(default_factory=list)


def solve_equilibrium(initial_mf, best_response, propagate, outer_iters, tol_tv):
    """Iterate L -> propagate(best_response(L), L) until the TV step is small.

    ``best_response(mf, i)`` returns (policy, stats); ``propagate(policy, mf)``
    returns the successor MeanField.  Stops early once the step distance drops
    below ``tol_tv``.
    """
    report = EquilibriumReport()
    mf = initial_mf
    for i in range(outer_iters):
        policy, stats = best_response(mf, i)
        nxt = propagate(policy, mf)
        d = mf.distance(nxt)
        report.distances.append(d)
        if len(report.distances) > 1 and report.distances[-2] > 0:
            report.contraction_ratios.append(d / report.distances[-2])
        report.training_history.append(stats)
        report.policy = policy
        mf = nxt
        report.iterations = i + 1
        if d < tol_tv:
            report.converged = True
            break
    report.meanfield = mf
    return report
