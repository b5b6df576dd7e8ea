import numpy as np
import pytest

from uavmfg.meanfield import (MeanField, distance, empirical_meanfield,
                              solve_equilibrium, uniform_feasible)
from uavmfg.spaces import StateActionSpace


@pytest.fixture(scope="module")
def small_space():
    return StateActionSpace(n_gus=2, battery_levels=2, n_powers=2)


def test_meanfield_normalization(small_space):
    mf = MeanField(np.ones((small_space.dim_s, small_space.dim_a)), small_space)
    assert mf.joint.sum() == pytest.approx(1.0, abs=1e-9)
    assert (mf.joint >= 0).all()
    assert mf.marginal_if.sum() == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ValueError):
        MeanField(np.zeros((small_space.dim_s, small_space.dim_a)), small_space)


def test_distance_examples(small_space):
    a = np.zeros((2, 2))
    a[0, 0] = 1.0
    b = np.zeros((2, 2))
    b[1, 1] = 1.0
    assert distance(a, a) == 0.0
    assert distance(a, b) == 1.0
    assert distance(np.array([0.75, 0.25]), np.array([0.25, 0.75])) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        distance(np.ones(3) / 3, np.ones(4) / 4)


def test_distance_metric_properties(rng):
    for _ in range(1000):
        p, q, r = rng.random((3, 16))
        p, q, r = p / p.sum(), q / q.sum(), r / r.sum()
        dpq = distance(p, q)
        assert dpq == pytest.approx(distance(q, p))
        assert 0.0 <= dpq <= 1.0 + 1e-12
        assert dpq <= distance(p, r) + distance(r, q) + 1e-12
    assert distance(p, p) == 0.0


def test_empirical_meanfield_examples(small_space):
    # point mass
    mf = empirical_meanfield([3] * 10, [1] * 10, small_space)
    assert mf.joint[3, 1] == 1.0
    # two distinct cells
    mf2 = empirical_meanfield([0, 1], [0, 1], small_space)
    assert mf2.joint[0, 0] == 0.5 and mf2.joint[1, 1] == 0.5
    # 48 agents spread uniformly over 4 actions: exact quarters
    s = np.zeros(48, dtype=int)
    a = np.tile(np.arange(4), 12)
    mf3 = empirical_meanfield(s, a, small_space)
    assert np.allclose(mf3.joint[0, :4], 0.25)
    with pytest.raises(ValueError):
        empirical_meanfield([], [], small_space)


def test_marginal_recompute_consistency(small_space, rng):
    joint = rng.random((small_space.dim_s, small_space.dim_a))
    mf = MeanField(joint, small_space)
    assert np.allclose(mf.marginal_if, small_space.if_marginal(mf.joint), atol=1e-15)


def test_uniform_feasible_respects_energy():
    from uavmfg.config import desk_scale_config
    from uavmfg.env import SimModel
    # shrink the battery so low levels genuinely exclude expensive actions
    sim = SimModel(desk_scale_config(e_max_j=2e4, e_min_j=5e3))
    mf = uniform_feasible(sim)
    assert mf.joint.sum() == pytest.approx(1.0, abs=1e-9)
    space = sim.space
    levels = space.battery_levels
    excluded = supported = 0
    for s in range(0, space.dim_s, 7):
        _, prev, lvl = space.decode_state(s)
        e_mid = (lvl + 0.5) / levels * sim.energy.e_max_j
        mask = sim.feasible_mask(prev, e_mid)
        row = mf.joint[s]
        assert ((row > 0) == mask).all() or (row == 0).all()
        excluded += (~mask).sum()
        supported += mask.sum()
    assert excluded > 0 and supported > 0


def test_solve_equilibrium_immediate_fixed_point(small_space):
    mf0 = MeanField(np.ones((small_space.dim_s, small_space.dim_a)), small_space)
    report = solve_equilibrium(mf0, lambda mf, i: ("policy", {}),
                               lambda pol, mf: mf, outer_iters=5, tol_tv=1e-3)
    assert report.converged
    assert report.iterations == 1
    assert report.distances == [0.0]
    assert report.policy == "policy"


def test_solve_equilibrium_contracting_map(small_space, rng):
    target = rng.random((small_space.dim_s, small_space.dim_a))
    target = MeanField(target, small_space)

    def propagate(pol, mf):
        return MeanField(0.5 * mf.joint + 0.5 * target.joint, small_space)

    mf0 = MeanField(np.ones((small_space.dim_s, small_space.dim_a)), small_space)
    report = solve_equilibrium(mf0, lambda mf, i: (None, {}), propagate,
                               outer_iters=40, tol_tv=1e-6)
    assert report.converged
    assert all(r == pytest.approx(0.5, abs=1e-9) for r in report.contraction_ratios)
    assert report.meanfield.distance(target) < 1e-5


def test_solve_equilibrium_budget_exhaustion(small_space):
    # oscillating map never converges; best iterate returned with the flag down
    a = MeanField(np.eye(small_space.dim_s, small_space.dim_a) + 1e-9, small_space)
    b = MeanField(np.eye(small_space.dim_s, small_space.dim_a)[::-1] + 1e-9,
                  small_space)

    def propagate(pol, mf):
        return b if mf is a else a

    report = solve_equilibrium(a, lambda mf, i: (None, {}), propagate,
                               outer_iters=6, tol_tv=1e-6)
    assert not report.converged
    assert report.iterations == 6
    assert len(report.distances) == 6
