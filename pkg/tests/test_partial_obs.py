import numpy as np
import pytest

from uavmfg.config import desk_scale_config
from uavmfg.env import RepresentativeEnv, SimModel
from uavmfg.meanfield import propagate_population, uniform_feasible
from uavmfg.partial_obs import (UNOBSERVED, CompressedHistory, PartialObsEnv,
                                PartialObsPopulation, coverage_table,
                                obs_meanfield_uniform, observe, train_pomfg)
from uavmfg.spaces import ObsActionSpace


@pytest.fixture(scope="module")
def small_sim():
    return SimModel(desk_scale_config(grid_rows=3, grid_cols=3))


class RandomFeasiblePolicy:
    def act_batch(self, feats, masks, rng):
        return (rng.random(masks.shape) * masks).argmax(axis=1)


def test_coverage_counts(desk_sim):
    for frac, count in ((1.0, 4), (0.75, 3), (0.5, 2), (0.25, 1)):
        cover = coverage_table(desk_sim, frac)
        assert cover.shape == (4, 4)
        assert (cover.sum(axis=1) == count).all()
    # hovering over a GU always senses at least that GU
    one = coverage_table(desk_sim, 0.25)
    assert all(one[n, n] for n in range(4))


def test_observe_symbols(desk_sim):
    cover = coverage_table(desk_sim, 0.25)
    sym = observe(np.array([True, True, True, True]), 0, cover)
    assert sym[0] == 1
    assert (sym[1:] == UNOBSERVED).all()
    full = coverage_table(desk_sim, 1.0)
    sym2 = observe(np.array([False, True, False, True]), 2, full)
    assert sym2.tolist() == [0, 1, 0, 1]


def test_history_update_traces():
    cap = 16
    hist = CompressedHistory.initial(3, cap)
    assert hist.xhat.tolist() == [0, 0, 0]
    assert hist.staleness.tolist() == [cap] * 3
    # see GU 0 active, others unobserved
    hist = hist.update(np.array([1, UNOBSERVED, UNOBSERVED]), cap)
    assert hist.xhat.tolist() == [1, 0, 0]
    assert hist.staleness.tolist() == [0, cap, cap]
    # three blind slots: x-hat persists, staleness counts up
    for _ in range(3):
        hist = hist.update(np.full(3, UNOBSERVED), cap)
    assert hist.xhat.tolist() == [1, 0, 0]
    assert hist.staleness[0] == 3
    # a fresh idle observation overwrites the stale belief
    hist = hist.update(np.array([0, UNOBSERVED, UNOBSERVED]), cap)
    assert hist.xhat[0] == 0 and hist.staleness[0] == 0


def test_staleness_saturates():
    cap = 4
    hist = CompressedHistory.initial(2, cap)
    for _ in range(20):
        hist = hist.update(np.full(2, UNOBSERVED), cap)
    assert (hist.staleness == cap).all()


def test_feature_width(small_sim):
    mf = obs_meanfield_uniform(ObsActionSpace(4, small_sim.space.n_powers))
    env = PartialObsEnv(small_sim, mf, coverage_fraction=0.75, staleness_cap=16)
    assert env.feature_dim == 2 * 4 + 2 + small_sim.space.dim_if
    state = env.reset(np.random.default_rng(0))
    feats = env.features(state)
    assert len(feats) == env.feature_dim
    assert ((feats >= 0) & (feats <= 1)).all()
    bare = PartialObsEnv(small_sim, mf, 0.75, 16, include_meanfield=False)
    assert bare.feature_dim == 2 * 4 + 2


def test_never_observed_gus_stay_at_prior(small_sim):
    mf = obs_meanfield_uniform(ObsActionSpace(4, small_sim.space.n_powers))
    env = PartialObsEnv(small_sim, mf, coverage_fraction=0.25, staleness_cap=8)
    rng = np.random.default_rng(1)
    state = env.reset(rng)
    hover = state.agent.prev_hover
    stay = small_sim.space.encode_action(hover, hover, 0)   # silent, same spot
    for _ in range(12):
        state, _ = env.step(state, stay, rng)
    seen = env.cover[hover]
    assert (state.history.staleness[~seen] == 8).all()
    assert (state.history.xhat[~seen] == 0).all()
    assert state.history.staleness[hover] == 0


def test_z_index(small_sim):
    mf = obs_meanfield_uniform(ObsActionSpace(4, small_sim.space.n_powers))
    env = PartialObsEnv(small_sim, mf, 1.0, 16)
    state = env.reset(np.random.default_rng(0))
    state.history.xhat = np.array([1, 1, 0, 0])
    state.history.staleness = np.array([0, 0, 3, 3])   # mean 1.5 -> middle bucket
    assert env.z_index(state) == 2 * 3 + 1


def test_full_coverage_physics_match_full_obs(small_sim):
    # same seed, same action stream: limited sensing must not touch the physics
    mf_obs = obs_meanfield_uniform(ObsActionSpace(4, small_sim.space.n_powers))
    env_po = PartialObsEnv(small_sim, mf_obs, 1.0, 16)
    mf_full = uniform_feasible(small_sim)
    mf_full.marginal_if = mf_obs.marginal_if    # identical interferer draw
    env_fo = RepresentativeEnv(small_sim, mf_full)

    def rollout(env, unwrap):
        rng = np.random.default_rng(42)
        act_rng = np.random.default_rng(7)
        state = env.reset(rng)
        rewards = []
        for _ in range(60):
            mask = env.feasible_mask(state)
            a = int(act_rng.choice(np.flatnonzero(mask)))
            state, out = env.step(state, a, rng)
            rewards.append(out.reward)
        return rewards, unwrap(state)

    r_po, agent_po = rollout(env_po, lambda s: s.agent)
    r_fo, agent_fo = rollout(env_fo, lambda s: s)
    assert r_po == r_fo
    assert agent_po.battery == agent_fo.battery
    assert (agent_po.demand_bits == agent_fo.demand_bits).all()


def test_full_coverage_reward_distribution(small_sim):
    # different seeds now; distributions should still be indistinguishable
    scipy_stats = pytest.importorskip("scipy.stats")
    mf_obs = obs_meanfield_uniform(ObsActionSpace(4, small_sim.space.n_powers))
    env_po = PartialObsEnv(small_sim, mf_obs, 1.0, 16)
    mf_full = uniform_feasible(small_sim)
    mf_full.marginal_if = mf_obs.marginal_if
    env_fo = RepresentativeEnv(small_sim, mf_full)

    def rollout(env, seed, slots=400):
        rng = np.random.default_rng(seed)
        state = env.reset(rng)
        rewards = []
        for _ in range(slots):
            mask = env.feasible_mask(state)
            a = int(rng.choice(np.flatnonzero(mask)))
            state, out = env.step(state, a, rng)
            rewards.append(out.reward)
        return np.array(rewards)

    _, p = scipy_stats.ks_2samp(rollout(env_po, 3), rollout(env_fo, 4))
    assert p > 0.05


def test_training_determinism(small_sim):
    from uavmfg.config import with_overrides
    cfg = with_overrides(small_sim.cfg, episodes=6, steps_per_episode=20,
                         minibatch=32, buffer_capacity=200, target_period=20)
    mf = obs_meanfield_uniform(ObsActionSpace(4, small_sim.space.n_powers))

    def run():
        env = PartialObsEnv(small_sim, mf, 0.75, 16)
        _, _, stats = train_pomfg(env, cfg, np.random.default_rng(11))
        return [s["mean_reward"] for s in stats]

    assert run() == run()


def test_population_slot_index_ranges(small_sim):
    pop = PartialObsPopulation(small_sim, 0.75, 16)
    rng = np.random.default_rng(5)
    pop.reset(rng)
    space = pop.obs_space
    K = small_sim.geom.n_cells
    joint, if_idx = pop.slot(RandomFeasiblePolicy(), rng)
    assert len(joint) == len(if_idx) == K - 1
    assert (0 <= joint).all() and (joint < space.dim_joint).all()
    assert (0 <= if_idx).all() and (if_idx < space.dim_if).all()


def test_population_propagation_normalizes(small_sim):
    pop = PartialObsPopulation(small_sim, 0.5, 16)
    space = pop.obs_space
    joint, marg = propagate_population(pop, RandomFeasiblePolicy(),
                                       np.random.default_rng(9), slots=20,
                                       average_last=10, dim_joint=space.dim_joint,
                                       dim_if=space.dim_if)
    assert joint.shape == (space.dim_joint,)
    assert joint.sum() == pytest.approx(1.0)
    assert marg.sum() == pytest.approx(1.0)
    assert (joint >= 0).all() and (marg >= 0).all()
