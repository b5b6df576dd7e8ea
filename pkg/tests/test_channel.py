import math

import numpy as np
import pytest

from uavmfg.channel import (ChannelParams, achievable_rate, compute_sinr,
                            elevation_deg, elevation_from_horizontal,
                            los_probability, mean_link_gain, path_loss,
                            sample_fading_power, sample_link)
from uavmfg.config import ExperimentConfig


@pytest.fixture(scope="module")
def params():
    return ChannelParams.from_config(ExperimentConfig())


def test_elevation_geometry():
    assert elevation_deg([0.0, 0.0, 100.0], [0.0, 0.0]) == pytest.approx(90.0)
    assert elevation_from_horizontal(100.0, 100.0) == pytest.approx(45.0)
    assert elevation_from_horizontal(1000.0, 100.0) == pytest.approx(
        math.degrees(math.atan(0.1)))


def test_los_probability_sigmoid(params):
    # at theta = c1 the sigmoid argument is zero
    assert los_probability(10.0, params) == pytest.approx(1.0 / 11.0)
    assert los_probability(90.0, params) == pytest.approx(1.0, abs=1e-12)
    theta = np.linspace(0, 60, 50)
    pr = los_probability(theta, params)
    assert np.all(np.diff(pr) > 0)
    assert np.all((pr > 0) & (pr < 1))


def test_path_loss_overhead_values(params):
    # d=100 m, LoS: A_L * d^-alpha_L with alpha_L = 2.225 - 0.05*log10(100)
    expect_los = 10 ** -3.692 * 100.0 ** -(2.225 - 0.05 * 2.0)
    expect_nlos = 10 ** -3.842 * 100.0 ** -(4.32 - 0.76 * 2.0)
    assert path_loss(100.0, params, True) == pytest.approx(expect_los, rel=1e-12)
    assert path_loss(100.0, params, False) == pytest.approx(expect_nlos, rel=1e-12)
    assert expect_los > expect_nlos


def test_fading_power_mean_and_branches(params):
    rng = np.random.default_rng(7)
    los = sample_fading_power(np.ones(200000, dtype=bool), params, rng)
    nlos = sample_fading_power(np.zeros(200000, dtype=bool), params, rng)
    assert los.mean() == pytest.approx(params.omega, rel=0.02)
    assert nlos.mean() == pytest.approx(params.omega, rel=0.02)
    # Nakagami m=2 halves the power variance relative to Rayleigh
    assert los.var() == pytest.approx(0.5, rel=0.05)
    assert nlos.var() == pytest.approx(1.0, rel=0.05)


def test_link_sample_matches_closed_form_mixture(params):
    rng = np.random.default_rng(11)
    d, theta = 1005.0, 5.71
    gains, is_los = sample_link(np.full(200000, d), theta, params, rng)
    assert gains.mean() == pytest.approx(mean_link_gain(d, theta, params), rel=0.02)
    assert is_los.mean() == pytest.approx(los_probability(theta, params), abs=0.01)


def test_compute_sinr_no_interference(params):
    # 50 mW through the overhead LoS gain over N0 = -110 dBm
    gain = 10 ** -3.692 * 100.0 ** -2.125
    snr = compute_sinr(gain, 0.05, True, [], 1e-14)
    assert snr == pytest.approx(0.05 * gain / 1e-14, rel=1e-12)
    assert snr == pytest.approx(5.7145e4, rel=1e-3)


def test_compute_sinr_gating_and_interferers(params):
    gain = 1e-8
    assert compute_sinr(gain, 0.05, False, [], 1e-14) == 0.0
    triples = [(1e-12, 0.1, True), (1e-12, 0.2, False)]
    got = compute_sinr(gain, 0.05, True, triples, 1e-14)
    assert got == pytest.approx(0.05 * gain / (1e-13 + 1e-14))


def test_achievable_rate_fixed_rate_protocol():
    # eta = 0 dB, B = 1 MHz: 1e6 bits per transmitting second
    assert achievable_rate(1, 0.0, 2.0, 1.0, 1e6, 25.0, 35.0) == pytest.approx(3.5e7)
    assert achievable_rate(2, 2.0, 2.0, 1.0, 1e6, 25.0, 35.0) == pytest.approx(6.0e7)
    assert achievable_rate(2, 0.5, 2.0, 1.0, 1e6, 25.0, 35.0) == pytest.approx(3.5e7)
    assert achievable_rate(1, 2.0, 0.5, 1.0, 1e6, 25.0, 35.0) == 0.0
