"""Air-to-ground channel: LoS probability, path loss, Nakagami fading, SINR, rate.

All functions are vectorized over numpy arrays.  Elevation angles are in
degrees throughout (the LoS sigmoid parameter c1=10 is calibrated in degrees).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class ChannelParams:
    c1: float
    c2: float
    a_los: float
    a_nlos: float
    alpha_los: float
    alpha_nlos: float
    m: float          # Nakagami shape on LoS links; NLoS is Rayleigh (m=1)
    omega: float

    @classmethod
    def from_config(cls, cfg):
        return cls(c1=cfg.los_c1, c2=cfg.los_c2, a_los=cfg.a_los, a_nlos=cfg.a_nlos,
                   alpha_los=cfg.alpha_los, alpha_nlos=cfg.alpha_nlos,
                   m=cfg.nakagami_m, omega=cfg.omega_spread)


def elevation_deg(uav_xyz, gu_xy):
    """Elevation angle from a ground user to a UAV; 90 deg when overhead."""
    uav_xyz = np.asarray(uav_xyz, dtype=float)
    gu_xy = np.asarray(gu_xy, dtype=float)
    horiz = np.hypot(uav_xyz[..., 0] - gu_xy[..., 0], uav_xyz[..., 1] - gu_xy[..., 1])
    return elevation_from_horizontal(horiz, uav_xyz[..., 2])


def elevation_from_horizontal(horizontal_m, altitude_m):
    return np.degrees(np.arctan2(altitude_m, horizontal_m))


def los_probability(theta_deg, params: ChannelParams):
    return 1.0 / (1.0 + params.c1 * np.exp(-params.c2 * (np.asarray(theta_deg, dtype=float) - params.c1)))


def path_loss(distance_m, params: ChannelParams, los):
    """Large-scale gain A * D^-alpha on the LoS or NLoS branch."""
    d = np.asarray(distance_m, dtype=float)
    los = np.asarray(los, dtype=bool)
    return np.where(los, params.a_los * d ** -params.alpha_los,
                    params.a_nlos * d ** -params.alpha_nlos)


def sample_fading_power(is_los, params: ChannelParams, rng):
    """Small-scale power gain g^2.

    Nakagami-m amplitude => Gamma(shape m, scale omega/m) power.  NLoS links
    use m=1 (Rayleigh).  E[g^2] = omega on both branches.
    """
    is_los = np.asarray(is_los, dtype=bool)
    shape = np.where(is_los, params.m, 1.0)
    return rng.gamma(shape, params.omega / shape)


def sample_link(distance_m, theta_deg, params: ChannelParams, rng):
    """Draw one slot's channel power gain |h|^2 = l * g^2 for each link.

    Returns (gain, is_los) arrays broadcast to the common input shape.
    """
    d = np.asarray(distance_m, dtype=float)
    theta = np.broadcast_to(np.asarray(theta_deg, dtype=float), d.shape)
    is_los = rng.random(d.shape) < los_probability(theta, params)
    gain = path_loss(d, params, is_los) * sample_fading_power(is_los, params, rng)
    return gain, is_los


def mean_link_gain(distance_m, theta_deg, params: ChannelParams):
    """Closed-form E[|h|^2]: LoS/NLoS mixture of path losses times E[g^2]=omega."""
    pr = los_probability(theta_deg, params)
    d = np.asarray(distance_m, dtype=float)
    return params.omega * (pr * params.a_los * d ** -params.alpha_los
                           + (1.0 - pr) * params.a_nlos * d ** -params.alpha_nlos)


def compute_sinr(rep_link_gain, own_power, own_active, interferers, n0):
    """SINR at the served ground user for one phase.

    ``own_active`` carries the demand/association/mode gating of the numerator.
    ``interferers`` is an iterable of (gain, power, transmitting) triples; only
    entries with transmitting=True contribute (the caller selects the
    phase-appropriate set: mode-2 UAVs only during the flight phase, all
    transmitting UAVs during the hover phase).
    """
    if not own_active:
        return 0.0
    interference = 0.0
    for gain, power, transmitting in interferers:
        if transmitting:
            interference += gain * power
    return rep_link_gain * own_power / (interference + n0)


def sinr_from_arrays(own_gain, own_power, own_active, int_gains, int_powers, int_on, n0):
    """Vectorized interference sum used by the simulators."""
    if not own_active:
        return 0.0
    interference = float(np.sum(int_gains * int_powers * int_on))
    return own_gain * own_power / (interference + n0)


def achievable_rate(mode, sinr1, sinr2, eta_linear, bandwidth_hz, tau1_s, tau2_s):
    """Fixed-rate transmission: bits delivered in a slot.

    Decoding succeeds per phase iff the realized SINR clears the threshold;
    the rate itself is pinned to the threshold, B*log2(1+eta).
    """
    per_second = bandwidth_hz * math.log2(1.0 + eta_linear)
    hover_part = (tau2_s if sinr2 >= eta_linear else 0.0) * per_second
    if mode == 1:
        return hover_part
    flight_part = (tau1_s if sinr1 >= eta_linear else 0.0) * per_second
    return hover_part + flight_part
