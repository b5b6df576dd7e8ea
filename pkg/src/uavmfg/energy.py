"""Solar harvesting, rotary-wing propulsion, slot energy totals, battery queue."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class EnergyParams:
    # harvesting
    harvest_efficiency: float
    panel_area_m2: float
    solar_intensity_w_m2: float
    cloud_absorption_per_m: float
    cloud_levels_m: tuple
    # communication
    circuit_power_w: float
    power_levels_w: tuple
    # battery
    e_max_j: float
    e_min_j: float
    battery_levels: int
    # propulsion
    weight_n: float
    air_density: float
    rotor_radius_m: float
    rotor_area_m2: float
    rotor_solidity: float
    blade_omega_rad_s: float
    fuselage_drag_ratio: float
    profile_drag_coeff: float
    induced_power_factor: float

    @classmethod
    def from_config(cls, cfg):
        return cls(harvest_efficiency=cfg.harvest_efficiency,
                   panel_area_m2=cfg.panel_area_m2,
                   solar_intensity_w_m2=cfg.solar_intensity_w_m2,
                   cloud_absorption_per_m=cfg.cloud_absorption_per_m,
                   cloud_levels_m=cfg.cloud_levels_m,
                   circuit_power_w=cfg.circuit_power_w,
                   power_levels_w=cfg.power_levels_w,
                   e_max_j=cfg.e_max_j, e_min_j=cfg.e_min_j,
                   battery_levels=cfg.battery_levels,
                   weight_n=cfg.uav_weight_n, air_density=cfg.air_density_kg_m3,
                   rotor_radius_m=cfg.rotor_radius_m, rotor_area_m2=cfg.rotor_area_m2,
                   rotor_solidity=cfg.rotor_solidity,
                   blade_omega_rad_s=cfg.blade_angular_velocity_rad_s,
                   fuselage_drag_ratio=cfg.fuselage_drag_ratio,
                   profile_drag_coeff=cfg.profile_drag_coeff,
                   induced_power_factor=cfg.induced_power_factor)

    @property
    def blade_profile_hover_w(self):
        # (drag/8) * rho * solidity * area * zeta^3 * radius^3
        return (self.profile_drag_coeff / 8.0 * self.air_density * self.rotor_solidity
                * self.rotor_area_m2 * self.blade_omega_rad_s ** 3 * self.rotor_radius_m ** 3)

    @property
    def induced_hover_w(self):
        return ((1.0 + self.induced_power_factor) * self.weight_n ** 1.5
                / math.sqrt(2.0 * self.air_density * self.rotor_area_m2))

    @property
    def hover_power_w(self):
        return self.blade_profile_hover_w + self.induced_hover_w


def propulsion_power(v_mps, params: EnergyParams):
    """Forward-flight power: blade profile + induced + parasite terms.

    Continuous in v; equals the hover power exactly at v = 0.
    """
    v = np.asarray(v_mps, dtype=float)
    pf1 = params.blade_profile_hover_w
    pf2 = params.induced_hover_w
    zeta = params.blade_omega_rad_s
    tip = zeta * params.rotor_radius_m
    blade = pf1 * (1.0 + 3.0 * v ** 2 / tip ** 2)
    ra = params.air_density * params.rotor_area_m2
    induced = pf2 * np.sqrt(np.sqrt(1.0 + (ra * v ** 2 / params.weight_n) ** 2)
                            - ra * v ** 2 / params.weight_n)
    parasite = (0.5 * params.fuselage_drag_ratio * params.air_density
                * params.rotor_solidity * params.rotor_area_m2 * v ** 3)
    total = blade + induced + parasite
    return float(total) if np.isscalar(v_mps) else total


def harvest_energy(cloud_m, params: EnergyParams, tau_s):
    """Solar energy collected over tau seconds under a cloud of given thickness."""
    return (params.harvest_efficiency * params.panel_area_m2 * params.solar_intensity_w_m2
            * math.exp(-params.cloud_absorption_per_m * cloud_m) * tau_s)


def total_energy(mode, power_w, v_mps, params: EnergyParams, tau1_s, tau2_s):
    """Slot energy: flight (mode 1) or full-slot hover (mode 2) plus radio."""
    hover = params.hover_power_w
    radio = power_w + params.circuit_power_w
    if mode == 1:
        return propulsion_power(v_mps, params) * tau1_s + (hover + radio) * tau2_s
    return (hover + radio) * (tau1_s + tau2_s)


def step_battery(e, e_total, harvest, e_max):
    """Energy queue update: min([e - e_total]^+ + harvest, e_max)."""
    return min(max(e - e_total, 0.0) + harvest, e_max)


def quantize_battery(e, e_max, levels):
    """Uniform quantization of (0, e_max] into `levels` indices."""
    e = np.asarray(e, dtype=float)
    idx = np.minimum((e / e_max * levels).astype(int), levels - 1)
    return int(idx) if idx.ndim == 0 else idx


def slot_reward(ee, power_w, mode, e, e_total, sigma, xi, e_min, tau1_s, tau2_s):
    """Per-slot reward: EE minus radiated power-time penalty minus energy alarm."""
    phi = 1.0 if mode == 2 else 0.0
    return (ee - sigma * power_w * (phi * tau1_s + tau2_s)
            - xi * max(e_total + e_min - e, 0.0))
