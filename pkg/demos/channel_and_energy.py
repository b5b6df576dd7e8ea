"""Tour of the physical layer: air-to-ground channel and UAV energy budget.

Run with ``python3 demos/channel_and_energy.py``.  No training involved --
this just evaluates the closed-form pieces so you can sanity-check the
numbers against your own calculations.
"""

import numpy as np

from uavmfg.channel import (ChannelParams, achievable_rate, compute_sinr,
                            elevation_deg, los_probability, mean_link_gain,
                            path_loss, sample_link)
from uavmfg.config import desk_scale_config
from uavmfg.energy import EnergyParams, harvest_energy, propulsion_power, total_energy

cfg = desk_scale_config()
chan = ChannelParams.from_config(cfg)
energy = EnergyParams.from_config(cfg)

print("=== line-of-sight probability vs. elevation ===")
for theta in (0.0, 10.0, 30.0, 60.0, 90.0):
    print(f"  theta = {theta:5.1f} deg  ->  P(LoS) = {los_probability(theta, chan):.4f}")

print("\n=== path loss at 100 m altitude ===")
d = cfg.altitude_m
theta = 90.0
print(f"  LoS : {path_loss(d, chan, True):.3e}")
print(f"  NLoS: {path_loss(d, chan, False):.3e}")
print(f"  LoS/NLoS mixture mean gain: {mean_link_gain(d, theta, chan):.3e}")

print("\n=== fading: empirical vs. analytic mean ===")
rng = np.random.default_rng(0)
gains, _ = sample_link(np.full(200000, d), np.full(200000, theta), chan, rng)
print(f"  empirical mean |h|^2 * A d^-alpha = {gains.mean():.4e}")
print(f"  closed-form mixture mean        = {mean_link_gain(d, theta, chan):.4e}")

print("\n=== a typical overhead link budget ===")
p = 0.05                      # 50 mW
gain = path_loss(d, chan, True)
snr = compute_sinr(gain, p, True, (), cfg.n0_w)
print(f"  SNR at 50 mW, no interference: {snr:.4e} ({10 * np.log10(snr):.1f} dB)")
rate = achievable_rate(2, snr, snr, cfg.eta_linear, cfg.bandwidth_hz,
                       cfg.tau1_s, cfg.tau2_s)
print(f"  fixed-rate payload for a full hover slot: {rate:.3e} bits")

print("\n=== rotor power ===")
print(f"  hover power: {energy.hover_power_w:.3f} W "
      f"(blade {energy.blade_profile_hover_w:.3f} + induced {energy.induced_hover_w:.4f})")
for v in (5.0, 20.0, 40.0, 60.0):
    print(f"  forward flight at {v:4.1f} m/s: {propulsion_power(v, energy):8.2f} W")

print("\n=== slot energy and solar harvest ===")
for mode, label in ((1, "fly 25 s then transmit 35 s"), (2, "hover and transmit 60 s")):
    e = total_energy(mode, 0.05, 20.0, energy, cfg.tau1_s, cfg.tau2_s)
    print(f"  mode {mode} ({label}): {e:9.1f} J")
for cloud in cfg.cloud_levels_m:
    h = harvest_energy(cloud, energy, cfg.tau1_s + cfg.tau2_s)
    print(f"  harvest through {cloud:5.0f} m of cloud: {h:9.1f} J per slot")
