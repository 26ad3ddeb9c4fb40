#!/usr/bin/env python3
"""Walk through the air-to-ground channel model: geometry, LoS probability,
mean path loss, and the resulting linear gain matrix."""

import numpy as np

from uavqubo import RadioParams, generate_scenario, gain_matrix, distance_matrix
from uavqubo.netmodel import los_probability, mean_pathloss_db

radio = RadioParams()  # dense-urban defaults: 2 GHz, a=9.6, b=0.16, 100 m up

print("LoS probability vs slant range (altitude 100 m):")
for d in (100, 150, 250, 500, 1000, 2000):
    rho = los_probability(float(d), radio.altitude_m, radio.env_a, radio.env_b)
    loss = mean_pathloss_db(float(d), radio)
    print(f"  d={d:5d} m  elevation={np.degrees(np.arcsin(100 / d)):5.1f} deg"
          f"  LoS prob={rho:6.4f}  mean loss={loss:6.1f} dB")

print("\nFull-scale scenario: 7 UAVs (ring of six plus center), 100 GUs")
scenario = generate_scenario(radio, num_uavs=7, num_gus=100, area_m=2500.0,
                             seed=42)
d = distance_matrix(scenario)
gains = gain_matrix(scenario)
print(f"  slant ranges: min={d.min():.0f} m  max={d.max():.0f} m")
print(f"  nearest-UAV range per GU: mean={d.min(axis=0).mean():.0f} m  "
      f"max={d.min(axis=0).max():.0f} m")
print(f"  linear gains: {gains.linear_gain.min():.2e} .. "
      f"{gains.linear_gain.max():.2e}")

p_max = radio.power_levels_w[-1]
snr = gains.linear_gain.max(axis=0) * p_max / radio.noise_w
print(f"  per-GU nearest-link SNR at 30 dBm: "
      f"{10 * np.log10(snr.min()):.1f} .. {10 * np.log10(snr.max()):.1f} dB")
