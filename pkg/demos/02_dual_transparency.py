"""Double EIT: sweep the pump frequency and watch both windows appear.

Each CW signal sits at a fixed detuning (zeeman at 0, hyperfine at +1 MHz);
scanning the pump moves every two-photon detuning at once, so each signal's
transmission shows a transparency window at its own two-photon resonance.
"""

import numpy as np

from deit import (
    BackgroundConfig, DriveConfig, find_window, lineshape_spectrum,
    load_config, params_from_mapping, rabi_from_power, transmission,
)

TWO_PI = 2 * np.pi
params = params_from_mapping(load_config("configs/reference.json")["params"])
kappa = params.rabi_calibration_kappa
pump_omega = rabi_from_power(2.5e-3, kappa)
delta_h = TWO_PI * 1e6
pump_grid = np.linspace(-TWO_PI * 2e6, TWO_PI * 2e6, 201)

for probe, other, delta_probe in (("z", "h", 0.0), ("h", "z", delta_h)):
    drives = DriveConfig(omega_p=pump_omega, delta_h=delta_h).with_field(
        other, omega=rabi_from_power(50e-6, kappa))
    spec = lineshape_spectrum(BackgroundConfig(drives, params), probe,
                              delta_probe - pump_grid[::-1],
                              doppler=True, nodes=512, scan="pump")
    od = params.optical_depth_z if probe == "z" else params.optical_depth_h
    T = transmission(spec, od)[::-1]
    w = find_window(T)
    at_mhz = pump_grid[w.peak_index] / TWO_PI / 1e6
    print(f"{probe} signal: window at pump detuning {at_mhz:+.2f} MHz, "
          f"floor {w.floor_transmission:.2f} -> peak {w.peak_transmission:.2f}")
