"""Steady states of the driven tripod: optical pumping at a glance.

Solves the stationary density matrix under a pump alone, then with each
signal added, and prints the ground-state populations.  The pump empties
|p>; the slow h<->z exchange equilibrates the two signal grounds; turning a
signal on funnels population into the ground state nobody is driving.
"""

import numpy as np

from deit import (
    BackgroundConfig, DriveConfig, build_hamiltonian, build_liouvillian,
    load_config, params_from_mapping, rabi_from_power, steady_state,
)

params = params_from_mapping(load_config("configs/reference.json")["params"])
kappa = params.rabi_calibration_kappa
pump = DriveConfig(omega_p=rabi_from_power(2.5e-3, kappa))

cases = {
    "pump only": pump,
    "pump + zeeman 50uW": pump.with_field("z", omega=rabi_from_power(50e-6, kappa)),
    "pump + hyperfine 50uW": pump.with_field("h", omega=rabi_from_power(50e-6, kappa)),
}

print(f"{'configuration':24s}  {'n_e':>7s} {'n_z':>7s} {'n_h':>7s} {'n_p':>7s}")
for label, drives in cases.items():
    rho = steady_state(build_liouvillian(build_hamiltonian(drives), params))
    pops = np.diag(rho).real
    print(f"{label:24s}  " + " ".join(f"{x:7.4f}" for x in pops))
