"""Recovering medium constants from a group-velocity curve.

Generates both signals' v_g(P) from known parameters, doubles four of them
as a deliberately wrong starting guess, and lets the bounded simplex walk
back to the truth.
"""

import numpy as np

from deit import load_config, params_from_mapping
from deit.fitting import Dataset, KIND_GROUP_VELOCITY, fit
from deit.propagation import signal_group_velocities

truth = params_from_mapping(load_config("configs/reference.json")["params"])

powers = np.linspace(2e-6, 150e-6, 10)
xs, ys, tags = [], [], []
for P in powers:
    g = signal_group_velocities(truth, 2.5e-3, "h", float(P), doppler=False)
    xs += [P, P]; ys += [g.vg_z, g.vg_h]; tags += ["z", "h"]
order = np.lexsort((xs, tags))
ds = Dataset(KIND_GROUP_VELOCITY, np.asarray(xs)[order], np.asarray(ys)[order],
             series=tuple(np.asarray(tags)[order]),
             meta={"pump_power": 2.5e-3, "prep_field": "h", "doppler": False})

free = ["gamma_hz", "exchange_G", "rabi_calibration_kappa", "optical_depth_h"]
bounds = {"gamma_hz": (2*np.pi*100, 2*np.pi*100e3),
          "exchange_G": (2*np.pi*2, 2*np.pi*2e3),
          "rabi_calibration_kappa": (1e8, 5e9),
          "optical_depth_h": (5.0, 200.0)}
start = {n: 2.0 * getattr(truth, n) for n in free}

result = fit(ds, truth, free, bounds, start)
print(f"converged: {result.converged}  objective: {result.objective:.3e}")
for name in free:
    t, f = getattr(truth, name), result.values[name]
    print(f"  {name:24s} truth {t:11.4g}   fit {f:11.4g}   rel err {abs(f-t)/t:.1e}")
