"""Matching the two slow-light velocities with a preparation pulse.

A CW hyperfine preparation shuffles ground population from |h> to |z>,
slowing the zeeman signal and speeding up the hyperfine one; somewhere in
between the two group velocities cross.
"""

import numpy as np

from deit import load_config, params_from_mapping
from deit.propagation import match_group_velocities, signal_group_velocities

params = params_from_mapping(load_config("configs/reference.json")["params"])

print("prep power   v_g(zeeman)   v_g(hyperfine)")
for power in (0.0, 20e-6, 45e-6, 80e-6, 150e-6):
    g = signal_group_velocities(params, 2.5e-3, "h", power, doppler=True, nodes=128)
    print(f"{power*1e6:7.0f} uW   {g.vg_z/1e3:8.1f} km/s {g.vg_h/1e3:10.1f} km/s")

m = match_group_velocities(params, 2.5e-3, "h", (0.0, 150e-6),
                           power_tol=1e-6, nodes=128)
print(f"\nmatched at {m.power*1e6:.1f} uW: v_g = {m.vg_matched/1e3:.0f} km/s")
