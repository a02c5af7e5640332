"""Group velocities of both signals versus preparation power, with the
crossing annotated.

Input schema: groupvel_vs_power.csv with columns power_w, vg_z_mps,
vg_h_mps.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

import numpy as np

import figlib

REQUIRED = ("power_w", "vg_z_mps", "vg_h_mps")


def crossing_point(power, vg_z, vg_h):
    """Linear-interpolated sign change of vg_z - vg_h, or None."""
    diff = vg_z - vg_h
    sign_flip = np.flatnonzero(np.sign(diff[:-1]) * np.sign(diff[1:]) < 0)
    if sign_flip.size == 0:
        return None
    i = int(sign_flip[0])
    frac = diff[i] / (diff[i] - diff[i + 1])
    p_star = power[i] + frac * (power[i + 1] - power[i])
    v_star = vg_z[i] + frac * (vg_z[i + 1] - vg_z[i])
    return p_star, v_star


def render(input_csv, out_png):
    rows = figlib.load_table(input_csv, REQUIRED)
    order = np.argsort(rows["power_w"])
    power = rows["power_w"][order]
    vg_z = rows["vg_z_mps"][order]
    vg_h = rows["vg_h_mps"][order]
    fig, ax = figlib.new_figure()
    ax.plot(power * 1e6, vg_z / 1e3, "o-", color=figlib.COLOR_Z, label="zeeman")
    ax.plot(power * 1e6, vg_h / 1e3, "s-", color=figlib.COLOR_H, label="hyperfine")
    cross = crossing_point(power, vg_z, vg_h)
    if cross is not None:
        p_star, v_star = cross
        ax.plot([p_star * 1e6], [v_star / 1e3], "k*", markersize=14,
                label=f"matched: {v_star / 1e3:.0f} km/s @ {p_star * 1e6:.0f} uW")
        ax.axvline(p_star * 1e6, color="k", alpha=0.25, linewidth=0.8)
    ax.set_xlabel("preparation power (uW)")
    ax.set_ylabel("group velocity (km/s)")
    ax.set_title("group velocities vs preparation power")
    ax.legend()
    return figlib.save_png(fig, out_png)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--input", required=True, help="groupvel_vs_power.csv")
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    print(render(args.input, args.out))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
