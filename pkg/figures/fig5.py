"""Simultaneous storage and retrieval: exit envelopes and pump gate on a
shared time axis.

Input schema: storage_traces.csv with columns t_s, abs_in_z, abs_in_h,
re_out_z, im_out_z, re_out_h, im_out_h, pump_rabi.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

import numpy as np

import figlib

REQUIRED = ("t_s", "abs_in_z", "abs_in_h", "re_out_z", "im_out_z",
            "re_out_h", "im_out_h", "pump_rabi")


def render(input_csv, out_png):
    rows = figlib.load_table(input_csv, REQUIRED)
    t = rows["t_s"] * 1e6
    out_z = np.hypot(rows["re_out_z"], rows["im_out_z"])
    out_h = np.hypot(rows["re_out_h"], rows["im_out_h"])
    scale = max(rows["abs_in_z"].max(), rows["abs_in_h"].max())
    fig, ax = figlib.new_figure()
    ax.fill_between(t, rows["pump_rabi"] / rows["pump_rabi"].max(),
                    color=figlib.COLOR_PUMP, alpha=0.15, label="pump gate")
    ax.plot(t, rows["abs_in_h"] / scale, color=figlib.COLOR_H, linestyle="--",
            alpha=0.6, label="hyperfine in")
    ax.plot(t, out_h / scale, color=figlib.COLOR_H, label="hyperfine out")
    ax.plot(t, rows["abs_in_z"] / scale, color=figlib.COLOR_Z, linestyle="--",
            alpha=0.6, label="zeeman in")
    ax.plot(t, out_z / scale, color=figlib.COLOR_Z, label="zeeman out")
    ax.set_xlabel("time (us)")
    ax.set_ylabel("|Rabi envelope| (normalized)")
    ax.set_title("storage and retrieval of both pulses with one pump")
    ax.legend(loc="upper right", fontsize=8)
    return figlib.save_png(fig, out_png)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--input", required=True, help="storage_traces.csv")
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    print(render(args.input, args.out))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
