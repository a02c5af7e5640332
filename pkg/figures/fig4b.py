"""Pulse waveforms at the cell entrance and exit for both signals.

Input schema: detector_traces.csv with columns t_s and the re/im pairs of
the input and exit envelopes of both signals (pump_rabi optional).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

import numpy as np

import figlib

REQUIRED = ("t_s", "re_in_z", "im_in_z", "re_in_h", "im_in_h",
            "re_out_z", "im_out_z", "re_out_h", "im_out_h")


def render(input_csv, out_png):
    rows = figlib.load_table(input_csv, REQUIRED)
    t = rows["t_s"] * 1e6
    def mag(stem):
        return np.hypot(rows[f"re_{stem}"], rows[f"im_{stem}"])
    scale = max(mag("in_z").max(), mag("in_h").max())
    fig, ax = figlib.new_figure()
    ax.plot(t, mag("in_z") / scale, color=figlib.COLOR_Z, linestyle="--",
            alpha=0.6, label="zeeman in")
    ax.plot(t, mag("out_z") / scale, color=figlib.COLOR_Z, label="zeeman out")
    ax.plot(t, mag("in_h") / scale, color=figlib.COLOR_H, linestyle="--",
            alpha=0.6, label="hyperfine in")
    ax.plot(t, mag("out_h") / scale, color=figlib.COLOR_H, label="hyperfine out")
    ax.set_xlabel("time (us)")
    ax.set_ylabel("|Rabi envelope| (normalized)")
    ax.set_title("co-propagating signal pulses through the prepared cell")
    ax.legend(loc="upper right", fontsize=8)
    return figlib.save_png(fig, out_png)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--input", required=True, help="detector_traces.csv")
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    print(render(args.input, args.out))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
