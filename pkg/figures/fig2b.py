"""Dual transparency windows: both signals' transmission vs pump detuning.

Input schema: spectrum_deit.csv with columns pump_detuning_hz,
transmission_z, transmission_h (the lineshape columns may be present and are
ignored here).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

import figlib

REQUIRED = ("pump_detuning_hz", "transmission_z", "transmission_h")


def render(input_csv, out_png):
    rows = figlib.load_table(input_csv, REQUIRED)
    fig, ax = figlib.new_figure()
    x = rows["pump_detuning_hz"] / 1e6
    ax.plot(x, rows["transmission_z"], color=figlib.COLOR_Z, label="zeeman signal")
    ax.plot(x, rows["transmission_h"], color=figlib.COLOR_H, label="hyperfine signal")
    ax.set_xlabel("pump detuning (MHz)")
    ax.set_ylabel("transmission")
    ax.set_ylim(0.0, 1.05)
    ax.set_title("simultaneous transparency windows under a pump sweep")
    ax.legend(loc="lower right")
    return figlib.save_png(fig, out_png)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--input", required=True, help="spectrum_deit.csv")
    parser.add_argument("--out", required=True, help="output PNG path")
    args = parser.parse_args(argv)
    print(render(args.input, args.out))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
