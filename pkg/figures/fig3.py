"""Mutual contrast enhancement: one signal's spectra for several powers of
the other, plus the contrast trend.

Input schemas: contrast_spectra.csv (power_w, delta_hz, transmission) and
contrast_vs_power.csv (power_w, contrast, peak_transmission,
floor_transmission).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

import matplotlib.pyplot as plt
import numpy as np

import figlib

SPECTRA_REQUIRED = ("power_w", "delta_hz", "transmission")
SUMMARY_REQUIRED = ("power_w", "contrast")


def render(spectra_csv, summary_csv, out_png):
    spectra = figlib.load_table(spectra_csv, SPECTRA_REQUIRED)
    summary = figlib.load_table(summary_csv, SUMMARY_REQUIRED)
    plt.rcParams.update(figlib.STYLE)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.2, 4.0))
    powers = np.unique(spectra["power_w"])
    shades = np.linspace(0.8, 0.0, powers.size)
    for power, shade in zip(powers, shades):
        sel = spectra["power_w"] == power
        ax1.plot(spectra["delta_hz"][sel] / 1e6, spectra["transmission"][sel],
                 color=(shade, shade, 1.0), label=f"{power * 1e6:.0f} uW")
    ax1.set_xlabel("two-photon detuning (MHz)")
    ax1.set_ylabel("transmission")
    ax1.set_title("window vs background-signal power")
    ax1.legend(fontsize=7, title="background power")
    ax2.plot(summary["power_w"] * 1e6, summary["contrast"], "o-",
             color=figlib.COLOR_H)
    ax2.set_xlabel("background signal power (uW)")
    ax2.set_ylabel("window contrast")
    ax2.set_title("contrast grows with the other signal")
    fig.tight_layout()
    return figlib.save_png(fig, out_png)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--spectra", required=True, help="contrast_spectra.csv")
    parser.add_argument("--summary", required=True, help="contrast_vs_power.csv")
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    print(render(args.spectra, args.summary, args.out))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
