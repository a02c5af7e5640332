"""Shared plumbing for the figure scripts: CSV schemas, deterministic style.

The figure scripts consume only the simulator CLI's documented CSV outputs
(comment-headed, comma-separated, named columns).  Loading validates the
schema up front and fails loudly naming the missing column; an input with a
header but no rows is an explicit empty-dataset error.  Rendering is a pure
function of the input tables: a fixed style sheet, no timestamps, scrubbed
PNG metadata, so identical inputs give byte-identical images.
"""

from __future__ import annotations

import io
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


class SchemaError(ValueError):
    """An input table is missing a required column."""


class EmptyDatasetError(ValueError):
    """An input table has no data rows."""


def load_table(path: str | Path, required: Sequence[str]) -> np.ndarray:
    """Read a comment-headed CSV into a structured array, checking columns."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"input CSV not found: {path}")
    body = "".join(line for line in path.read_text(encoding="utf-8").splitlines(keepends=True)
                   if not line.startswith("#"))
    lines = [line for line in body.splitlines() if line.strip()]
    if not lines:
        raise EmptyDatasetError(f"{path}: no header row")
    header = [c.strip() for c in lines[0].split(",")]
    for column in required:
        if column not in header:
            raise SchemaError(f"{path}: missing required column {column!r} "
                              f"(found {header})")
    if len(lines) < 2:
        raise EmptyDatasetError(f"{path}: no data rows")
    data = np.genfromtxt(io.StringIO("\n".join(lines)), delimiter=",",
                         names=True, dtype=None, encoding="utf-8")
    return np.atleast_1d(data)


STYLE = {
    "figure.figsize": (6.4, 4.2),
    "figure.dpi": 120,
    "savefig.dpi": 120,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "svg.hashsalt": "deit-figures",
}

COLOR_Z = "#1f77b4"   # zeeman signal
COLOR_H = "#d62728"   # hyperfine signal
COLOR_PUMP = "#7f7f7f"


def new_figure():
    plt.rcParams.update(STYLE)
    return plt.subplots()


def save_png(fig, path: str | Path) -> Path:
    """Write a PNG with scrubbed metadata so reruns are byte-identical."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="png", metadata={"Software": None})
    plt.close(fig)
    return path
