"""Least-squares estimation of medium parameters from tabulated observables.

The forward models are the package's own spectral paths: group velocity
versus preparation power (both signals, sharing one preparation field) and
weak-probe transmission spectra.  The optimizer is a bounded Nelder-Mead
simplex: the objective surface sits on top of steady-state solves, quadrature
and finite differences, whose numerical gradients are too noisy for
derivative-based methods at the accuracy that matters here, and with at most
eight free parameters a simplex is entirely adequate.

Rate-like quantities span five decades (Hz-scale exchange to MHz-scale
decay), so any parameter with a strictly positive lower bound is searched in
log space; box bounds are enforced by reflecting trial points back into the
box.  Fits are deterministic: same dataset, same settings, same result, and
permuting dataset rows changes nothing (the objective is accumulated in a
canonical row order).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields as dc_fields
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, ParameterError
from .params import (
    DriveConfig,
    TripodParams,
    parse_quantity,
    rabi_from_power,
    validate_params,
)
from .propagation import signal_group_velocities
from .response import BackgroundConfig, lineshape_spectrum, transmission

KIND_GROUP_VELOCITY = "group-velocity-vs-preparation-power"
KIND_TRANSMISSION = "transmission-spectrum"
_KINDS = (KIND_GROUP_VELOCITY, KIND_TRANSMISSION)

_FITTABLE = {f.name for f in dc_fields(TripodParams)}


@dataclass(frozen=True)
class Dataset:
    """Rows of (independent variable, measured value, optional uncertainty).

    ``series`` tags each row with the signal it belongs to ("z"/"h") for
    observables recorded per signal; the strict-monotonicity requirement on
    the independent variable then applies within each series.  ``meta``
    carries the forward-model context (pump power, preparation field,
    quadrature settings, probe id) and is echoed through CSV headers.
    """

    kind: str
    x: np.ndarray
    y: np.ndarray
    sigma: np.ndarray | None = None
    series: tuple[str, ...] | None = None
    meta: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ParameterError(f"unknown observable kind {self.kind!r}")
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape:
            raise ParameterError("x and y must be matching 1-d arrays")
        if x.size < 4:
            raise ParameterError(f"need at least 4 rows, got {x.size}")
        series = self.series
        if series is not None:
            series = tuple(series)
            if len(series) != x.size:
                raise ParameterError("series tags must match the number of rows")
        for tag in set(series) if series else {None}:
            sel = x if tag is None else x[np.array([s == tag for s in series])]
            if not (np.diff(sel) > 0).all():
                raise ParameterError(
                    "independent variable must be strictly increasing"
                    + (f" within series {tag!r}" if tag else "")
                )
        sigma = self.sigma
        if sigma is not None:
            sigma = np.asarray(sigma, dtype=float)
            if sigma.shape != x.shape or not (sigma > 0).all():
                raise ParameterError("uncertainties must be positive, one per row")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "series", series)
        object.__setattr__(self, "meta", dict(self.meta))

    @property
    def size(self) -> int:
        return self.x.size


def _canonical_order(ds: Dataset) -> np.ndarray:
    tags = ds.series if ds.series is not None else ("",) * ds.size
    return np.lexsort((ds.x, np.array(tags)))


def _forward_group_velocity(p: TripodParams, ds: Dataset) -> np.ndarray:
    meta = ds.meta
    pump_power = float(meta.get("pump_power", 2.5e-3))
    prep_field = meta.get("prep_field", "h")
    doppler = bool(meta.get("doppler", False))
    nodes = int(meta.get("nodes", 128))
    series = ds.series if ds.series is not None else ("h",) * ds.size
    out = np.empty(ds.size)
    for power in np.unique(ds.x):
        g = signal_group_velocities(p, pump_power, prep_field, float(power),
                                    doppler=doppler, nodes=nodes)
        rows = ds.x == power
        for i in np.flatnonzero(rows):
            out[i] = g.vg_z if series[i] == "z" else g.vg_h
    return out


def _forward_transmission(p: TripodParams, ds: Dataset) -> np.ndarray:
    meta = ds.meta
    probe = meta.get("probe", "h")
    pump_power = float(meta.get("pump_power", 2.5e-3))
    other_power = float(meta.get("other_power", 0.0))
    doppler = bool(meta.get("doppler", False))
    nodes = int(meta.get("nodes", 128))
    kappa = p.rabi_calibration_kappa
    drives = DriveConfig(omega_p=rabi_from_power(pump_power, kappa))
    other = "z" if probe == "h" else "h"
    if other_power > 0.0:
        drives = drives.with_field(other, omega=rabi_from_power(other_power, kappa))
    # dataset abscissa is ordinary frequency; model works in rad/s; the grid
    # must be uniform, which holds for the generated/ingested datasets
    grid = 2.0 * math.pi * ds.x
    spec = lineshape_spectrum(BackgroundConfig(drives, p), probe, grid,
                              doppler=doppler, nodes=nodes)
    od = p.optical_depth_z if probe == "z" else p.optical_depth_h
    return transmission(spec, od)


_FORWARD: dict[str, Callable[[TripodParams, Dataset], np.ndarray]] = {
    KIND_GROUP_VELOCITY: _forward_group_velocity,
    KIND_TRANSMISSION: _forward_transmission,
}


def residuals(p: TripodParams, ds: Dataset) -> np.ndarray:
    """Per-point residuals model(x_i) - y_i, weighted by 1/sigma_i when given."""
    try:
        model = _FORWARD[ds.kind](p, ds)
    except Exception as exc:
        raise ParameterError(f"forward model failed on {ds.kind}: {exc}") from exc
    bad = ~np.isfinite(model)
    if bad.any():
        raise ParameterError(
            f"forward model not finite at x = {ds.x[bad][0]!r}")
    r = model - ds.y
    if ds.sigma is not None:
        r = r / ds.sigma
    return r


def objective(p: TripodParams, ds: Dataset) -> float:
    """Sum of squared (weighted) residuals, accumulated in canonical row order."""
    r = residuals(p, ds)
    order = _canonical_order(ds)
    return float(np.sum(r[order] ** 2))


# ---------------------------------------------------------------------------
# Bounded Nelder-Mead
# ---------------------------------------------------------------------------

#: relative simplex diameter below which the search stops
SIMPLEX_TOL = 1e-6
#: relative objective spread below which the search stops
OBJECTIVE_TOL = 1e-10


def _reflect_into(u: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Fold a point back into the box by reflection at the walls."""
    span = hi - lo
    out = np.mod(u - lo, 2.0 * span)
    out = np.where(out > span, 2.0 * span - out, out)
    return lo + out


@dataclass(frozen=True)
class NelderMeadResult:
    x: np.ndarray
    fun: float
    iterations: int
    evaluations: int
    converged: bool


def nelder_mead(f: Callable[[np.ndarray], float], x0: np.ndarray,
                lower: np.ndarray, upper: np.ndarray, *,
                max_iter: int = 2000,
                initial_step: float = 0.05) -> NelderMeadResult:
    """Simplex minimization with box bounds enforced by wall reflection.

    Converged when the simplex diameter is below ``SIMPLEX_TOL`` (relative)
    and the objective spread below ``OBJECTIVE_TOL`` (relative); hitting the
    iteration cap returns the best vertex flagged non-converged.  The best
    point ever evaluated is returned, so the result never ranks worse than
    the starting point.
    """
    x0 = np.asarray(x0, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    n = x0.size
    if np.any(x0 < lower) or np.any(x0 > upper):
        raise ParameterError("initial guess lies outside the bounds")
    evals = 0

    def feval(u: np.ndarray) -> float:
        nonlocal evals
        evals += 1
        return float(f(_reflect_into(u, lower, upper)))

    simplex = [x0.copy()]
    for i in range(n):
        step = initial_step * (upper[i] - lower[i])
        vertex = x0.copy()
        vertex[i] = min(vertex[i] + step, upper[i]) if vertex[i] + step <= upper[i] \
            else max(vertex[i] - step, lower[i])
        simplex.append(vertex)
    fvals = [feval(v) for v in simplex]
    best_x = simplex[int(np.argmin(fvals))].copy()
    best_f = min(fvals)

    iterations = 0
    converged = False
    while iterations < max_iter:
        order = np.argsort(fvals, kind="stable")
        simplex = [simplex[i] for i in order]
        fvals = [fvals[i] for i in order]
        if fvals[0] < best_f:
            best_f = fvals[0]
            best_x = simplex[0].copy()
        diam = max(np.abs(v - simplex[0]).max() for v in simplex[1:])
        scale = 1.0 + np.abs(simplex[0]).max()
        spread = fvals[-1] - fvals[0]
        if diam < SIMPLEX_TOL * scale and spread < OBJECTIVE_TOL * max(1.0, abs(fvals[0])):
            converged = True
            break
        iterations += 1
        centroid = np.mean(simplex[:-1], axis=0)
        xr = centroid + (centroid - simplex[-1])
        fr = feval(xr)
        if fr < fvals[0]:
            xe = centroid + 2.0 * (centroid - simplex[-1])
            fe = feval(xe)
            if fe < fr:
                simplex[-1], fvals[-1] = xe, fe
            else:
                simplex[-1], fvals[-1] = xr, fr
        elif fr < fvals[-2]:
            simplex[-1], fvals[-1] = xr, fr
        else:
            xc = centroid + 0.5 * (simplex[-1] - centroid)
            fc = feval(xc)
            if fc < fvals[-1]:
                simplex[-1], fvals[-1] = xc, fc
            else:
                for i in range(1, n + 1):
                    simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0])
                    fvals[i] = feval(simplex[i])
    i_best = int(np.argmin(fvals))
    if fvals[i_best] < best_f:
        best_f = fvals[i_best]
        best_x = simplex[i_best].copy()
    return NelderMeadResult(_reflect_into(best_x, lower, upper), best_f,
                            iterations, evals, converged)


# ---------------------------------------------------------------------------
# Parameter-space fit driver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FitResult:
    """Best-fit values plus the evidence needed to reproduce the objective."""

    values: dict[str, float]
    objective: float
    residuals: np.ndarray
    iterations: int
    evaluations: int
    converged: bool
    params: TripodParams


def fit(ds: Dataset, base: TripodParams, free: Sequence[str],
        bounds: Mapping[str, tuple[float, float]],
        initial: Mapping[str, float], *,
        max_iter: int = 2000) -> FitResult:
    """Fit the named parameters of ``base`` to the dataset.

    ``free`` lists TripodParams field names (at most 8); each needs a bounds
    pair containing its initial guess.  Parameters with positive lower
    bounds are optimized in log space.
    """
    free = list(free)
    if not 1 <= len(free) <= 8:
        raise ParameterError("between 1 and 8 free parameters supported")
    for name in free:
        if name not in _FITTABLE:
            raise ParameterError(f"unknown parameter {name!r}")
        if name not in bounds:
            raise ParameterError(f"missing bounds for {name!r}")
        if name not in initial:
            raise ParameterError(f"missing initial guess for {name!r}")

    log_mask = np.array([bounds[name][0] > 0.0 for name in free])

    def to_internal(values: np.ndarray) -> np.ndarray:
        return np.where(log_mask, np.log(np.abs(values)), values)

    def from_internal(u: np.ndarray) -> np.ndarray:
        return np.where(log_mask, np.exp(u), u)

    lo = to_internal(np.array([bounds[n][0] for n in free], dtype=float))
    hi = to_internal(np.array([bounds[n][1] for n in free], dtype=float))
    x0 = to_internal(np.array([initial[n] for n in free], dtype=float))
    if np.any(x0 < lo - 1e-12) or np.any(x0 > hi + 1e-12):
        raise ParameterError("initial guess lies outside the bounds")
    x0 = np.clip(x0, lo, hi)

    def apply(u: np.ndarray) -> TripodParams:
        vals = from_internal(u)
        return validate_params(base.with_updates(**dict(zip(free, vals))))

    def cost(u: np.ndarray) -> float:
        return objective(apply(u), ds)

    res = nelder_mead(cost, x0, lo, hi, max_iter=max_iter)
    p_best = apply(res.x)
    r = residuals(p_best, ds)
    return FitResult(
        values=dict(zip(free, from_internal(res.x))),
        objective=res.fun,
        residuals=r,
        iterations=res.iterations,
        evaluations=res.evaluations,
        converged=res.converged,
        params=p_best,
    )


# ---------------------------------------------------------------------------
# CSV interchange
# ---------------------------------------------------------------------------

_META_PARSERS = {
    "pump_power": lambda v: parse_quantity(v, "any"),
    "other_power": lambda v: parse_quantity(v, "any"),
    "prep_field": str,
    "probe": str,
    "doppler": lambda v: str(v).lower() in ("1", "true", "yes"),
    "nodes": int,
}


def save_dataset(ds: Dataset, path: str | Path) -> None:
    lines = [f"# kind = {ds.kind}"]
    for key, value in ds.meta.items():
        lines.append(f"# {key} = {value}")
    has_series = ds.series is not None
    has_sigma = ds.sigma is not None
    columns = ["x", "y"]
    if ds.kind == KIND_GROUP_VELOCITY:
        columns = ["power_w", "vg_mps"]
    elif ds.kind == KIND_TRANSMISSION:
        columns = ["delta_hz", "transmission"]
    header = columns[0] + (",series" if has_series else "") + f",{columns[1]}"
    if has_sigma:
        header += ",sigma"
    lines.append(header)
    for i in range(ds.size):
        row = [repr(float(ds.x[i]))]
        if has_series:
            row.append(ds.series[i])
        row.append(repr(float(ds.y[i])))
        if has_sigma:
            row.append(repr(float(ds.sigma[i])))
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_dataset(path: str | Path) -> Dataset:
    """Read a dataset CSV: '#'-comment header naming the observable kind and
    forward-model context, then columns (x[, series], y[, sigma])."""
    kind = None
    meta: dict[str, object] = {}
    header: list[str] | None = None
    rows: list[list[str]] = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if "=" in body:
                key, _, value = body.partition("=")
                key, value = key.strip(), value.strip()
                if key == "kind":
                    kind = value
                elif key in _META_PARSERS:
                    meta[key] = _META_PARSERS[key](value)
                else:
                    meta[key] = value
            continue
        if header is None:
            header = [c.strip() for c in line.split(",")]
            continue
        rows.append([c.strip() for c in line.split(",")])
    if kind is None:
        raise ConfigError(f"{path}: missing '# kind = ...' header")
    if header is None or not rows:
        raise ConfigError(f"{path}: no data rows")
    cols = {name: i for i, name in enumerate(header)}
    x_col = 0
    series = None
    if "series" in cols:
        series = tuple(r[cols["series"]] for r in rows)
    y_col = cols.get("vg_mps", cols.get("transmission", cols.get("y", 1)))
    x = np.array([float(r[x_col]) for r in rows])
    y = np.array([float(r[y_col]) for r in rows])
    sigma = None
    if "sigma" in cols:
        sigma = np.array([float(r[cols["sigma"]]) for r in rows])
    return Dataset(kind=kind, x=x, y=y, sigma=sigma, series=series, meta=meta)


def write_fit_result(result: FitResult, directory: str | Path,
                     stem: str = "fit") -> tuple[Path, Path]:
    """Emit a fit as key-value text plus a residuals CSV; returns both paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    report = directory / f"{stem}_result.txt"
    lines = [
        f"objective = {result.objective!r}",
        f"iterations = {result.iterations}",
        f"evaluations = {result.evaluations}",
        f"converged = {result.converged}",
    ]
    for name, value in result.values.items():
        lines.append(f"{name} = {value!r}")
    report.write_text("\n".join(lines) + "\n", encoding="utf-8")
    res_csv = directory / f"{stem}_residuals.csv"
    body = ["index,residual"]
    for i, r in enumerate(result.residuals):
        body.append(f"{i},{float(r)!r}")
    res_csv.write_text("\n".join(body) + "\n", encoding="utf-8")
    return report, res_csv
