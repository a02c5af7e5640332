"""Weak-probe lineshapes, Doppler averaging, transmission, contrast, group delay.

The medium's response to a weak probe on one signal transition is reported as
a dimensionless complex lineshape

    s(delta) = (Gamma_e / 2) * rho_eg^(1) / (i Omega_probe / 2),

where ``rho_eg^(1)`` is the first-order probe-induced optical coherence.  The
normalization is fixed by the bare two-level case (other ground states
decoupled, no pump), where s(0) = 1 exactly; the strength of the medium then
enters transmission solely through the optical depth, T = exp(-od * Re s).

Two interchangeable evaluation methods are provided: a perturbative solve of
the first-order stationarity condition ``L0 rho1 = -L1 rho0`` on the traceless
subspace, and a finite-probe steady state at ``Omega = 1e-3 Gamma_e`` with a
linearity cross-check at half that amplitude.

Probing modes
-------------
By default the zeroth-order state is the steady state of the background
drives themselves (self-consistent linear response at the operating point; a
background field already sitting on the probe transition turns this into the
derivative response around that operating point).  Alternatively a *frozen*
initial state can be prescribed, either explicitly or as the steady state of
a separate preparation drive configuration: this models probing shortly after
a preparation field has been switched off, while the ground-state populations
it installed have not yet relaxed.  In frozen mode the response system may be
singular along slow population directions; the solve then excludes those
near-kernel directions, which carry no optical coherence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from . import _kernels
from .errors import DeitError, LinearityError, ParameterError
from .liouville import (
    DIM,
    DRIVE_GEN,
    DRIVE_GEN_CONJ,
    DETUNING_GEN,
    INDEX,
    SDIM,
    SIGNALS,
    build_hamiltonian,
    build_liouvillian,
    flat,
    steady_state,
)
from .params import DriveConfig, TripodParams, validate_drives, validate_params

SPEED_OF_LIGHT = 299_792_458.0  # m/s

#: default probe amplitude for the finite-probe method, in units of Gamma_e
FINITE_PROBE_SCALE = 1e-3
#: relative agreement demanded between full- and half-amplitude finite probes
LINEARITY_RTOL = 5e-3


@dataclass(frozen=True)
class BackgroundConfig:
    """Drives of all non-probe fields at full strength, plus medium constants.

    The probe's own perturbation amplitude is never part of the background;
    an ``omega`` entry on the probe's transition is allowed only as a
    same-frequency operating point (derivative probing).
    """

    drives: DriveConfig
    params: TripodParams

    def __post_init__(self):
        validate_drives(self.drives)
        validate_params(self.params)


@dataclass(frozen=True)
class LineshapeSpectrum:
    """Complex weak-probe lineshape on a uniform two-photon detuning grid."""

    probe: str
    delta: np.ndarray  # rad/s, strictly increasing, uniform
    s: np.ndarray      # complex, dimensionless
    doppler_averaged: bool

    def __post_init__(self):
        if self.probe not in SIGNALS:
            raise ParameterError(f"probe must be one of {SIGNALS}, got {self.probe!r}")
        delta = np.asarray(self.delta, dtype=float)
        if delta.ndim != 1 or delta.size < 2:
            raise ParameterError("detuning grid needs at least two points")
        steps = np.diff(delta)
        if not (steps > 0).all():
            raise ParameterError("detuning grid must be strictly increasing")
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise ParameterError("detuning grid must be uniformly spaced")
        if np.asarray(self.s).shape != delta.shape:
            raise ParameterError("lineshape and grid sizes differ")
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "s", np.asarray(self.s, dtype=complex))

    @property
    def step(self) -> float:
        return float(self.delta[1] - self.delta[0])


def _probe_generator(probe: str) -> np.ndarray:
    """Superoperator of a unit-Rabi real probe coupling on transition e-g."""
    return DRIVE_GEN[probe] + DRIVE_GEN_CONJ[probe]


def _response_from_states(params: TripodParams, l0: np.ndarray, rho0: np.ndarray,
                          probe: str, frozen: bool) -> np.ndarray:
    """First-order lineshape values from stacked systems and zeroth states."""
    src = -np.einsum("ij,...j->...i", _probe_generator(probe),
                     rho0.reshape(rho0.shape[:-2] + (SDIM,)))
    if frozen:
        x = _kernels.solve_traceless_lstsq(l0, src)
    else:
        x = _kernels.solve_traceless(l0, src)
    ge = params.gamma_e_total
    return -1j * ge * x[..., flat(0, INDEX[probe])]


def weak_probe_response(bg: BackgroundConfig, probe: str, delta: float,
                        velocity_detuning: float = 0.0, *,
                        method: str = "perturbative",
                        rho0: np.ndarray | None = None,
                        initial_drives: DriveConfig | None = None,
                        probe_scale: float = FINITE_PROBE_SCALE) -> complex:
    """Dimensionless lineshape of a weak probe at one two-photon detuning.

    ``delta`` is the probe's two-photon detuning with respect to the pump;
    the probe's one-photon detuning is ``delta + bg.drives.delta_p``, and
    ``velocity_detuning`` shifts every one-photon detuning identically.

    ``rho0`` (explicit state) or ``initial_drives`` (a preparation drive
    configuration whose steady state is taken at this velocity) select the
    frozen-state mode described in the module docstring; they are mutually
    exclusive and only the perturbative method supports them.
    """
    if probe not in SIGNALS:
        raise ParameterError(f"probe must be one of {SIGNALS}, got {probe!r}")
    if rho0 is not None and initial_drives is not None:
        raise ParameterError("pass at most one of rho0 / initial_drives")
    frozen = rho0 is not None or initial_drives is not None
    params = bg.params
    delta_probe = delta + bg.drives.delta_p

    bg_probe_omega = complex(bg.drives.omega(probe))
    if bg_probe_omega != 0.0:
        # derivative probing around an operating field on the same transition:
        # the probe must share that field's frequency
        if not math.isclose(delta_probe, bg.drives.delta(probe),
                            rel_tol=0.0, abs_tol=1e-6 * max(1.0, abs(delta_probe))):
            raise ParameterError(
                "background drives a field on the probe transition; the probe "
                "detuning must match it (derivative response)"
            )

    drives0 = bg.drives.with_field(probe, delta=delta_probe)
    if method == "perturbative":
        L0 = build_liouvillian(build_hamiltonian(drives0, velocity_detuning), params)
        if rho0 is None:
            source_drives = initial_drives if initial_drives is not None else drives0
            Ls = build_liouvillian(build_hamiltonian(source_drives, velocity_detuning),
                                   params)
            rho0 = _kernels.steady_states_batched(Ls)
        return complex(_response_from_states(params, L0, np.asarray(rho0, dtype=complex),
                                             probe, frozen))
    if method == "finite":
        if frozen:
            raise ParameterError("finite-probe method requires a self-consistent "
                                 "background steady state")
        return _finite_probe(bg, probe, drives0, velocity_detuning, probe_scale)
    raise ParameterError(f"unknown method {method!r}")


def _finite_probe(bg: BackgroundConfig, probe: str, drives0: DriveConfig,
                  velocity: float, probe_scale: float) -> complex:
    params = bg.params
    ge = params.gamma_e_total
    base = complex(drives0.omega(probe))
    eg = (0, INDEX[probe])

    def coherence(eps: float) -> complex:
        d = drives0.with_field(probe, omega=base + eps)
        L = build_liouvillian(build_hamiltonian(d, velocity), params)
        return steady_state(L)[eg]

    rho_ref = coherence(0.0) if base != 0.0 else 0.0
    eps = probe_scale * ge
    s_full = (ge / 2.0) * (coherence(eps) - rho_ref) / (1j * eps / 2.0)
    s_half = (ge / 2.0) * (coherence(0.5 * eps) - rho_ref) / (1j * 0.5 * eps / 2.0)
    denom = max(abs(s_full), abs(s_half), 1e-30)
    if abs(s_full - s_half) > LINEARITY_RTOL * denom:
        raise LinearityError(
            f"finite-probe responses at eps and eps/2 differ by "
            f"{abs(s_full - s_half) / denom:.2e} (rel); probe not in the linear regime"
        )
    return complex(s_full)


def doppler_average(f: Callable[[float], complex], fwhm_hz: float,
                    nodes: int = 64) -> complex:
    """Gauss-Hermite average of ``f(velocity_detuning)`` over the Gaussian
    one-photon detuning distribution of the given FWHM (ordinary Hz)."""
    if nodes < 8:
        raise ParameterError(f"need at least 8 quadrature nodes, got {nodes}")
    if fwhm_hz < 0.0:
        raise ParameterError("doppler width must be >= 0")
    if fwhm_hz == 0.0:
        return complex(f(0.0))
    velocities, weights = _kernels.doppler_grid(fwhm_hz, nodes)
    total = 0.0 + 0.0j
    for v, w in zip(velocities, weights):
        sample = complex(f(v))
        if not (math.isfinite(sample.real) and math.isfinite(sample.imag)):
            raise DeitError(f"non-finite sample {sample!r} at velocity node {v:.6e} rad/s")
        total += w * sample
    return total


def _velocity_rule(params: TripodParams, doppler: bool,
                   nodes: int) -> tuple[np.ndarray, np.ndarray]:
    if not doppler:
        return np.zeros(1), np.ones(1)
    return _kernels.doppler_grid(params.doppler_fwhm, nodes)


def _spectrum_probe_scan(bg: BackgroundConfig, probe: str, deltas: np.ndarray,
                         velocities: np.ndarray, weights: np.ndarray,
                         initial_drives: DriveConfig | None,
                         rho0: np.ndarray | None = None,
                         chunk: int = 32) -> np.ndarray:
    """Probe-frequency scan: background (hence rho0) fixed, probe slot detuning
    sweeps.  Batched over (delta chunk) x (velocity)."""
    params = bg.params
    frozen = initial_drives is not None or rho0 is not None
    drives0 = bg.drives.with_field(probe, delta=0.0)
    L_v = _kernels.liouvillians_at_velocities(drives0, params, velocities)
    if rho0 is not None:
        rho0_v = np.broadcast_to(np.asarray(rho0, dtype=complex),
                                 (velocities.size, DIM, DIM))
    else:
        source_drives = initial_drives if initial_drives is not None else bg.drives
        rho0_v = _kernels.steady_states_batched(
            _kernels.liouvillians_at_velocities(source_drives, params, velocities))
    k_slot = DETUNING_GEN[probe]
    delta_probe = np.asarray(deltas, dtype=float) + bg.drives.delta_p

    nv = velocities.size
    out = np.empty(delta_probe.size, dtype=complex)
    for lo in range(0, delta_probe.size, chunk):
        dp = delta_probe[lo:lo + chunk]
        A = L_v[None, :, :, :] + dp[:, None, None, None] * k_slot[None, None, :, :]
        A = A.reshape(-1, SDIM, SDIM)
        rho0 = np.broadcast_to(rho0_v, (dp.size,) + rho0_v.shape).reshape(-1, DIM, DIM)
        s = _response_from_states(params, A, rho0, probe, frozen)
        out[lo:lo + chunk] = s.reshape(dp.size, nv) @ weights
    return out


def _spectrum_pump_scan(bg: BackgroundConfig, probe: str, deltas: np.ndarray,
                        velocities: np.ndarray, weights: np.ndarray,
                        initial_drives: DriveConfig | None) -> np.ndarray:
    """Pump-frequency scan: the probe's one-photon detuning stays fixed while
    the pump detuning (and with it the background state) moves point by point."""
    params = bg.params
    frozen = initial_drives is not None
    delta_probe = bg.drives.delta(probe)
    out = np.empty(np.asarray(deltas).size, dtype=complex)
    for i, d in enumerate(np.asarray(deltas, dtype=float)):
        delta_p = delta_probe - d
        drives = bg.drives.with_field("p", delta=delta_p)
        L_v = _kernels.liouvillians_at_velocities(drives, params, velocities)
        if frozen:
            src = initial_drives.with_field("p", delta=delta_p)
            rho0_v = _kernels.steady_states_batched(
                _kernels.liouvillians_at_velocities(src, params, velocities),
                check_degenerate=(i == 0))
        else:
            rho0_v = _kernels.steady_states_batched(L_v, check_degenerate=(i == 0))
        s = _response_from_states(params, L_v, rho0_v, probe, frozen)
        out[i] = s @ weights
    return out


def lineshape_spectrum(bg: BackgroundConfig, probe: str, delta_grid: np.ndarray,
                       *, doppler: bool = False, nodes: int = 64,
                       scan: str = "probe",
                       initial_drives: DriveConfig | None = None,
                       rho0: np.ndarray | None = None) -> LineshapeSpectrum:
    """Weak-probe lineshape over a grid of two-photon detunings.

    ``scan="probe"`` sweeps the probe's own frequency (absorption-spectrum
    style); ``scan="pump"`` holds the probe fixed and sweeps the pump, which
    moves every field's two-photon detuning at once.  Velocity enters all
    one-photon detunings identically, so two-photon detunings are
    Doppler-free and the optional average only reshapes the one-photon
    envelope.  The lineshape itself carries no optical-depth dependence.
    """
    if probe not in SIGNALS:
        raise ParameterError(f"probe must be one of {SIGNALS}, got {probe!r}")
    deltas = np.asarray(delta_grid, dtype=float)
    velocities, weights = _velocity_rule(bg.params, doppler, nodes)
    if initial_drives is not None and rho0 is not None:
        raise ParameterError("pass at most one of rho0 / initial_drives")
    if scan == "probe":
        s = _spectrum_probe_scan(bg, probe, deltas, velocities, weights,
                                 initial_drives, rho0)
    elif scan == "pump":
        if rho0 is not None:
            raise ParameterError("explicit rho0 is only supported for probe scans")
        s = _spectrum_pump_scan(bg, probe, deltas, velocities, weights, initial_drives)
    else:
        raise ParameterError(f"unknown scan mode {scan!r}")
    if not np.isfinite(s).all():
        bad = int(np.flatnonzero(~np.isfinite(s))[0])
        raise DeitError(f"non-finite lineshape at delta = {deltas[bad]:.6e} rad/s")
    return LineshapeSpectrum(probe, deltas, s, doppler_averaged=doppler)


def transmission(spec: LineshapeSpectrum, od: float) -> np.ndarray:
    """Intensity transmission T(delta) = exp(-od * Re s(delta))."""
    if od < 0.0 or not math.isfinite(od):
        raise ParameterError(f"optical depth must be finite and >= 0, got {od!r}")
    return np.exp(-od * spec.s.real)


@dataclass(frozen=True)
class WindowReport:
    """Located transparency window: peak index/value and absorption floor."""

    contrast: float
    peak_index: int
    peak_transmission: float
    floor_transmission: float


#: a flanking sample counts as "at the floor" when its transmission sits
#: within this fraction of the peak-to-floor span above the floor
_FLOOR_FRACTION = 0.5


def find_window(T: np.ndarray) -> WindowReport | None:
    """Locate a transparency window inside an absorption feature.

    The floor is the minimum transmission on the grid; a window peak is an
    interior local maximum flanked on both sides by samples that return to
    floor level (within half the peak prominence).  Returns ``None`` when no
    such peak exists, which is the legitimate outcome for flat or windowless
    spectra.
    """
    T = np.asarray(T, dtype=float)
    if T.ndim != 1 or T.size < 3:
        raise ParameterError("transmission grid needs at least 3 points")
    floor = float(T.min())
    span = float(T.max()) - floor
    if span <= 0.0:
        return None
    best: WindowReport | None = None
    interior = np.flatnonzero(
        (T[1:-1] >= T[:-2]) & (T[1:-1] >= T[2:])
        & ((T[1:-1] > T[:-2]) | (T[1:-1] > T[2:]))
    ) + 1
    for i in interior:
        level = floor + _FLOOR_FRACTION * (T[i] - floor)
        if T[:i].min() <= level and T[i + 1:].min() <= level:
            if best is None or T[i] > best.peak_transmission:
                best = WindowReport(
                    contrast=float(T[i] - floor),
                    peak_index=int(i),
                    peak_transmission=float(T[i]),
                    floor_transmission=floor,
                )
    return best


def transparency_contrast(T: np.ndarray) -> float | None:
    """Window contrast C = T_peak - T_floor, or ``None`` when no window exists."""
    report = find_window(T)
    return None if report is None else report.contrast


def group_delay(spec: LineshapeSpectrum, od: float, delta0: float) -> float:
    """Group delay tau = (od/2) d(Im s)/d(delta) at ``delta0`` (seconds).

    Central difference at the grid spacing, Richardson-refined with the
    double-spacing estimate when the grid provides it.  Positive inside a
    transparency window (subluminal propagation).
    """
    if od < 0.0:
        raise ParameterError("optical depth must be >= 0")
    delta = spec.delta
    h = spec.step
    i = int(round((delta0 - delta[0]) / h))
    if i < 1 or i > delta.size - 2:
        raise ParameterError(f"delta0 = {delta0:.6e} rad/s is not interior to the grid")
    if abs(delta[i] - delta0) > 1e-6 * h + 1e-12 * abs(delta0):
        raise ParameterError("delta0 must coincide with a grid point")
    im = spec.s.imag
    d_h = (im[i + 1] - im[i - 1]) / (2.0 * h)
    if 2 <= i <= delta.size - 3:
        d_2h = (im[i + 2] - im[i - 2]) / (4.0 * h)
        d_h = (4.0 * d_h - d_2h) / 3.0
    return 0.5 * od * d_h


def group_velocity(tau: float, cell_length: float) -> float:
    """Group velocity through a cell of the given length: v = L / (L/c + tau)."""
    if cell_length <= 0.0:
        raise ParameterError("cell_length must be > 0")
    if tau < -cell_length / SPEED_OF_LIGHT:
        raise ParameterError("superluminal delays are out of scope")
    denom = cell_length / SPEED_OF_LIGHT + tau
    if denom <= 0.0:
        raise ParameterError("non-positive total transit time")
    return cell_length / denom


def delay_spectrum_grid(delta0: float, step: float, points: int = 7) -> np.ndarray:
    """Small uniform grid centred on delta0, suitable for group_delay."""
    if points < 5 or points % 2 == 0:
        raise ParameterError("need an odd number of points >= 5")
    half = points // 2
    return delta0 + step * np.arange(-half, half + 1)


def signal_group_delay(bg: BackgroundConfig, probe: str, od: float, *,
                       delta0: float = 0.0, step: float = 2.0 * math.pi * 1e3,
                       doppler: bool = False, nodes: int = 64,
                       initial_drives: DriveConfig | None = None,
                       rho0: np.ndarray | None = None) -> float:
    """Convenience: group delay of one signal from a dedicated microgrid."""
    grid = delay_spectrum_grid(delta0, step)
    spec = lineshape_spectrum(bg, probe, grid, doppler=doppler, nodes=nodes,
                              initial_drives=initial_drives, rho0=rho0)
    return group_delay(spec, od, delta0)


def export_spectrum_csv(spec: LineshapeSpectrum, od: float, path: str | Path,
                        echo: Mapping[str, object] | None = None) -> None:
    """Write a spectrum as CSV (delta_hz, re_s, im_s, transmission) with a
    comment header echoing the parameters it was computed from."""
    T = transmission(spec, od)
    lines = []
    if echo:
        for key in echo:
            lines.append(f"# {key} = {echo[key]}")
    lines.append(f"# probe = {spec.probe}")
    lines.append(f"# doppler_averaged = {spec.doppler_averaged}")
    lines.append(f"# optical_depth = {od!r}")
    lines.append("delta_hz,re_s,im_s,transmission")
    two_pi = 2.0 * math.pi
    for d, s, t in zip(spec.delta, spec.s, T):
        lines.append(f"{float(d) / two_pi!r},{float(s.real)!r},"
                     f"{float(s.imag)!r},{float(t)!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
