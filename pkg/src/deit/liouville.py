"""Tripod Hamiltonian, dissipative superoperator, steady states, time evolution.

Basis and conventions
---------------------
The four levels are ordered ``(e, z, h, p)``: one excited state, then the
ground states addressed by the Zeeman signal, the hyperfine signal, and the
pump.  Density matrices are 4x4 complex arrays over this basis; flattening is
row-major, so superoperators are 16x16 arrays acting on ``rho.reshape(16)``.

In the rotating frame the excited state sits at zero energy and each ground
state g carries energy ``-(delta_g - v)``, where ``delta_g`` is that field's
one-photon detuning and ``v`` is the common velocity-induced detuning shift
(all three beams co-propagate, so one shift applies to all fields and
two-photon detunings are Doppler-free).  Couplings are ``<e|H|g> = -Omega_g/2``.

Dissipation consists of
 * spontaneous decay branches ``D[|g><e|]`` at rates Gamma_g,
 * population exchange between |h> and |z> as two jump operators
   ``sqrt(G)|z><h|`` and ``sqrt(G)|h><z|`` (this also damps the z-h coherence
   by G on top of the pure dephasing gamma_hz),
 * direct damping ``-gamma_ij rho_ij`` of each ground-pair coherence (the
   mirror element too), plus an optional extra damping of the optical
   coherences.  The direct form is deliberate: the dephasing rates are
   calibrated as decay rates of the named matrix elements, not as Lindblad
   projector rates (which would differ by a factor-of-2 convention).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateSteadyStateError,
    IntegrationDivergedError,
    ParameterError,
    StepSizeError,
)
from .params import DriveConfig, TripodParams, validate_drives

LEVELS = ("e", "z", "h", "p")
INDEX = {name: i for i, name in enumerate(LEVELS)}
FIELDS = ("z", "h", "p")
SIGNALS = ("z", "h")
DIM = 4
SDIM = DIM * DIM

_I4 = np.eye(DIM, dtype=complex)
#: flat indices of the population elements of vec(rho)
_DIAGONAL_SLOTS = tuple(i * DIM + i for i in range(DIM))
#: the trace functional as a row vector on vec(rho)
TRACE_ROW = np.zeros(SDIM, dtype=complex)
TRACE_ROW[list(_DIAGONAL_SLOTS)] = 1.0


def flat(i: int, j: int) -> int:
    """Flat index of rho[i, j] in vec(rho)."""
    return i * DIM + j


def commutator_superop(op: np.ndarray) -> np.ndarray:
    """Superoperator of ``rho -> -i (op rho - rho op)``."""
    return -1j * (np.kron(op, _I4) - np.kron(_I4, op.T))


def lindblad_superop(a: np.ndarray) -> np.ndarray:
    """Superoperator of ``D[a] rho = a rho a+ - (a+a rho + rho a+a)/2``."""
    ada = a.conj().T @ a
    return (np.kron(a, a.conj())
            - 0.5 * np.kron(ada, _I4)
            - 0.5 * np.kron(_I4, ada.T))


def _ketbra(i: int, j: int) -> np.ndarray:
    out = np.zeros((DIM, DIM), dtype=complex)
    out[i, j] = 1.0
    return out


#: superoperator generators of the field couplings: for each field f,
#: L_drive(t) = omega_f(t) * DRIVE_GEN[f] + conj(omega_f(t)) * DRIVE_GEN_CONJ[f]
DRIVE_GEN = {f: commutator_superop(-0.5 * _ketbra(0, INDEX[f])) for f in FIELDS}
DRIVE_GEN_CONJ = {f: commutator_superop(-0.5 * _ketbra(INDEX[f], 0)) for f in FIELDS}
#: superoperator of a unit shift of ground level g: H += -delta * |g><g|
DETUNING_GEN = {f: commutator_superop(-_ketbra(INDEX[f], INDEX[f])) for f in FIELDS}
#: superoperator of the common velocity shift (+v on every ground level)
VELOCITY_GEN = commutator_superop(np.diag([0.0, 1.0, 1.0, 1.0]).astype(complex))


def build_hamiltonian(drives: DriveConfig, velocity_detuning: float = 0.0) -> np.ndarray:
    """Rotating-frame tripod Hamiltonian (rad/s), Hermitian by construction."""
    validate_drives(drives)
    H = np.zeros((DIM, DIM), dtype=complex)
    for f in FIELDS:
        g = INDEX[f]
        omega = complex(drives.omega(f))
        H[0, g] = -0.5 * omega
        H[g, 0] = -0.5 * omega.conjugate()
        H[g, g] = -(drives.delta(f) - velocity_detuning)
    return H


@lru_cache(maxsize=64)
def _dissipator_cached(p: TripodParams) -> np.ndarray:
    L = np.zeros((SDIM, SDIM), dtype=complex)
    for f, rate in (("z", p.gamma_e_z), ("h", p.gamma_e_h), ("p", p.gamma_e_p)):
        if rate:
            L += rate * lindblad_superop(_ketbra(INDEX[f], 0))
    if p.exchange_G:
        L += p.exchange_G * lindblad_superop(_ketbra(INDEX["z"], INDEX["h"]))
        L += p.exchange_G * lindblad_superop(_ketbra(INDEX["h"], INDEX["z"]))
    pairs = (("z", "h", p.gamma_hz), ("h", "p", p.gamma_hp), ("z", "p", p.gamma_zp))
    for a, b, gamma in pairs:
        i, j = INDEX[a], INDEX[b]
        L[flat(i, j), flat(i, j)] -= gamma
        L[flat(j, i), flat(j, i)] -= gamma
    if p.extra_optical_dephasing:
        for f in FIELDS:
            g = INDEX[f]
            L[flat(0, g), flat(0, g)] -= p.extra_optical_dephasing
            L[flat(g, 0), flat(g, 0)] -= p.extra_optical_dephasing
    L.flags.writeable = False
    return L


def dissipator_superop(p: TripodParams) -> np.ndarray:
    """Field-independent dissipative part of the Liouvillian (16x16)."""
    return _dissipator_cached(p).copy()


def build_liouvillian(H: np.ndarray, p: TripodParams) -> np.ndarray:
    """Full generator: L(rho) = -i[H, rho] + dissipators (16x16 on vec(rho))."""
    return commutator_superop(H) + _dissipator_cached(p)


def apply_superop(L: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Apply a 16x16 superoperator to a 4x4 density matrix."""
    return (L @ rho.reshape(SDIM)).reshape(DIM, DIM)


# ---------------------------------------------------------------------------
# Steady state
# ---------------------------------------------------------------------------

#: relative singular-value threshold below which the null space counts as
#: multi-dimensional
DEGENERACY_RTOL = 1e-8
#: steady-state residual bound, relative to the largest Liouvillian entry
RESIDUAL_RTOL = 1e-10


def steady_state(L: np.ndarray, *, check_degenerate: bool = True) -> np.ndarray:
    """Unique trace-one stationary state of ``L``, by trace-constrained solve.

    One row of the flattened linear system ``L vec(rho) = 0`` is replaced by
    the trace constraint and the dense system solved by LU.  If the second-
    smallest singular value of ``L`` falls below ``DEGENERACY_RTOL`` times the
    largest, the stationary manifold is multi-dimensional (for example with
    every field off) and :class:`DegenerateSteadyStateError` is raised instead
    of silently picking one member.
    """
    scale = np.abs(L).max()
    if scale == 0.0:
        raise DegenerateSteadyStateError("zero generator has no unique steady state")
    if check_degenerate:
        svals = np.linalg.svd(L, compute_uv=False)
        if svals[-2] < DEGENERACY_RTOL * svals[0]:
            raise DegenerateSteadyStateError(
                "second-smallest singular value "
                f"{svals[-2]:.3e} < {DEGENERACY_RTOL:g} x {svals[0]:.3e}; "
                "the stationary state is not unique"
            )
    M = L / scale
    M[0, :] = TRACE_ROW
    b = np.zeros(SDIM, dtype=complex)
    b[0] = 1.0
    rho = np.linalg.solve(M, b).reshape(DIM, DIM)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    residual = np.abs(L @ rho.reshape(SDIM)).max()
    if residual > RESIDUAL_RTOL * scale:
        raise DegenerateSteadyStateError(
            f"steady-state residual {residual:.3e} exceeds {RESIDUAL_RTOL:g} x {scale:.3e}"
        )
    return rho


def validate_density_matrix(rho: np.ndarray, *, herm_tol: float = 1e-12,
                            trace_tol: float = 1e-10,
                            positivity_tol: float = 1e-10) -> np.ndarray:
    """Check Hermiticity, unit trace, and positivity (up to solver tolerance)."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (DIM, DIM):
        raise ParameterError(f"density matrix must be 4x4, got {rho.shape}")
    herm = np.abs(rho - rho.conj().T).max()
    if herm > herm_tol:
        raise ParameterError(f"density matrix not Hermitian: max deviation {herm:.3e}")
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_tol:
        raise ParameterError(f"density matrix trace {tr} differs from 1")
    eigs = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if eigs.min() < -positivity_tol:
        raise ParameterError(f"density matrix not positive: min eigenvalue {eigs.min():.3e}")
    return rho


def density_matrix_csv(rho: np.ndarray) -> str:
    """Debug dump: 4x4 table of (re, im) pairs as CSV text."""
    lines = ["level," + ",".join(f"re_{n},im_{n}" for n in LEVELS)]
    for i, name in enumerate(LEVELS):
        cells = []
        for j in range(DIM):
            cells.append(repr(float(rho[i, j].real)))
            cells.append(repr(float(rho[i, j].imag)))
        lines.append(name + "," + ",".join(cells))
    return "\n".join(lines) + "\n"


def dump_density_matrix(rho: np.ndarray, path: str | Path) -> None:
    Path(path).write_text(density_matrix_csv(rho), encoding="utf-8")


def dark_state(omega_z: complex, omega_h: complex) -> np.ndarray:
    """Normalized signal dark state  |d> = (Omega_h |z> - Omega_z |h>) / N.

    Decoupled from |e> regardless of the field phases; only the orthogonal
    bright combination couples to the excited state.
    """
    norm = math.hypot(abs(omega_z), abs(omega_h))
    if norm == 0.0:
        raise ParameterError("dark state undefined for omega_z = omega_h = 0")
    ket = np.zeros(DIM, dtype=complex)
    ket[INDEX["z"]] = omega_h / norm
    ket[INDEX["h"]] = -omega_z / norm
    return ket


# ---------------------------------------------------------------------------
# Time evolution
# ---------------------------------------------------------------------------

#: stability margin of the fixed-step integrator: dt <= 0.02 / Gamma_total
STABILITY_FACTOR = 0.02


def total_rate(p: TripodParams) -> float:
    """Largest total damping rate in the problem (sets the dt bound)."""
    g = p.exchange_G
    return max(
        p.gamma_e_total + p.extra_optical_dephasing + 0.5 * g,
        p.gamma_hz + 2.0 * g,
        p.gamma_hp + 0.5 * g,
        p.gamma_zp + 0.5 * g,
    )


def max_stable_dt(p: TripodParams) -> float:
    return STABILITY_FACTOR / total_rate(p)


_SEGMENT_SHAPES = ("const", "off", "ramp_on", "ramp_off", "gaussian")


@dataclass(frozen=True)
class Segment:
    """One piece of a piecewise Rabi envelope.

    ``shape`` is one of ``const | off | ramp_on | ramp_off | gaussian``.
    Ramps are smooth half-cosines spanning the whole segment; a Gaussian is
    centred mid-segment with FWHM ``width``.
    """

    t0: float
    t1: float
    shape: str = "const"
    amplitude: complex = 0.0
    width: float = 0.0

    def __post_init__(self):
        if self.shape not in _SEGMENT_SHAPES:
            raise ParameterError(f"unknown segment shape {self.shape!r}")
        if not (math.isfinite(self.t0) and math.isfinite(self.t1)) or self.t1 <= self.t0:
            raise ParameterError(f"segment needs t1 > t0, got [{self.t0}, {self.t1}]")
        a = complex(self.amplitude)
        if not (math.isfinite(a.real) and math.isfinite(a.imag)):
            raise ParameterError(f"segment amplitude must be finite, got {a!r}")
        if self.shape == "gaussian" and self.width <= 0.0:
            raise ParameterError("gaussian segment needs width > 0")

    def values(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        amp = complex(self.amplitude)
        if self.shape == "off":
            return np.zeros(t.shape, dtype=complex)
        if self.shape == "const":
            return np.full(t.shape, amp, dtype=complex)
        span = self.t1 - self.t0
        x = (t - self.t0) / span
        if self.shape == "ramp_on":
            return amp * 0.5 * (1.0 - np.cos(np.pi * x))
        if self.shape == "ramp_off":
            return amp * 0.5 * (1.0 + np.cos(np.pi * x))
        center = 0.5 * (self.t0 + self.t1)
        return amp * np.exp(-4.0 * math.log(2.0) * ((t - center) / self.width) ** 2)


def _validate_segments(segs: Sequence[Segment], field: str) -> tuple[Segment, ...]:
    segs = tuple(segs)
    for prev, nxt in zip(segs, segs[1:]):
        gap = nxt.t0 - prev.t1
        tol = 1e-9 * max(abs(prev.t1), abs(nxt.t0), 1e-30)
        if gap < -tol:
            raise ParameterError(f"{field} segments overlap at t = {nxt.t0}")
        if gap > tol:
            raise ParameterError(
                f"{field} segments are not contiguous: gap [{prev.t1}, {nxt.t0}] "
                "(insert an explicit 'off' segment)"
            )
    return segs


@dataclass(frozen=True)
class DriveSchedule:
    """Piecewise drives for all three fields plus their static detunings.

    Outside its segments a field is off.  Segments must be contiguous and
    non-overlapping per field.
    """

    delta_z: float = 0.0
    delta_h: float = 0.0
    delta_p: float = 0.0
    segments_z: tuple[Segment, ...] = ()
    segments_h: tuple[Segment, ...] = ()
    segments_p: tuple[Segment, ...] = ()

    def __post_init__(self):
        for f in FIELDS:
            object.__setattr__(
                self, f"segments_{f}",
                _validate_segments(getattr(self, f"segments_{f}"), f),
            )

    @classmethod
    def constant(cls, drives: DriveConfig, duration: float) -> "DriveSchedule":
        """All three fields held at the given amplitudes for ``duration``."""
        def seg(omega: complex) -> tuple[Segment, ...]:
            return (Segment(0.0, duration, "const", omega),)
        return cls(
            delta_z=drives.delta_z, delta_h=drives.delta_h, delta_p=drives.delta_p,
            segments_z=seg(drives.omega_z),
            segments_h=seg(drives.omega_h),
            segments_p=seg(drives.omega_p),
        )

    def segments(self, field: str) -> tuple[Segment, ...]:
        return getattr(self, f"segments_{field}")

    def delta(self, field: str) -> float:
        return getattr(self, f"delta_{field}")

    def amplitudes(self, field: str, t: np.ndarray) -> np.ndarray:
        """Complex Rabi amplitude of one field at the given times."""
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=complex)
        for seg in self.segments(field):
            mask = (t >= seg.t0) & (t <= seg.t1)
            if mask.any():
                out[mask] = seg.values(t[mask])
        return out

    @property
    def end_time(self) -> float:
        ends = [segs[-1].t1 for segs in
                (self.segments_z, self.segments_h, self.segments_p) if segs]
        return max(ends) if ends else 0.0


@dataclass(frozen=True)
class EvolveResult:
    """Trajectory samples from :func:`evolve` (states indexed like times)."""

    times: np.ndarray
    states: np.ndarray  # (n_samples, 4, 4)
    dt: float

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def _static_superop(schedule: DriveSchedule, p: TripodParams,
                    velocity_detuning: float) -> np.ndarray:
    drives = DriveConfig(delta_z=schedule.delta_z, delta_h=schedule.delta_h,
                         delta_p=schedule.delta_p)
    H0 = build_hamiltonian(drives, velocity_detuning)
    return build_liouvillian(H0, p)


def evolve(rho0: np.ndarray, schedule: DriveSchedule, p: TripodParams,
           t_span: tuple[float, float], dt: float, *,
           velocity_detuning: float = 0.0,
           store_every: int = 1) -> EvolveResult:
    """Fixed-step 4th-order integration of ``drho/dt = L(t) rho``.

    The requested ``dt`` must satisfy ``dt <= 0.02 / Gamma_total``; it is
    shrunk slightly so an integer number of steps lands exactly on the end
    time.  Hermiticity is re-symmetrized after every step.  Trace is
    conserved by the generator itself, so any drift is pure rounding.
    """
    rho0 = validate_density_matrix(rho0, herm_tol=1e-10)
    dt_max = max_stable_dt(p)
    if dt > dt_max * (1.0 + 1e-12):
        raise StepSizeError(dt, dt_max)
    t0, t1 = t_span
    if not t1 > t0:
        raise ParameterError(f"need t1 > t0, got {t_span}")
    n_steps = max(1, math.ceil((t1 - t0) / dt - 1e-12))
    h = (t1 - t0) / n_steps

    stage_t = t0 + 0.5 * h * np.arange(2 * n_steps + 1)
    amps = {f: schedule.amplitudes(f, stage_t) for f in FIELDS}
    L_static = _static_superop(schedule, p, velocity_detuning)

    def superop_at(k: int) -> np.ndarray:
        L = L_static.copy()
        for f in FIELDS:
            a = amps[f][k]
            if a != 0.0:
                L += a * DRIVE_GEN[f]
                L += a.conjugate() * DRIVE_GEN_CONJ[f]
        return L

    y = rho0.reshape(SDIM).astype(complex)
    samples = [rho0.copy()]
    times = [t0]
    L_even = superop_at(0)
    for k in range(n_steps):
        L_half = superop_at(2 * k + 1)
        L_next = superop_at(2 * k + 2)
        k1 = L_even @ y
        k2 = L_half @ (y + 0.5 * h * k1)
        k3 = L_half @ (y + 0.5 * h * k2)
        k4 = L_next @ (y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho = y.reshape(DIM, DIM)
        rho = 0.5 * (rho + rho.conj().T)
        y = rho.reshape(SDIM)
        L_even = L_next
        if (k + 1) % store_every == 0 or k == n_steps - 1:
            if not np.isfinite(y).all():
                raise IntegrationDivergedError(t0 + (k + 1) * h)
            samples.append(rho.copy())
            times.append(t0 + (k + 1) * h)
    return EvolveResult(np.array(times), np.array(samples), h)


def rk4_step_matrix(L: np.ndarray, dt: float) -> np.ndarray:
    """One-step propagator of classical RK4 for a constant generator.

    For a linear autonomous system, an RK4 step is exactly
    ``I + A + A^2/2 + A^3/6 + A^4/24`` with ``A = dt L``.
    """
    A = dt * L
    M = np.eye(SDIM, dtype=complex) + A
    Ak = A
    fact = 1.0
    for k in (2, 3, 4):
        Ak = Ak @ A
        fact *= k
        M += Ak / fact
    return M


def evolve_constant(L: np.ndarray, rho0: np.ndarray, duration: float, dt: float,
                    p: TripodParams | None = None) -> np.ndarray:
    """Final state of fixed-step RK4 under a constant generator.

    Equivalent to stepping :func:`evolve` with frozen drives, but the N-step
    propagation is evaluated as the N-th power of the one-step matrix, so
    long relaxations cost O(log N) small matrix products.
    """
    if p is not None:
        dt = min(dt, max_stable_dt(p))
    n = max(1, math.ceil(duration / dt - 1e-12))
    h = duration / n
    M = np.linalg.matrix_power(rk4_step_matrix(L, h), n)
    rho = (M @ rho0.reshape(SDIM)).reshape(DIM, DIM)
    rho = 0.5 * (rho + rho.conj().T)
    if not np.isfinite(rho).all():
        raise IntegrationDivergedError(duration)
    return rho
