"""Internal vectorized kernels shared by the response and propagation layers.

Everything here is batched over velocity classes (and, where useful, probe
detunings) with stacked 16x16 dense solves; no public API.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import roots_hermite

from .errors import DegenerateSteadyStateError
from .liouville import (
    DEGENERACY_RTOL,
    DIM,
    SDIM,
    TRACE_ROW,
    VELOCITY_GEN,
    build_hamiltonian,
    build_liouvillian,
)
from .params import DriveConfig, TripodParams

#: normalized Gauss-Hermite weights below this are dropped; they are smaller
#: than double-precision resolution of the integral
_WEIGHT_FLOOR = 1e-14


@lru_cache(maxsize=32)
def _hermite_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = roots_hermite(n)
    w = w / math.sqrt(math.pi)
    keep = w > _WEIGHT_FLOOR
    return x[keep], w[keep]


def doppler_grid(fwhm_hz: float, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Velocity-detuning nodes (rad/s) and normalized weights for a Gaussian
    one-photon detuning distribution of the given ordinary-frequency FWHM.

    Gauss-Hermite abscissas with negligible weight (< 1e-14) are trimmed;
    the sum of the returned weights is 1 up to that floor.
    """
    if nodes < 1:
        raise ValueError("need at least one quadrature node")
    if fwhm_hz == 0.0 or nodes == 1:
        return np.zeros(1), np.ones(1)
    sigma = 2.0 * math.pi * fwhm_hz / (2.0 * math.sqrt(2.0 * math.log(2.0)))
    x, w = _hermite_rule(int(nodes))
    return math.sqrt(2.0) * sigma * x, w.copy()


def liouvillians_at_velocities(drives: DriveConfig, p: TripodParams,
                               velocities: np.ndarray) -> np.ndarray:
    """Stacked Liouvillians (n_v, 16, 16); velocity shifts all one-photon
    detunings identically, so L(v) = L(0) + v * VELOCITY_GEN."""
    L0 = build_liouvillian(build_hamiltonian(drives, 0.0), p)
    v = np.asarray(velocities, dtype=float)
    return L0[None, :, :] + v[:, None, None] * VELOCITY_GEN[None, :, :]


def steady_states_batched(L: np.ndarray, *, check_degenerate: bool = True) -> np.ndarray:
    """Trace-constrained steady states of stacked Liouvillians -> (n, 4, 4).

    The degeneracy probe (second-smallest singular value) is evaluated on the
    first stack member only: the null-space dimension is set by the coupling
    topology, which a common velocity shift cannot change.
    """
    L = np.asarray(L)
    single = L.ndim == 2
    if single:
        L = L[None]
    scale = np.abs(L).max()
    if check_degenerate:
        svals = np.linalg.svd(L[0], compute_uv=False)
        if svals[-2] < DEGENERACY_RTOL * svals[0]:
            raise DegenerateSteadyStateError(
                f"stationary state not unique (sigma_2/sigma_1 = {svals[-2]/svals[0]:.3e})"
            )
    M = L / scale
    M[:, 0, :] = TRACE_ROW
    b = np.zeros((L.shape[0], SDIM, 1), dtype=complex)
    b[:, 0, 0] = 1.0
    rho = np.linalg.solve(M, b).reshape(-1, DIM, DIM)
    rho = 0.5 * (rho + np.conj(np.swapaxes(rho, 1, 2)))
    tr = np.einsum("nii->n", rho).real
    rho /= tr[:, None, None]
    return rho[0] if single else rho


def solve_traceless(A: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve stacked systems A x = rhs on the traceless subspace by replacing
    the first row with the trace constraint (rhs row forced to zero)."""
    scale = np.abs(A).max(axis=(-2, -1), keepdims=True)
    M = A / scale
    M[..., 0, :] = TRACE_ROW
    b = (rhs / scale[..., 0]).copy()
    b[..., 0] = 0.0
    return np.linalg.solve(M, b[..., None])[..., 0]


def solve_traceless_lstsq(A: np.ndarray, rhs: np.ndarray,
                          rcond: float = 1e-11) -> np.ndarray:
    """Minimum-norm solve of stacked (possibly singular) systems by SVD.

    Used for linear response around a frozen initial state whose generator
    has slow or exactly-stationary directions: singular values below
    ``rcond`` times the largest are treated as kernel and excluded, which
    drops the secular population drift while leaving the optical-coherence
    components (orthogonal to that kernel) untouched.
    """
    U, s, Vh = np.linalg.svd(A)
    cutoff = rcond * s[..., :1]
    inv = np.where(s > cutoff, 1.0 / np.where(s > 0, s, 1.0), 0.0)
    tmp = np.einsum("...ij,...i->...j", np.conj(U), rhs)
    return np.einsum("...ji,...j->...i", np.conj(Vh), inv * tmp)
