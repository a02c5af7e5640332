"""Shared fixtures: reference parameter sets and small helpers."""

from __future__ import annotations

import io
import math
from pathlib import Path

import numpy as np
import pytest

from deit import DriveConfig, TripodParams, rabi_from_power

TWO_PI = 2.0 * math.pi

REPO_ROOT = Path(__file__).resolve().parent.parent
CONFIG_PATH = REPO_ROOT / "configs" / "reference.json"
DATA_DIR = REPO_ROOT / "data"


def reference_params(**overrides) -> TripodParams:
    """The fitted medium constants used throughout: 6 MHz decay branches,
    5/5/40 kHz dephasings, 50 Hz exchange, 500 MHz Doppler width, 12 cm cell."""
    base = dict(
        gamma_e_z=TWO_PI * 6e6,
        gamma_e_h=TWO_PI * 6e6,
        gamma_e_p=TWO_PI * 6e6,
        gamma_hz=TWO_PI * 5e3,
        gamma_hp=TWO_PI * 5e3,
        gamma_zp=TWO_PI * 40e3,
        exchange_G=TWO_PI * 50.0,
        doppler_fwhm=500e6,
        optical_depth_z=23.0,
        optical_depth_h=41.0,
        cell_length=0.12,
        rabi_calibration_kappa=7.0e8,
    )
    base.update(overrides)
    return TripodParams(**base)


@pytest.fixture
def params() -> TripodParams:
    return reference_params()


@pytest.fixture
def pump_drive(params) -> DriveConfig:
    return DriveConfig(omega_p=rabi_from_power(2.5e-3, params.rabi_calibration_kappa))


def rho_in(level: int) -> np.ndarray:
    rho = np.zeros((4, 4), dtype=complex)
    rho[level, level] = 1.0
    return rho


def read_csv(path) -> np.ndarray:
    """Structured-array reader for the package's comment-headed CSVs."""
    body = "".join(line for line in Path(path).read_text().splitlines(keepends=True)
                   if not line.startswith("#"))
    return np.genfromtxt(io.StringIO(body), delimiter=",", names=True,
                         dtype=None, encoding="utf-8")


def random_valid_setup(rng: np.random.Generator) -> tuple[TripodParams, DriveConfig]:
    """A random nondegenerate configuration: every field on, all decoherence
    channels active, rates within two decades of the decay scale."""
    ge = TWO_PI * 6e6 * rng.uniform(0.3, 3.0)
    p = reference_params(
        gamma_e_z=ge * rng.uniform(0.2, 0.5),
        gamma_e_h=ge * rng.uniform(0.2, 0.5),
        gamma_e_p=ge * rng.uniform(0.2, 0.5),
        gamma_hz=ge * rng.uniform(1e-3, 1e-2),
        gamma_hp=ge * rng.uniform(1e-3, 1e-2),
        gamma_zp=ge * rng.uniform(1e-3, 1e-2),
        exchange_G=ge * rng.uniform(1e-3, 1e-2),
        extra_optical_dephasing=ge * rng.uniform(0.0, 0.3),
    )
    def amp():
        return ge * rng.uniform(0.05, 0.8) * np.exp(2j * np.pi * rng.uniform())
    drives = DriveConfig(
        omega_z=amp(), omega_h=amp(), omega_p=amp(),
        delta_z=ge * rng.uniform(-1, 1),
        delta_h=ge * rng.uniform(-1, 1),
        delta_p=ge * rng.uniform(-1, 1),
    )
    return p, drives


# ---------------------------------------------------------------------------
# Acceptance reporting: one pass/fail line per criterion after the run
# ---------------------------------------------------------------------------

ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


def record_acceptance(criterion: str, ok: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS[criterion] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[key]
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {key}: {status}  ({detail})")
