"""Parameter containers, unit handling, and field calibration for the tripod medium.

Unit discipline
---------------
Every frequency-like quantity crossing a module boundary is an *angular*
frequency in rad/s.  Configuration files may quote ordinary frequencies with a
unit suffix ("6MHz", "40kHz"); the loader multiplies those by 2*pi on ingest.
Powers are in watts ("2.5mW", "50uW" accepted), lengths in metres ("12cm").

Level scheme
------------
One excited state |e> above three ground states |z>, |h>, |p>.  Each ground
state couples to |e> through exactly one field: the Zeeman signal (z), the
hyperfine signal (h), and the pump (p).  Rabi frequencies follow the
convention that the interaction matrix element is -Omega/2, and laser powers
map onto Rabi frequencies through a single calibration constant per setup,
Omega = kappa * sqrt(P).
"""

from __future__ import annotations

import cmath
import json
import math
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError, ParameterError

TWO_PI = 2.0 * math.pi

#: FWHM of a Gaussian in units of its standard deviation.
GAUSSIAN_FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))


@dataclass(frozen=True)
class TripodParams:
    """Physical constants of the medium.  Immutable after construction.

    All rates are angular frequencies (rad/s) except ``doppler_fwhm``,
    which is the FWHM (in ordinary Hz) of the Gaussian distribution of
    one-photon detunings seen by a moving atom.
    """

    gamma_e_z: float  # spontaneous decay branch |e> -> |z>
    gamma_e_h: float  # spontaneous decay branch |e> -> |h>
    gamma_e_p: float  # spontaneous decay branch |e> -> |p>
    gamma_hz: float   # dephasing of the z-h ground coherence
    gamma_hp: float   # dephasing of the h-p ground coherence
    gamma_zp: float   # dephasing of the z-p ground coherence
    exchange_G: float  # incoherent population exchange |h> <-> |z>, each way
    doppler_fwhm: float  # Hz (ordinary frequency)
    optical_depth_z: float
    optical_depth_h: float
    cell_length: float  # metres
    rabi_calibration_kappa: float  # rad/(s*sqrt(W))
    extra_optical_dephasing: float = 0.0  # additional damping of e-g coherences

    @property
    def gamma_e_total(self) -> float:
        """Total decay rate of |e> (rad/s)."""
        return self.gamma_e_z + self.gamma_e_h + self.gamma_e_p

    @property
    def doppler_sigma(self) -> float:
        """Standard deviation of the one-photon detuning distribution (rad/s)."""
        return TWO_PI * self.doppler_fwhm / GAUSSIAN_FWHM_PER_SIGMA

    def with_updates(self, **kwargs: float) -> "TripodParams":
        """Return a copy with selected fields replaced (revalidated)."""
        return validate_params(replace(self, **kwargs))


@dataclass(frozen=True)
class DriveConfig:
    """Complex Rabi frequencies and one-photon detunings of the three fields.

    Two-photon detunings are always derived, never stored:
    delta_zp = delta_z - delta_p, and cyclically.
    """

    omega_z: complex = 0.0
    omega_h: complex = 0.0
    omega_p: complex = 0.0
    delta_z: float = 0.0
    delta_h: float = 0.0
    delta_p: float = 0.0

    @property
    def delta_zp(self) -> float:
        return self.delta_z - self.delta_p

    @property
    def delta_hp(self) -> float:
        return self.delta_h - self.delta_p

    @property
    def delta_zh(self) -> float:
        return self.delta_z - self.delta_h

    def omega(self, field: str) -> complex:
        return {"z": self.omega_z, "h": self.omega_h, "p": self.omega_p}[field]

    def delta(self, field: str) -> float:
        return {"z": self.delta_z, "h": self.delta_h, "p": self.delta_p}[field]

    def with_field(self, field: str, omega: complex | None = None,
                   delta: float | None = None) -> "DriveConfig":
        """Return a copy with one field's amplitude and/or detuning replaced."""
        kwargs: dict[str, Any] = {}
        if omega is not None:
            kwargs[f"omega_{field}"] = omega
        if delta is not None:
            kwargs[f"delta_{field}"] = delta
        return replace(self, **kwargs)


def rabi_from_power(power: float, kappa: float) -> float:
    """Convert a beam power (W) to a Rabi frequency (rad/s), Omega = kappa*sqrt(P)."""
    if not math.isfinite(power) or power < 0.0:
        raise ParameterError(f"power must be finite and >= 0, got {power!r}")
    if not math.isfinite(kappa) or kappa <= 0.0:
        raise ParameterError(f"kappa must be finite and > 0, got {kappa!r}")
    return kappa * math.sqrt(power)


def validate_params(p: TripodParams) -> TripodParams:
    """Check every invariant of a :class:`TripodParams`; return it unchanged.

    Violations are collected and reported together, each naming the
    offending field.  Idempotent.
    """
    problems: list[str] = []
    nonneg = [
        "gamma_e_z", "gamma_e_h", "gamma_e_p",
        "gamma_hz", "gamma_hp", "gamma_zp",
        "exchange_G", "doppler_fwhm",
        "optical_depth_z", "optical_depth_h",
        "rabi_calibration_kappa", "extra_optical_dephasing",
    ]
    for name in nonneg:
        value = getattr(p, name)
        if not math.isfinite(value):
            problems.append(f"{name} must be finite, got {value!r}")
        elif value < 0.0:
            problems.append(f"{name} must be >= 0, got {value!r}")
    if not math.isfinite(p.cell_length) or p.cell_length <= 0.0:
        problems.append(f"cell_length must be > 0, got {p.cell_length!r}")
    if (math.isfinite(p.gamma_e_total)) and p.gamma_e_total <= 0.0:
        problems.append(
            "total excited-state decay gamma_e_z + gamma_e_h + gamma_e_p must be positive"
        )
    if problems:
        raise ParameterError("; ".join(problems))
    return p


def validate_drives(d: DriveConfig) -> DriveConfig:
    """Check finiteness of all amplitudes and detunings; return unchanged."""
    problems: list[str] = []
    for name in ("omega_z", "omega_h", "omega_p"):
        v = complex(getattr(d, name))
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            problems.append(f"{name} must be finite, got {v!r}")
    for name in ("delta_z", "delta_h", "delta_p"):
        v = getattr(d, name)
        if not math.isfinite(v):
            problems.append(f"{name} must be finite, got {v!r}")
    if problems:
        raise ParameterError("; ".join(problems))
    return d


# ---------------------------------------------------------------------------
# Unit-suffixed quantity parsing
# ---------------------------------------------------------------------------

_FREQ_SUFFIXES = {
    "hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9,
}
_POWER_SUFFIXES = {
    "w": 1.0, "mw": 1e-3, "uw": 1e-6, "µw": 1e-6, "nw": 1e-9, "pw": 1e-12,
}
_LENGTH_SUFFIXES = {
    "m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "nm": 1e-9,
}
_TIME_SUFFIXES = {
    "s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "ns": 1e-9,
}

_QUANTITY_RE = re.compile(
    r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*([a-zA-Zµ]*)\s*$"
)


def parse_quantity(value: Any, kind: str = "any") -> float:
    """Parse a number or a unit-suffixed string into base units.

    Frequencies are converted to *angular* frequency: "6MHz" -> 2*pi*6e6 rad/s.
    Powers/lengths/times map to W/m/s with no 2*pi.  Bare numbers pass
    through unchanged (assumed already in base units for their slot).
    ``kind`` restricts which suffix families are accepted
    ("frequency", "power", "length", "time", "dimensionless", "any").
    """
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        if not math.isfinite(value):
            raise ConfigError(f"non-finite value {value!r}")
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"cannot parse quantity from {value!r}")
    m = _QUANTITY_RE.match(value)
    if not m:
        raise ConfigError(f"malformed quantity {value!r}")
    number = float(m.group(1))
    suffix = m.group(2).lower()
    if suffix == "":
        if kind == "dimensionless" or kind == "any":
            return number
        raise ConfigError(f"quantity {value!r} is missing a {kind} unit suffix")
    tables = {
        "frequency": (_FREQ_SUFFIXES,),
        "power": (_POWER_SUFFIXES,),
        "length": (_LENGTH_SUFFIXES,),
        "time": (_TIME_SUFFIXES,),
        "any": (_FREQ_SUFFIXES, _POWER_SUFFIXES, _LENGTH_SUFFIXES, _TIME_SUFFIXES),
    }.get(kind)
    if tables is None:
        raise ConfigError(f"unknown quantity kind {kind!r}")
    for table in tables:
        if suffix in table:
            scale = table[suffix]
            if table is _FREQ_SUFFIXES:
                return TWO_PI * number * scale
            return number * scale
    raise ConfigError(f"unknown {kind} unit {m.group(2)!r} in {value!r}")


_PARAM_KINDS = {
    "gamma_e_z": "frequency", "gamma_e_h": "frequency", "gamma_e_p": "frequency",
    "gamma_hz": "frequency", "gamma_hp": "frequency", "gamma_zp": "frequency",
    "exchange_G": "frequency",
    "extra_optical_dephasing": "frequency",
    "doppler_fwhm": "frequency",
    "optical_depth_z": "dimensionless", "optical_depth_h": "dimensionless",
    "cell_length": "length",
    "rabi_calibration_kappa": "dimensionless",
}


def params_from_mapping(data: Mapping[str, Any]) -> TripodParams:
    """Build validated :class:`TripodParams` from a key-value mapping.

    Keys mirror the field names; values may carry unit suffixes.  The
    Doppler width is quoted as an ordinary-frequency FWHM, so the 2*pi
    applied by the frequency parser is undone for that one field.
    """
    unknown = set(data) - set(_PARAM_KINDS)
    if unknown:
        raise ConfigError(f"unknown parameter keys: {sorted(unknown)}")
    missing = set(_PARAM_KINDS) - set(data) - {"extra_optical_dephasing"}
    if missing:
        raise ConfigError(f"missing parameter keys: {sorted(missing)}")
    kwargs: dict[str, float] = {}
    for key, raw in data.items():
        value = parse_quantity(raw, _PARAM_KINDS[key])
        if key == "doppler_fwhm" and isinstance(raw, str):
            value /= TWO_PI  # stored as ordinary-frequency FWHM
        kwargs[key] = value
    return validate_params(TripodParams(**kwargs))


def load_config(path: str | Path) -> dict[str, Any]:
    """Read a JSON configuration file into a plain dict."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return data


def drives_from_mapping(data: Mapping[str, Any], kappa: float) -> DriveConfig:
    """Build a :class:`DriveConfig` from a config section.

    Amplitudes may be given as powers (``pump_power: "2.5mW"``) or directly
    as Rabi frequencies (``omega_p: "8MHz"``); powers win when both appear.
    Detunings default to zero.
    """
    field_names = {"z": "zeeman", "h": "hyperfine", "p": "pump"}
    kwargs: dict[str, Any] = {}
    known = set()
    for field, alias in field_names.items():
        power_key, omega_key, delta_key = f"{alias}_power", f"omega_{field}", f"delta_{field}"
        known |= {power_key, omega_key, delta_key}
        if power_key in data:
            power = parse_quantity(data[power_key], "power")
            kwargs[f"omega_{field}"] = complex(rabi_from_power(power, kappa))
        elif omega_key in data:
            kwargs[f"omega_{field}"] = complex(parse_quantity(data[omega_key], "frequency"))
        if delta_key in data:
            kwargs[f"delta_{field}"] = parse_quantity(data[delta_key], "frequency")
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown drive keys: {sorted(unknown)}")
    return validate_drives(DriveConfig(**kwargs))


def format_complex(value: complex) -> str:
    """Stable text form for a complex number (used in echoes and CSV)."""
    value = complex(value)
    if value.imag == 0.0:
        return repr(value.real)
    return f"{value.real!r}{value.imag:+}j" if cmath.isfinite(value) else repr(value)
