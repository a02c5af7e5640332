"""Named simulation scenarios: load a config, run, write CSV artifacts.

Every scenario is deterministic: identical config and overrides produce
byte-identical CSV bodies (no timestamps unless explicitly requested), and
every output carries a comment header echoing the resolved parameter set,
the package version, and any overrides verbatim.  A run manifest lists
inputs, outputs, and their checksums.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

from . import __version__
from .errors import ConfigError, DeitError
from .fitting import fit, load_dataset, write_fit_result
from .params import (
    DriveConfig,
    TripodParams,
    drives_from_mapping,
    load_config,
    params_from_mapping,
    parse_quantity,
    rabi_from_power,
)
from .propagation import (
    PropagationGrid,
    StorageProtocol,
    delay_enhancement,
    gaussian_pulse,
    match_group_velocities,
    measure_delay,
    propagate,
    signal_group_velocities,
    storage_run,
)
from .response import (
    BackgroundConfig,
    find_window,
    lineshape_spectrum,
    transmission,
)

TWO_PI = 2.0 * math.pi

SCENARIO_NAMES = (
    "spectrum-deit",
    "contrast-vs-power",
    "groupvel-vs-power",
    "match",
    "propagate",
    "store",
    "delay-enhancement",
    "fit-groupvel",
)


@dataclass(frozen=True)
class ScenarioSpec:
    """What to run: scenario name, config path, output directory, overrides."""

    name: str
    config_path: Path
    out_dir: Path
    overrides: tuple[str, ...] = ()
    jobs: int = 1
    embed_timestamp: bool = False

    def __post_init__(self):
        if self.name not in SCENARIO_NAMES:
            raise ConfigError(
                f"unknown scenario {self.name!r}; choose from {', '.join(SCENARIO_NAMES)}"
            )
        object.__setattr__(self, "config_path", Path(self.config_path))
        object.__setattr__(self, "out_dir", Path(self.out_dir))


@dataclass
class RunContext:
    params: TripodParams
    drives: DriveConfig
    config: dict[str, Any]
    spec: ScenarioSpec

    def section(self, name: str) -> dict[str, Any]:
        value = self.config.get(name, {})
        if not isinstance(value, dict):
            raise ConfigError(f"config section {name!r} must be an object")
        return value

    def header_lines(self) -> list[str]:
        lines = [
            f"# artifact = deit {__version__}",
            f"# scenario = {self.spec.name}",
        ]
        if self.spec.embed_timestamp:
            import datetime

            lines.append(f"# generated = {datetime.datetime.now().isoformat()}")
        for key, value in sorted(_flatten(self.config).items()):
            lines.append(f"# cfg.{key} = {value}")
        for ov in self.spec.overrides:
            lines.append(f"# override: {ov}")
        return lines


def _flatten(tree: Mapping[str, Any], prefix: str = "") -> dict[str, Any]:
    flat: dict[str, Any] = {}
    for key, value in tree.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, dotted + "."))
        else:
            flat[dotted] = value
    return flat


def apply_overrides(config: dict[str, Any], overrides: Sequence[str]) -> dict[str, Any]:
    """Apply ``section.key=value`` overrides onto a nested config dict."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        dotted, _, raw = item.partition("=")
        keys = dotted.strip().split(".")
        try:
            value: Any = json.loads(raw)
        except json.JSONDecodeError:
            value = raw.strip()
        node = config
        for key in keys[:-1]:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override path {dotted!r} crosses a non-object")
        node[keys[-1]] = value
    return config


def _write_csv(path: Path, ctx: RunContext, columns: Sequence[str],
               rows: Iterable[Sequence[Any]]) -> Path:
    lines = ctx.header_lines()
    lines.append(",".join(columns))
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, (float, np.floating)):
                cells.append(repr(float(cell)))
            elif isinstance(cell, (int, np.integer)):
                cells.append(str(int(cell)))
            else:
                cells.append(str(cell))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _freq(cfg: Mapping[str, Any], key: str, default: str | float) -> float:
    return parse_quantity(cfg.get(key, default), "frequency")


def _power(cfg: Mapping[str, Any], key: str, default: str | float) -> float:
    return parse_quantity(cfg.get(key, default), "power")


def _powers(cfg: Mapping[str, Any], key: str, default: Sequence[str]) -> list[float]:
    return [parse_quantity(v, "power") for v in cfg.get(key, list(default))]


def _pmap(fn: Callable, items: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Scenario implementations
# ---------------------------------------------------------------------------

def _scenario_spectrum_deit(ctx: RunContext) -> list[Path]:
    """Pump-frequency sweep: transmission of both CW signals, two windows."""
    cfg = ctx.section("spectrum")
    span = _freq(cfg, "span", "2MHz")
    points = int(cfg.get("points", 801))
    nodes = int(cfg.get("nodes", 2048))
    kappa = ctx.params.rabi_calibration_kappa
    omega_z = rabi_from_power(_power(cfg, "zeeman_power", "50uW"), kappa)
    omega_h = rabi_from_power(_power(cfg, "hyperfine_power", "50uW"), kappa)
    delta_z = _freq(cfg, "delta_z", "0Hz")
    delta_h = _freq(cfg, "delta_h", "1MHz")
    pump_grid = np.linspace(-span, span, points)

    results: dict[str, np.ndarray] = {}
    for probe in ("z", "h"):
        other = "h" if probe == "z" else "z"
        drives = DriveConfig(
            omega_p=ctx.drives.omega_p, delta_z=delta_z, delta_h=delta_h,
        ).with_field(other, omega=omega_h if other == "h" else omega_z)
        bg = BackgroundConfig(drives, ctx.params)
        delta_probe = delta_z if probe == "z" else delta_h
        # two-photon detunings corresponding to the pump grid, ascending
        dgrid = delta_probe - pump_grid[::-1]
        spec = lineshape_spectrum(bg, probe, dgrid, doppler=True, nodes=nodes,
                                  scan="pump")
        od = ctx.params.optical_depth_z if probe == "z" else ctx.params.optical_depth_h
        results[f"s_{probe}"] = spec.s[::-1]
        results[f"T_{probe}"] = transmission(spec, od)[::-1]

    out = ctx.spec.out_dir / "spectrum_deit.csv"
    rows = [
        (pump_grid[i] / TWO_PI,
         results["s_z"][i].real, results["s_z"][i].imag, results["T_z"][i],
         results["s_h"][i].real, results["s_h"][i].imag, results["T_h"][i])
        for i in range(points)
    ]
    return [_write_csv(out, ctx, ("pump_detuning_hz", "re_s_z", "im_s_z",
                                  "transmission_z", "re_s_h", "im_s_h",
                                  "transmission_h"), rows)]


def _contrast_point(args) -> tuple[float, np.ndarray]:
    params, drives, probe, power, span, points, nodes = args
    kappa = params.rabi_calibration_kappa
    other = "z" if probe == "h" else "h"
    bgd = drives.with_field(other, omega=rabi_from_power(power, kappa))
    bg = BackgroundConfig(bgd, params)
    grid = np.linspace(-span, span, points)
    spec = lineshape_spectrum(bg, probe, grid, doppler=True, nodes=nodes)
    od = params.optical_depth_z if probe == "z" else params.optical_depth_h
    return power, transmission(spec, od)


def _scenario_contrast(ctx: RunContext) -> list[Path]:
    """Transparency contrast of one signal versus the other signal's power."""
    cfg = ctx.section("contrast")
    probe = cfg.get("probe", "h")
    span = _freq(cfg, "span", "2MHz")
    points = int(cfg.get("points", 401))
    nodes = int(cfg.get("nodes", 512))
    powers = _powers(cfg, "powers",
                     ("5uW", "20uW", "50uW", "80uW", "110uW", "150uW"))
    drives = DriveConfig(omega_p=ctx.drives.omega_p)
    tasks = [(ctx.params, drives, probe, P, span, points, nodes) for P in powers]
    resolved = _pmap(_contrast_point, tasks, ctx.spec.jobs)
    resolved.sort(key=lambda item: item[0])

    grid = np.linspace(-span, span, points)
    summary_rows = []
    spectra_rows = []
    for power, T in resolved:
        report = find_window(T)
        if report is None:
            raise DeitError(f"no transparency window at background power {power}")
        summary_rows.append((power, report.contrast, report.peak_transmission,
                             report.floor_transmission))
        for i in range(points):
            spectra_rows.append((power, grid[i] / TWO_PI, float(T[i])))
    out1 = _write_csv(ctx.spec.out_dir / "contrast_vs_power.csv", ctx,
                      ("power_w", "contrast", "peak_transmission",
                       "floor_transmission"), summary_rows)
    out2 = _write_csv(ctx.spec.out_dir / "contrast_spectra.csv", ctx,
                      ("power_w", "delta_hz", "transmission"), spectra_rows)
    return [out1, out2]


def _groupvel_point(args) -> tuple[float, float, float, float, float]:
    params, pump_power, prep_field, power, nodes = args
    g = signal_group_velocities(params, pump_power, prep_field, power,
                                doppler=True, nodes=nodes)
    return power, g.vg_z, g.vg_h, g.tau_z, g.tau_h


def _groupvel_config(ctx: RunContext):
    cfg = ctx.section("groupvel")
    prep_field = cfg.get("prep_field", "h")
    nodes = int(cfg.get("nodes", 256))
    pump_power = _power(ctx.config.get("drives", {}), "pump_power", "2.5mW")
    return cfg, prep_field, nodes, pump_power


def _scenario_groupvel(ctx: RunContext) -> list[Path]:
    """Spectral-path group velocities of both signals vs preparation power."""
    cfg, prep_field, nodes, pump_power = _groupvel_config(ctx)
    powers = _powers(cfg, "powers", tuple(f"{v}uW" for v in
                                          (0, 5, 10, 20, 30, 45, 60, 80, 100, 125, 150)))
    tasks = [(ctx.params, pump_power, prep_field, P, nodes) for P in powers]
    rows = sorted(_pmap(_groupvel_point, tasks, ctx.spec.jobs))
    out = _write_csv(ctx.spec.out_dir / "groupvel_vs_power.csv", ctx,
                     ("power_w", "vg_z_mps", "vg_h_mps", "tau_z_s", "tau_h_s"), rows)
    return [out]


def _scenario_match(ctx: RunContext) -> list[Path]:
    """Preparation power at which the two group velocities cross."""
    cfg, prep_field, nodes, pump_power = _groupvel_config(ctx)
    mcfg = ctx.section("match") or {}
    prep_field = mcfg.get("prep_field", prep_field)
    lo = _power(mcfg, "bracket_low", "0W")
    hi = _power(mcfg, "bracket_high", "150uW")
    tol = _power(mcfg, "tolerance", "0.5uW")
    result = match_group_velocities(ctx.params, pump_power, prep_field, (lo, hi),
                                    tol, doppler=True, nodes=int(mcfg.get("nodes", nodes)))
    out = _write_csv(ctx.spec.out_dir / "match.csv", ctx,
                     ("p_star_w", "vg_matched_mps", "vg_z_mps", "vg_h_mps",
                      "evaluations"),
                     [(result.power, result.vg_matched, result.vg_z, result.vg_h,
                       result.evaluations)])
    return [out]


def _subsample(n: int, target: int) -> np.ndarray:
    if n <= target:
        return np.arange(n)
    stride = max(1, n // target)
    idx = np.arange(0, n, stride)
    if idx[-1] != n - 1:
        idx = np.append(idx, n - 1)
    return idx


def _scenario_propagate(ctx: RunContext) -> list[Path]:
    """Both 1 us pulses through the prepared medium; waveforms and delays."""
    cfg = ctx.section("propagate")
    kappa = ctx.params.rabi_calibration_kappa
    prep_field = cfg.get("prep_field", "h")
    prep_power = _power(cfg, "prep_power", "55uW")
    pulse_fwhm = parse_quantity(cfg.get("pulse_fwhm", "1us"), "time")
    pulse_power = _power(cfg, "pulse_power", "50uW")
    pulse_center = parse_quantity(cfg.get("pulse_center", "4us"), "time")
    prep_off = parse_quantity(cfg.get("prep_off_time", "1us"), "time")
    ramp = parse_quantity(cfg.get("ramp_time", "200ns"), "time")
    t_end = parse_quantity(cfg.get("t_end", "10us"), "time")
    grid = PropagationGrid(nz=int(cfg.get("nz", 50)), nv=int(cfg.get("nv", 16)),
                           map_points=int(cfg.get("map_points", 150)))

    pump_omega = ctx.drives.omega_p
    peak = rabi_from_power(pulse_power, kappa)
    prep_omega = rabi_from_power(prep_power, kappa)
    pulse = gaussian_pulse(pulse_center, pulse_fwhm, peak)

    def prep_tail(t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        x = np.clip((t - prep_off) / ramp, 0.0, 1.0)
        return prep_omega * 0.5 * (1.0 + np.cos(np.pi * x))

    if prep_field == "h":
        input_h = lambda t: prep_tail(t) + pulse(t)  # noqa: E731
        input_z = pulse
    else:
        input_z = lambda t: prep_tail(t) + pulse(t)  # noqa: E731
        input_h = pulse

    initial = DriveConfig(omega_p=pump_omega).with_field(prep_field, omega=prep_omega)
    fields = propagate(
        ctx.params, DriveConfig(), grid, t_end,
        input_z=input_z, input_h=input_h,
        pump=lambda t: np.full(np.asarray(t).shape, pump_omega, dtype=complex),
        initial_drives=initial,
    )

    window = (prep_off + 4.0 * ramp, t_end)
    delays = {}
    for name, inp, outp in (("z", fields.input_z, fields.exit_z),
                            ("h", fields.input_h, fields.exit_h)):
        ref = pulse(fields.t)
        delays[name] = measure_delay(ref, outp, fields.t, window=window)

    idx = _subsample(fields.t.size, int(cfg.get("trace_points", 4000)))
    trace_rows = [
        (fields.t[i], fields.input_z[i].real, fields.input_z[i].imag,
         fields.input_h[i].real, fields.input_h[i].imag,
         fields.exit_z[i].real, fields.exit_z[i].imag,
         fields.exit_h[i].real, fields.exit_h[i].imag,
         abs(fields.pump[i]))
        for i in idx
    ]
    out1 = _write_csv(ctx.spec.out_dir / "detector_traces.csv", ctx,
                      ("t_s", "re_in_z", "im_in_z", "re_in_h", "im_in_h",
                       "re_out_z", "im_out_z", "re_out_h", "im_out_h",
                       "pump_rabi"), trace_rows)
    map_rows = []
    for it, tt in enumerate(fields.map_t):
        for iz, zz in enumerate(fields.z):
            map_rows.append((zz, tt, "z", fields.map_omega_z[it, iz].real,
                             fields.map_omega_z[it, iz].imag))
            map_rows.append((zz, tt, "h", fields.map_omega_h[it, iz].real,
                             fields.map_omega_h[it, iz].imag))
    out2 = _write_csv(ctx.spec.out_dir / "field_map.csv", ctx,
                      ("z_m", "t_s", "field", "re", "im"), map_rows)
    out3 = _write_csv(ctx.spec.out_dir / "delays.csv", ctx,
                      ("field", "centroid_delay_s", "peak_delay_s",
                       "vacuum_delay_s"),
                      [("z", delays["z"].centroid, delays["z"].peak,
                        fields.vacuum_delay),
                       ("h", delays["h"].centroid, delays["h"].peak,
                        fields.vacuum_delay)])
    return [out1, out2, out3]


def _scenario_store(ctx: RunContext) -> list[Path]:
    """Simultaneous storage and retrieval of both pulses."""
    cfg = ctx.section("store")
    protocol = StorageProtocol(
        pulse_center=parse_quantity(cfg.get("pulse_center", "3us"), "time"),
        pulse_fwhm=parse_quantity(cfg.get("pulse_fwhm", "1us"), "time"),
        pulse_power_z=_power(cfg, "pulse_power_z", "50uW"),
        pulse_power_h=_power(cfg, "pulse_power_h", "50uW"),
        pump_power=_power(ctx.config.get("drives", {}), "pump_power", "2.5mW"),
        pump_off_time=parse_quantity(cfg.get("pump_off_time", "4.8us"), "time"),
        storage_duration=parse_quantity(cfg.get("storage_duration", "10us"), "time"),
        ramp_time=parse_quantity(cfg.get("ramp_time", "200ns"), "time"),
        followup=parse_quantity(cfg.get("followup", "6us"), "time"),
    )
    grid = PropagationGrid(nz=int(cfg.get("nz", 50)), nv=int(cfg.get("nv", 8)),
                           map_points=int(cfg.get("map_points", 150)))
    result = storage_run(protocol, ctx.params, grid)
    fields = result.fields
    idx = _subsample(fields.t.size, int(cfg.get("trace_points", 4000)))
    trace_rows = [
        (fields.t[i], abs(fields.input_z[i]), abs(fields.input_h[i]),
         fields.exit_z[i].real, fields.exit_z[i].imag,
         fields.exit_h[i].real, fields.exit_h[i].imag,
         abs(fields.pump[i]))
        for i in idx
    ]
    out1 = _write_csv(ctx.spec.out_dir / "storage_traces.csv", ctx,
                      ("t_s", "abs_in_z", "abs_in_h", "re_out_z", "im_out_z",
                       "re_out_h", "im_out_h", "pump_rabi"), trace_rows)
    out2 = _write_csv(ctx.spec.out_dir / "storage_summary.csv", ctx,
                      ("efficiency_z", "efficiency_h", "input_energy_z",
                       "input_energy_h", "retrieved_energy_z",
                       "retrieved_energy_h", "dark_peak_fraction",
                       "storage_duration_s"),
                      [(result.efficiency_z, result.efficiency_h,
                        result.input_energy_z, result.input_energy_h,
                        result.retrieved_energy_z, result.retrieved_energy_h,
                        result.dark_peak_fraction, protocol.storage_duration)])
    return [out1, out2]


def _enhancement_point(args) -> tuple[float, float]:
    params, pump_power, power, nodes = args
    return power, delay_enhancement(params, pump_power, power, nodes=nodes)


def _scenario_enhancement(ctx: RunContext) -> list[Path]:
    """Hyperfine delay enhancement versus Zeeman preparation power."""
    cfg = ctx.section("enhancement")
    nodes = int(cfg.get("nodes", 256))
    pump_power = _power(ctx.config.get("drives", {}), "pump_power", "2.5mW")
    powers = _powers(cfg, "powers",
                     tuple(f"{v}uW" for v in (0, 15, 30, 50, 75, 100, 125, 150)))
    tasks = [(ctx.params, pump_power, P, nodes) for P in powers]
    rows = sorted(_pmap(_enhancement_point, tasks, ctx.spec.jobs))
    out = _write_csv(ctx.spec.out_dir / "delay_enhancement.csv", ctx,
                     ("power_w", "enhancement_factor"), rows)
    return [out]


def _scenario_fit(ctx: RunContext) -> list[Path]:
    """Fit medium parameters to a group-velocity dataset."""
    cfg = ctx.section("fit")
    dataset_path = Path(cfg.get("dataset", "data/groupvel_reference.csv"))
    if not dataset_path.is_absolute():
        dataset_path = ctx.spec.config_path.parent / dataset_path
    ds = load_dataset(dataset_path)
    free = list(cfg.get("free", ["gamma_hz", "exchange_G",
                                 "rabi_calibration_kappa", "optical_depth_h"]))
    bounds = {}
    for name, pair in cfg.get("bounds", {}).items():
        bounds[name] = (parse_quantity(pair[0], "any"), parse_quantity(pair[1], "any"))
    initial = {name: parse_quantity(v, "any")
               for name, v in cfg.get("initial", {}).items()}
    for name in free:
        bounds.setdefault(name, _default_bounds(ctx.params, name))
        initial.setdefault(name, getattr(ctx.params, name))
    result = fit(ds, ctx.params, free, bounds, initial,
                 max_iter=int(cfg.get("max_iter", 2000)))
    report, res_csv = write_fit_result(result, ctx.spec.out_dir, stem="fit_groupvel")
    return [report, res_csv]


def _default_bounds(p: TripodParams, name: str) -> tuple[float, float]:
    value = getattr(p, name)
    if value <= 0:
        raise ConfigError(f"cannot derive default bounds for {name}; specify them")
    return (value / 30.0, value * 30.0)


_SCENARIOS: dict[str, Callable[[RunContext], list[Path]]] = {
    "spectrum-deit": _scenario_spectrum_deit,
    "contrast-vs-power": _scenario_contrast,
    "groupvel-vs-power": _scenario_groupvel,
    "match": _scenario_match,
    "propagate": _scenario_propagate,
    "store": _scenario_store,
    "delay-enhancement": _scenario_enhancement,
    "fit-groupvel": _scenario_fit,
}


@dataclass(frozen=True)
class ScenarioReport:
    outputs: list[Path]
    manifest: Path


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_scenario(spec: ScenarioSpec) -> ScenarioReport:
    """Execute one scenario end to end and write its manifest."""
    raw = load_config(spec.config_path)
    config = apply_overrides(json.loads(json.dumps(raw)), spec.overrides)
    params = params_from_mapping(config.get("params", {}))
    drives = drives_from_mapping(config.get("drives", {}),
                                 params.rabi_calibration_kappa)
    spec.out_dir.mkdir(parents=True, exist_ok=True)
    ctx = RunContext(params=params, drives=drives, config=config, spec=spec)
    outputs = _SCENARIOS[spec.name](ctx)
    manifest_path = spec.out_dir / "manifest.json"
    manifest = {
        "artifact": f"deit {__version__}",
        "scenario": spec.name,
        "config": str(spec.config_path),
        "config_sha256": _sha256(spec.config_path),
        "overrides": list(spec.overrides),
        "outputs": {out.name: _sha256(out) for out in sorted(outputs)},
    }
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                             encoding="utf-8")
    return ScenarioReport(outputs=outputs, manifest=manifest_path)
