"""Figure scripts: schema validation, determinism, loud failures."""

import sys
from pathlib import Path

import numpy as np
import pytest

FIGURES_DIR = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(FIGURES_DIR))

import figlib  # noqa: E402
import fig2b  # noqa: E402
import fig3  # noqa: E402
import fig4b  # noqa: E402
import fig4c  # noqa: E402
import fig5  # noqa: E402


def write_csv(path: Path, columns: list[str], rows: list[tuple]) -> Path:
    lines = ["# artifact = synthetic fixture", ",".join(columns)]
    for row in rows:
        lines.append(",".join(repr(float(c)) if isinstance(c, (int, float))
                              else str(c) for c in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def spectrum_csv(tmp_path):
    cols = ["pump_detuning_hz", "re_s_z", "im_s_z", "transmission_z",
            "re_s_h", "im_s_h", "transmission_h"]
    x = np.linspace(-2e6, 2e6, 41)
    t_z = 0.4 + 0.3 * np.exp(-((x - 0.0) / 5e4) ** 2)
    t_h = 0.1 + 0.7 * np.exp(-((x - 1e6) / 5e4) ** 2)
    rows = [(xi, 0.0, 0.0, tz, 0.0, 0.0, th) for xi, tz, th in zip(x, t_z, t_h)]
    return write_csv(tmp_path / "spectrum_deit.csv", cols, rows)


@pytest.fixture
def traces_csv(tmp_path):
    cols = ["t_s", "re_in_z", "im_in_z", "re_in_h", "im_in_h",
            "re_out_z", "im_out_z", "re_out_h", "im_out_h", "pump_rabi"]
    t = np.linspace(0, 10e-6, 101)
    pulse = np.exp(-((t - 4e-6) / 1e-6) ** 2)
    late = np.exp(-((t - 4.4e-6) / 1e-6) ** 2)
    rows = [(ti, p, 0.0, p, 0.0, 0.7 * q, 0.0, 0.6 * q, 0.0, 1e7)
            for ti, p, q in zip(t, pulse, late)]
    return write_csv(tmp_path / "detector_traces.csv", cols, rows)


@pytest.fixture
def storage_csv(tmp_path):
    cols = ["t_s", "abs_in_z", "abs_in_h", "re_out_z", "im_out_z",
            "re_out_h", "im_out_h", "pump_rabi"]
    t = np.linspace(0, 22e-6, 221)
    pulse = np.exp(-((t - 3e-6) / 1e-6) ** 2)
    retrieved = 0.1 * np.exp(-((t - 16e-6) / 1e-6) ** 2)
    pump = np.where((t > 5e-6) & (t < 15e-6), 0.0, 1e7)
    rows = [(ti, p, p, 0.4 * p + r, 0.0, 0.5 * p + r, 0.0, g)
            for ti, p, r, g in zip(t, pulse, retrieved, pump)]
    return write_csv(tmp_path / "storage_traces.csv", cols, rows)


@pytest.fixture
def groupvel_csv(tmp_path):
    cols = ["power_w", "vg_z_mps", "vg_h_mps", "tau_z_s", "tau_h_s"]
    powers = np.linspace(0, 150e-6, 11)
    vg_z = 350e3 - 1.8e9 * powers
    vg_h = 70e3 + 1.4e9 * powers
    rows = [(p, z, h, 0.0, 0.0) for p, z, h in zip(powers, vg_z, vg_h)]
    return write_csv(tmp_path / "groupvel_vs_power.csv", cols, rows)


@pytest.fixture
def contrast_csvs(tmp_path):
    powers = [5e-6, 50e-6, 150e-6]
    delta = np.linspace(-2e6, 2e6, 41)
    spectra_rows = []
    summary_rows = []
    for k, p in enumerate(powers):
        depth = 0.3 + 0.2 * k
        T = 1 - depth + (0.3 + 0.1 * k) * np.exp(-((delta) / 5e4) ** 2)
        spectra_rows += [(p, d, t) for d, t in zip(delta, T)]
        summary_rows.append((p, 0.3 + 0.1 * k, 1 - depth + 0.3, 1 - depth))
    spectra = write_csv(tmp_path / "contrast_spectra.csv",
                        ["power_w", "delta_hz", "transmission"], spectra_rows)
    summary = write_csv(tmp_path / "contrast_vs_power.csv",
                        ["power_w", "contrast", "peak_transmission",
                         "floor_transmission"], summary_rows)
    return spectra, summary


class TestRendering:
    def test_fig2b_renders_and_is_deterministic(self, spectrum_csv, tmp_path):
        out1 = fig2b.render(spectrum_csv, tmp_path / "a.png")
        out2 = fig2b.render(spectrum_csv, tmp_path / "b.png")
        assert out1.exists() and out1.stat().st_size > 1000
        assert out1.read_bytes() == out2.read_bytes()

    def test_fig4b_renders(self, traces_csv, tmp_path):
        out = fig4b.render(traces_csv, tmp_path / "fig4b.png")
        assert out.exists()

    def test_fig4c_crossing_annotated(self, groupvel_csv, tmp_path):
        rows = figlib.load_table(groupvel_csv, fig4c.REQUIRED)
        cross = fig4c.crossing_point(rows["power_w"], rows["vg_z_mps"],
                                     rows["vg_h_mps"])
        assert cross is not None
        p_star, v_star = cross
        assert 0 < p_star < 150e-6
        out = fig4c.render(groupvel_csv, tmp_path / "fig4c.png")
        assert out.exists()

    def test_fig5_renders(self, storage_csv, tmp_path):
        out = fig5.render(storage_csv, tmp_path / "fig5.png")
        assert out.exists()

    def test_fig3_renders(self, contrast_csvs, tmp_path):
        spectra, summary = contrast_csvs
        out = fig3.render(spectra, summary, tmp_path / "fig3.png")
        assert out.exists()

    def test_inputs_not_mutated(self, spectrum_csv, tmp_path):
        before = spectrum_csv.read_bytes()
        fig2b.render(spectrum_csv, tmp_path / "x.png")
        assert spectrum_csv.read_bytes() == before

    def test_main_entry_points(self, spectrum_csv, tmp_path, capsys):
        code = fig2b.main(["--input", str(spectrum_csv),
                           "--out", str(tmp_path / "cli.png")])
        assert code == 0
        assert (tmp_path / "cli.png").exists()


class TestFailures:
    def test_missing_column_named(self, tmp_path):
        bad = write_csv(tmp_path / "bad.csv",
                        ["pump_detuning_hz", "transmission_z"],
                        [(0.0, 1.0), (1.0, 1.0)])
        out = tmp_path / "never.png"
        with pytest.raises(figlib.SchemaError, match="transmission_h"):
            fig2b.render(bad, out)
        assert not out.exists()

    def test_empty_dataset_rejected(self, tmp_path):
        empty = write_csv(tmp_path / "empty.csv",
                          ["pump_detuning_hz", "re_s_z", "im_s_z",
                           "transmission_z", "re_s_h", "im_s_h",
                           "transmission_h"], [])
        out = tmp_path / "never.png"
        with pytest.raises(figlib.EmptyDatasetError):
            fig2b.render(empty, out)
        assert not out.exists()

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            fig4c.render(tmp_path / "nope.csv", tmp_path / "never.png")


class TestRealScenarioOutputs:
    """Exercise the real CLI outputs end to end when the simulator is
    importable (it is, in this repository)."""

    def test_fig4c_from_generated_scenario(self, tmp_path):
        deit = pytest.importorskip("deit")
        from deit.scenarios import ScenarioSpec, run_scenario
        config = FIGURES_DIR.parent / "configs" / "reference.json"
        out_dir = tmp_path / "gv"
        run_scenario(ScenarioSpec(
            "groupvel-vs-power", config, out_dir,
            overrides=('groupvel.nodes=64',
                       'groupvel.powers=["0W","20uW","45uW","80uW","150uW"]')))
        png = fig4c.render(out_dir / "groupvel_vs_power.csv", tmp_path / "f.png")
        assert png.exists()
