"""Command-line interface: scenario dispatch, determinism, exit codes."""

import json

import numpy as np
import pytest

from deit.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main
from deit.scenarios import ScenarioSpec, apply_overrides
from conftest import CONFIG_PATH, read_csv

FAST_MATCH = [
    "--set", "match.nodes=64",
    "--set", "match.tolerance=2uW",
]
FAST_SPECTRUM = [
    "--set", "spectrum.points=101",
    "--set", "spectrum.nodes=256",
]


def run(args):
    return main(args)


class TestArguments:
    def test_unknown_scenario_is_usage_error(self, tmp_path, capsys):
        code = run(["does-not-exist", "--config", str(CONFIG_PATH),
                    "--out", str(tmp_path)])
        assert code == EXIT_CONFIG
        assert not list(tmp_path.iterdir())

    def test_missing_config_file(self, tmp_path):
        code = run(["match", "--config", str(tmp_path / "nope.json"),
                    "--out", str(tmp_path / "out")])
        assert code == EXIT_CONFIG

    def test_invalid_config_value(self, tmp_path):
        code = run(["match", "--config", str(CONFIG_PATH),
                    "--out", str(tmp_path),
                    "--set", "params.gamma_e_z=-6MHz"])
        assert code == EXIT_CONFIG

    def test_numerical_failure_exit_code(self, tmp_path):
        # preparing the wrong field produces no crossing: a numerical error,
        # not a config error
        code = run(["match", "--config", str(CONFIG_PATH),
                    "--out", str(tmp_path),
                    "--set", "match.prep_field=z",
                    "--set", "match.nodes=48"] )
        assert code == EXIT_NUMERICAL


class TestMatchScenario:
    def test_single_row_with_crossing(self, tmp_path):
        out = tmp_path / "match"
        code = run(["match", "--config", str(CONFIG_PATH), "--out", str(out)]
                   + FAST_MATCH)
        assert code == EXIT_OK
        rows = read_csv(out / "match.csv")
        p_star = float(rows["p_star_w"])
        assert 0.0 < p_star <= 150e-6
        assert 135e3 / 2 <= float(rows["vg_matched_mps"]) <= 135e3 * 2
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["scenario"] == "match"
        assert "match.csv" in manifest["outputs"]

    def test_rerun_is_byte_identical(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        for out in (out1, out2):
            assert run(["match", "--config", str(CONFIG_PATH),
                        "--out", str(out)] + FAST_MATCH) == EXIT_OK
        assert (out1 / "match.csv").read_bytes() == (out2 / "match.csv").read_bytes()

    def test_override_echoed_in_header(self, tmp_path):
        out = tmp_path / "match"
        assert run(["match", "--config", str(CONFIG_PATH), "--out", str(out)]
                   + FAST_MATCH) == EXIT_OK
        header = (out / "match.csv").read_text()
        assert "# override: match.nodes=64" in header
        assert "# cfg.match.nodes = 64" in header


class TestSpectrumScenario:
    def test_two_transparency_windows(self, tmp_path):
        out = tmp_path / "spec"
        code = run(["spectrum-deit", "--config", str(CONFIG_PATH),
                    "--out", str(out)] + FAST_SPECTRUM)
        assert code == EXIT_OK
        rows = read_csv(out / "spectrum_deit.csv")
        from deit.response import find_window
        for probe, expected_mhz in (("z", 0.0), ("h", 1.0)):
            report = find_window(rows[f"transmission_{probe}"])
            assert report is not None
            at = rows["pump_detuning_hz"][report.peak_index] / 1e6
            assert at == pytest.approx(expected_mhz, abs=0.1)
            assert report.peak_transmission > report.floor_transmission


class TestOverrides:
    def test_dotted_paths(self):
        cfg = {"a": {"b": 1}, "c": 2}
        out = apply_overrides(cfg, ["a.b=5", "c=7", "d.e=hello"])
        assert out["a"]["b"] == 5
        assert out["c"] == 7
        assert out["d"]["e"] == "hello"

    def test_malformed_override(self):
        from deit import ConfigError
        with pytest.raises(ConfigError):
            apply_overrides({}, ["novalue"])

    def test_unknown_scenario_name_rejected_in_spec(self, tmp_path):
        from deit import ConfigError
        with pytest.raises(ConfigError, match="unknown scenario"):
            ScenarioSpec("nope", CONFIG_PATH, tmp_path)


class TestEnhancementScenario:
    def test_sweep_columns_and_unity_start(self, tmp_path):
        out = tmp_path / "enh"
        code = run(["delay-enhancement", "--config", str(CONFIG_PATH),
                    "--out", str(out), "--set", "enhancement.nodes=64",
                    "--set", 'enhancement.powers=["0W","50uW","150uW"]'])
        assert code == EXIT_OK
        rows = read_csv(out / "delay_enhancement.csv")
        assert rows["enhancement_factor"][0] == pytest.approx(1.0, abs=0.02)
        assert np.all(np.diff(rows["enhancement_factor"]) >= -1e-9)
