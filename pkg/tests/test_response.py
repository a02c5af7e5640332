"""Weak-probe lineshapes, Doppler averaging, transmission, contrast, delays."""

import math

import numpy as np
import pytest

from deit import (
    BackgroundConfig,
    DriveConfig,
    LinearityError,
    ParameterError,
    doppler_average,
    export_spectrum_csv,
    find_window,
    group_delay,
    group_velocity,
    lineshape_spectrum,
    transmission,
    transparency_contrast,
    weak_probe_response,
)
from deit.response import (
    LineshapeSpectrum,
    SPEED_OF_LIGHT,
    delay_spectrum_grid,
    signal_group_delay,
)
from deit import rabi_from_power
from conftest import TWO_PI, random_valid_setup, reference_params, rho_in

Z, H = 1, 2


def lambda_lineshape(ge, omega_p, gamma_gp, delta_probe, delta_two_photon,
                     extra=0.0):
    """Closed-form weak-probe response of a three-level Lambda system, solved
    by hand from the two coupled first-order coherence equations."""
    raman = (abs(omega_p) ** 2 / 4) / (gamma_gp + 1j * delta_two_photon)
    return (ge / 2) / (ge / 2 + extra + 1j * delta_probe + raman)


class TestWeakProbeResponse:
    def test_bare_two_level_normalization(self):
        p = reference_params(exchange_G=0.0)
        bg = BackgroundConfig(DriveConfig(), p)
        s = weak_probe_response(bg, "z", 0.0, rho0=rho_in(Z))
        assert s == pytest.approx(1.0 + 0.0j, abs=1e-6)

    def test_bare_two_level_is_analytic_lorentzian(self):
        # Kramers-Kronig sanity: Re and Im form the exact Lorentzian pair
        p = reference_params(exchange_G=0.0)
        bg = BackgroundConfig(DriveConfig(), p)
        ge = p.gamma_e_total
        for delta in np.linspace(-3 * ge, 3 * ge, 13):
            s = weak_probe_response(bg, "z", float(delta), rho0=rho_in(Z))
            expected = (ge / 2) / (ge / 2 + 1j * delta)
            assert s == pytest.approx(expected, abs=1e-8)

    def test_ideal_lambda_eit_is_fully_transparent(self):
        p = reference_params(gamma_zp=0.0, gamma_hz=0.0, exchange_G=0.0)
        bg = BackgroundConfig(DriveConfig(omega_p=3e7), p)
        s = weak_probe_response(bg, "z", 0.0, rho0=rho_in(Z))
        assert abs(s.real) <= 1e-8

    def test_lambda_closed_form_across_window(self):
        p = reference_params(exchange_G=0.0, gamma_hz=0.0)
        omega_p = 3.5e7 * np.exp(0.3j)
        delta_p = TWO_PI * 0.7e6
        bg = BackgroundConfig(DriveConfig(omega_p=omega_p, delta_p=delta_p), p)
        ge = p.gamma_e_total
        for delta in np.linspace(-TWO_PI * 2e6, TWO_PI * 2e6, 41):
            s = weak_probe_response(bg, "z", float(delta), rho0=rho_in(Z))
            ref = lambda_lineshape(ge, omega_p, p.gamma_zp, delta + delta_p, delta)
            assert abs(s - ref) <= 1e-6 * abs(ref)

    def test_perturbative_and_finite_probe_agree(self):
        rng = np.random.default_rng(41)
        checked = 0
        while checked < 50:
            p, d = random_valid_setup(rng)
            probe = "z" if checked % 2 else "h"
            d = d.with_field(probe, omega=0.0)
            bg = BackgroundConfig(d, p)
            delta = float(rng.normal() * p.gamma_e_total)
            s_pert = weak_probe_response(bg, probe, delta)
            s_fin = weak_probe_response(bg, probe, delta, method="finite")
            assert abs(s_pert - s_fin) <= 5e-3 * max(abs(s_pert), abs(s_fin))
            checked += 1

    def test_linearity_check_trips_on_strong_probe(self, params, pump_drive):
        # a probe at a third of the pump is far outside the linear regime
        p = reference_params(doppler_fwhm=0.0)
        bg = BackgroundConfig(pump_drive, p)
        with pytest.raises(LinearityError):
            weak_probe_response(bg, "z", 0.0, method="finite", probe_scale=0.2)

    def test_derivative_probe_requires_matching_detuning(self, params, pump_drive):
        bg = BackgroundConfig(pump_drive.with_field("z", omega=1e6, delta=0.0), params)
        with pytest.raises(ParameterError, match="derivative"):
            weak_probe_response(bg, "z", TWO_PI * 1e5)

    def test_degenerate_background_raises(self):
        p = reference_params(exchange_G=0.0)
        bg = BackgroundConfig(DriveConfig(omega_p=3e7), p)
        with pytest.raises(Exception, match="not unique"):
            weak_probe_response(bg, "z", 0.0)


class TestDopplerAverage:
    def test_constant_function_is_exact(self):
        c0 = 0.37 - 0.11j
        got = doppler_average(lambda v: c0, fwhm_hz=500e6, nodes=64)
        assert got == pytest.approx(c0, rel=1e-12)

    def test_zero_width_returns_center_value(self):
        f = lambda v: 1.0 / (1.0 + 1j * v)  # noqa: E731
        assert doppler_average(f, 0.0, nodes=64) == pytest.approx(f(0.0), abs=1e-10)

    def test_voigt_against_dense_trapezoid(self):
        # narrow complex Lorentzian against the Gaussian: line-centre value
        # must match brute-force integration
        sigma = TWO_PI * 500e6 / (2 * math.sqrt(2 * math.log(2)))
        half_width = sigma / 10.0
        f = lambda v: (half_width) / (half_width + 1j * v)  # noqa: E731
        got = doppler_average(f, 500e6, nodes=8192)
        v = np.linspace(-9 * sigma, 9 * sigma, 2_000_001)
        weights = np.exp(-0.5 * (v / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))
        ref = np.trapezoid(f(v) * weights, v)
        assert abs(got - ref) <= 1e-6 * abs(ref)

    def test_node_count_validation(self):
        with pytest.raises(ParameterError):
            doppler_average(lambda v: 1.0, 500e6, nodes=4)

    def test_non_finite_sample_reported(self):
        f = lambda v: float("nan")  # noqa: E731
        with pytest.raises(Exception, match="velocity node"):
            doppler_average(f, 500e6, nodes=16)


class TestLineshapeSpectrum:
    def test_grid_validation(self):
        with pytest.raises(ParameterError, match="increasing"):
            LineshapeSpectrum("z", np.array([0.0, -1.0, 1.0]), np.zeros(3), False)
        with pytest.raises(ParameterError, match="uniform"):
            LineshapeSpectrum("z", np.array([0.0, 1.0, 3.0]), np.zeros(3), False)

    def test_matches_scalar_evaluator(self, params, pump_drive):
        bg = BackgroundConfig(pump_drive, params)
        grid = np.linspace(-TWO_PI * 1e6, TWO_PI * 1e6, 9)
        spec = lineshape_spectrum(bg, "h", grid)
        for i in (0, 4, 8):
            s_scalar = weak_probe_response(bg, "h", float(grid[i]))
            assert spec.s[i] == pytest.approx(s_scalar, rel=1e-10)

    def test_od_independence(self, params, pump_drive):
        bg = BackgroundConfig(pump_drive, params)
        grid = np.linspace(-TWO_PI * 1e6, TWO_PI * 1e6, 21)
        spec = lineshape_spectrum(bg, "h", grid)
        p2 = params.with_updates(optical_depth_z=1.0, optical_depth_h=2.0)
        spec2 = lineshape_spectrum(BackgroundConfig(pump_drive, p2), "h", grid)
        assert np.abs(spec.s - spec2.s).max() == 0.0

    def test_mutual_signal_dark_state_dip(self, params, pump_drive):
        # with the other signal CW in the background, an extra narrow
        # transparency spike appears at the mutual two-photon resonance
        p = reference_params(doppler_fwhm=0.0)
        delta_h = TWO_PI * 0.3e6
        bgd = pump_drive.with_field("h", omega=1.5e6, delta=delta_h)
        bg = BackgroundConfig(bgd, p)
        grid = np.linspace(delta_h - TWO_PI * 40e3, delta_h + TWO_PI * 40e3, 161)
        spec = lineshape_spectrum(bg, "z", grid)
        absorption = spec.s.real
        i0 = np.argmin(np.abs(grid - delta_h))
        # an interior absorption minimum appears within a few kHz of the
        # mutual resonance (light-shifted by the other signal), below the
        # absorption one feature-width out on both sides
        win = 20  # +- 10 kHz
        i_min = i0 - win + int(np.argmin(absorption[i0 - win:i0 + win]))
        assert abs(grid[i_min] - delta_h) < TWO_PI * 10e3
        # genuinely a dip: flanked by higher absorption on both sides
        left_max = absorption[i0 - 2 * win:i_min].max()
        right_max = absorption[i_min + 1:i0 + 3 * win].max()
        assert left_max > absorption[i_min] + 0.004
        assert right_max > absorption[i_min] + 0.004

    def test_doppler_quadrature_converged_in_window(self, params, pump_drive):
        # inside the high-transparency core of the window the response is
        # dominated by the velocity-independent two-photon structure, and a
        # 64-node rule is already converged; the absorbing wings need the
        # denser rules the spectrum scenarios use
        bg = BackgroundConfig(pump_drive, params)
        grid = np.linspace(-TWO_PI * 40e3, TWO_PI * 40e3, 41)
        s64 = lineshape_spectrum(bg, "h", grid, doppler=True, nodes=64).s
        s128 = lineshape_spectrum(bg, "h", grid, doppler=True, nodes=128).s
        T = transmission(lineshape_spectrum(bg, "h", grid, doppler=True,
                                            nodes=1024), params.optical_depth_h)
        prominence = T.max() - T.min()
        core = T >= T.max() - 0.1 * prominence
        assert core.sum() >= 7
        rel = np.abs(s64 - s128)[core] / np.abs(s128)[core]
        assert rel.max() <= 1e-4

    def test_pump_scan_shows_both_windows(self, params, pump_drive):
        kappa = params.rabi_calibration_kappa
        delta_h = TWO_PI * 1e6
        for probe, other, delta_pr in (("z", "h", 0.0), ("h", "z", delta_h)):
            drives = DriveConfig(omega_p=pump_drive.omega_p, delta_h=delta_h)
            drives = drives.with_field(other, omega=rabi_from_power(50e-6, kappa))
            bg = BackgroundConfig(drives, params)
            dgrid = delta_pr - np.linspace(TWO_PI * 2e6, -TWO_PI * 2e6, 161)
            spec = lineshape_spectrum(bg, probe, dgrid, doppler=True, nodes=256,
                                      scan="pump")
            od = params.optical_depth_z if probe == "z" else params.optical_depth_h
            report = find_window(transmission(spec, od))
            assert report is not None
            # window sits at the probe's two-photon resonance with the pump
            assert abs(dgrid[report.peak_index]) <= TWO_PI * 50e3


class TestTransmission:
    def test_zero_od_is_unity(self, params, pump_drive):
        bg = BackgroundConfig(pump_drive, params)
        grid = np.linspace(-TWO_PI * 1e6, TWO_PI * 1e6, 11)
        spec = lineshape_spectrum(bg, "h", grid)
        assert np.all(transmission(spec, 0.0) == 1.0)

    def test_bare_line_centre_at_unit_od(self):
        p = reference_params(exchange_G=0.0)
        bg = BackgroundConfig(DriveConfig(), p)
        grid = delay_spectrum_grid(0.0, TWO_PI * 1e3)
        spec = lineshape_spectrum(bg, "z", grid, rho0=rho_in(Z))
        T = transmission(spec, 1.0)
        assert T[len(T) // 2] == pytest.approx(math.exp(-1.0), abs=1e-6)

    def test_ideal_window_is_fully_transparent_at_any_od(self):
        p = reference_params(gamma_zp=0.0, gamma_hz=0.0, exchange_G=0.0)
        bg = BackgroundConfig(DriveConfig(omega_p=3e7), p)
        grid = delay_spectrum_grid(0.0, TWO_PI * 100.0)
        spec = lineshape_spectrum(bg, "z", grid, rho0=rho_in(Z))
        for od in (1.0, 30.0, 300.0):
            T = transmission(spec, od)
            assert T[len(T) // 2] == pytest.approx(1.0, abs=1e-6)

    def test_negative_od_rejected(self, params, pump_drive):
        bg = BackgroundConfig(pump_drive, params)
        spec = lineshape_spectrum(bg, "h", delay_spectrum_grid(0.0, 1e3))
        with pytest.raises(ParameterError):
            transmission(spec, -1.0)


class TestTransparencyContrast:
    def test_flat_spectrum_has_no_window(self):
        assert transparency_contrast(np.ones(101)) is None

    def test_synthetic_peak_height_recovered(self):
        # flat-bottomed absorption dip with an inserted narrow peak of known
        # height: the reported contrast is exactly that height
        delta = np.linspace(-1.0, 1.0, 2001)
        dip = 1.0 - 0.8 * np.exp(-((delta / 0.6) ** 8))
        h = 0.33
        T = dip + h * np.exp(-((delta / 0.02) ** 2))
        c = transparency_contrast(T)
        assert c == pytest.approx(h, abs=1e-4)

    def test_zeeman_power_raises_hyperfine_contrast(self):
        # compact no-Doppler rendition of the mutual-enhancement effect
        p = reference_params(doppler_fwhm=0.0, optical_depth_h=2.0)
        kappa = p.rabi_calibration_kappa
        pump = DriveConfig(omega_p=rabi_from_power(2.5e-3, kappa))
        grid = np.linspace(-TWO_PI * 2e6, TWO_PI * 2e6, 201)
        contrasts = []
        for power in (5e-6, 30e-6, 80e-6, 150e-6):
            bg = BackgroundConfig(
                pump.with_field("z", omega=rabi_from_power(power, kappa)), p)
            T = transmission(lineshape_spectrum(bg, "h", grid), p.optical_depth_h)
            contrasts.append(transparency_contrast(T))
        assert all(c is not None for c in contrasts)
        assert all(b > a for a, b in zip(contrasts, contrasts[1:]))


class TestGroupDelayAndVelocity:
    def test_zero_od_zero_delay(self, params, pump_drive):
        bg = BackgroundConfig(pump_drive, params)
        spec = lineshape_spectrum(bg, "h", delay_spectrum_grid(0.0, TWO_PI * 1e3))
        assert group_delay(spec, 0.0, 0.0) == 0.0

    def test_empty_medium_lineshape_zero_delay(self):
        grid = delay_spectrum_grid(0.0, 1e3)
        spec = LineshapeSpectrum("z", grid, np.zeros_like(grid, dtype=complex), False)
        assert group_delay(spec, 10.0, 0.0) == 0.0

    def test_matches_analytic_lambda_slope(self):
        p = reference_params(exchange_G=0.0, gamma_hz=0.0, doppler_fwhm=0.0)
        omega_p = 3e7
        od = 8.0
        bg = BackgroundConfig(DriveConfig(omega_p=omega_p), p)
        tau = signal_group_delay(bg, "z", od, step=TWO_PI * 500.0, rho0=rho_in(Z))
        ge = p.gamma_e_total
        h = TWO_PI * 50.0
        im = [lambda_lineshape(ge, omega_p, p.gamma_zp, s, s).imag
              for s in (-h, h)]
        tau_ref = 0.5 * od * (im[1] - im[0]) / (2 * h)
        assert tau == pytest.approx(tau_ref, rel=1e-2)
        assert tau > 0  # subluminal inside the window

    def test_edge_point_rejected(self, params, pump_drive):
        bg = BackgroundConfig(pump_drive, params)
        grid = delay_spectrum_grid(0.0, TWO_PI * 1e3)
        spec = lineshape_spectrum(bg, "h", grid)
        with pytest.raises(ParameterError, match="interior"):
            group_delay(spec, 1.0, float(grid[0]))

    def test_velocity_of_zero_delay_is_c(self):
        assert group_velocity(0.0, 0.12) == pytest.approx(SPEED_OF_LIGHT)

    def test_reference_cell_at_135_km_per_s(self):
        # arithmetic inversion: the 12 cm cell at 135 km/s needs ~0.888 us
        tau = 0.12 / 135e3 - 0.12 / SPEED_OF_LIGHT
        assert group_velocity(tau, 0.12) == pytest.approx(135e3, rel=1e-12)
        assert tau == pytest.approx(0.888e-6, rel=2e-3)

    def test_doubling_delay_halves_velocity(self):
        tau = 1e-6
        v1 = group_velocity(tau, 0.12)
        v2 = group_velocity(2 * tau, 0.12)
        assert v2 == pytest.approx(v1 / 2, rel=1e-3)

    def test_pathological_delay_rejected(self):
        with pytest.raises(ParameterError):
            group_velocity(-1.0, 0.12)


class TestScaleInvarianceAndExchangeRole:
    """The bright/dark decomposition: with no z-h decoherence the response
    depends only on the signal amplitude ratio; finite exchange breaks that
    at low intensities."""

    BASE_Z = TWO_PI * 1.0e6
    BASE_H = TWO_PI * 0.7e6

    def frozen_lineshape(self, p, scale):
        pump = DriveConfig(omega_p=4e7)
        prep = pump.with_field("z", omega=scale * self.BASE_Z) \
                   .with_field("h", omega=scale * self.BASE_H)
        bg = BackgroundConfig(pump, p)
        grid = np.linspace(-TWO_PI * 0.5e6, TWO_PI * 0.5e6, 41)
        return lineshape_spectrum(bg, "z", grid, initial_drives=prep).s

    def test_invariant_without_exchange(self):
        p = reference_params(exchange_G=0.0, gamma_hz=0.0)
        ref = self.frozen_lineshape(p, 1.0)
        for scale in (0.3, 3.0):
            s = self.frozen_lineshape(p, scale)
            assert np.abs(s - ref).max() <= 1e-8 * np.abs(ref).max()

    def test_exchange_breaks_scaling(self):
        p = reference_params()  # G = 2*pi*50 Hz
        ref = self.frozen_lineshape(p, 1.0)
        s = self.frozen_lineshape(p, 0.3)
        change = np.abs(s - ref).max() / np.abs(ref).max()
        assert change > 1e-3


class TestSpectrumExport:
    def test_columns_and_determinism(self, tmp_path, params, pump_drive):
        bg = BackgroundConfig(pump_drive, params)
        grid = np.linspace(-TWO_PI * 1e5, TWO_PI * 1e5, 11)
        spec = lineshape_spectrum(bg, "h", grid)
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        export_spectrum_csv(spec, 41.0, out1, echo={"pump_power": "2.5mW"})
        export_spectrum_csv(spec, 41.0, out2, echo={"pump_power": "2.5mW"})
        assert out1.read_bytes() == out2.read_bytes()
        lines = out1.read_text().splitlines()
        header = [l for l in lines if not l.startswith("#")][0]
        assert header == "delta_hz,re_s,im_s,transmission"
        assert any("pump_power = 2.5mW" in l for l in lines)
        first = [l for l in lines if not l.startswith("#")][1].split(",")
        assert float(first[0]) == pytest.approx(grid[0] / TWO_PI)
