import math

import numpy as np
import pytest

from haarsphere.datasets import piecewise_constant_signals
from haarsphere.denoise import (
    METHODS,
    NoiseSpec,
    ShrinkageParams,
    add_noise,
    bivariate,
    default_soft_lambda,
    denoise_signal,
    local_soft,
    psnr,
    run_experiment,
    soft_threshold,
    _box_mean,
)
from haarsphere.errors import LevelRangeError
from haarsphere.filterbank import spherical_bank
from haarsphere.signals import SphericalSignal
from haarsphere.transform import FrameletCoefficients, decompose_signal

BANK = spherical_bank()


def make_coeffs(coarse, fine, fill=0.0):
    stacks = tuple(np.full((6, 6 * 4 ** level), fill)
                   for level in range(coarse, fine))
    return FrameletCoefficients(coarse, fine, 6,
                                np.zeros(6 * 4 ** coarse), stacks)


class TestSoft:
    def test_above_threshold(self):
        assert soft_threshold(0.5, 0.2) == pytest.approx(0.3)

    def test_below_threshold(self):
        assert soft_threshold(-0.1, 0.2) == 0.0

    def test_zero_threshold_is_identity(self, rng):
        d = rng.normal(size=50)
        assert np.array_equal(soft_threshold(d, 0.0), d)

    def test_contraction(self, rng):
        d = rng.normal(size=200)
        e = rng.normal(size=200)
        lam = 0.7
        assert np.all(np.abs(soft_threshold(d, lam)) <= np.abs(d))
        assert np.all(np.abs(soft_threshold(d, lam) - soft_threshold(e, lam))
                      <= np.abs(d - e) + 1e-15)

    def test_default_lambda(self):
        assert default_soft_lambda(0.1, 255.0) == pytest.approx(22.95)
        assert default_soft_lambda(0.0, 123.0) == 0.0
        assert default_soft_lambda(0.5, 1.0) == pytest.approx(0.45)


class TestNoise:
    def test_rate_zero_is_identity(self, rng):
        signal = SphericalSignal(2, rng.normal(size=96), 1.0)
        out = add_noise(signal, NoiseSpec.for_signal(signal, 0.0, 7))
        assert np.array_equal(out.values, signal.values)

    def test_sigma_follows_rate(self):
        signal = SphericalSignal(0, np.full(6, 255.0), 255.0)
        spec = NoiseSpec.for_signal(signal, 0.1, 3)
        assert spec.sigma == pytest.approx(25.5)

    def test_deterministic(self, rng):
        signal = SphericalSignal(2, rng.normal(size=96), 1.0)
        spec = NoiseSpec(0.2, 0.2, seed=99)
        a = add_noise(signal, spec)
        b = add_noise(signal, spec)
        assert np.array_equal(a.values, b.values)

    def test_sample_statistics(self):
        level = 5  # about 6.1e6 draws at level 5 is excessive; use 1e6 via repeats
        signal = SphericalSignal(level, np.zeros(6 * 4 ** level), 100.0)
        spec = NoiseSpec.for_signal(signal, 0.1, 42)
        noise = add_noise(signal, spec).values
        assert noise.size >= 6_000
        draws = np.concatenate([
            add_noise(signal, NoiseSpec(0.1, spec.sigma, seed)).values
            for seed in range(int(np.ceil(1e6 / noise.size)))
        ])
        assert abs(float(draws.mean())) <= 0.01 * spec.sigma
        assert abs(float(draws.std()) - spec.sigma) <= 0.01 * spec.sigma


class TestBoxMean:
    def test_matches_bruteforce_with_clipping(self, rng):
        grids = rng.normal(size=(6, 8, 8))
        half = 2
        fast = _box_mean(grids, half)
        for face in range(6):
            for r in range(8):
                for c in range(8):
                    window = grids[face,
                                   max(r - half, 0):min(r + half + 1, 8),
                                   max(c - half, 0):min(c + half + 1, 8)]
                    assert fast[face, r, c] == pytest.approx(window.mean(),
                                                             abs=1e-12)


class TestLocalSoft:
    def test_zero_highpass_stays_zero(self):
        coeffs = make_coeffs(1, 3, fill=0.0)
        out = local_soft(coeffs, sigma=5.0, params=ShrinkageParams("localsoft"))
        for planes in out.highpass:
            assert np.max(np.abs(planes)) == 0.0

    def test_uniform_plane_closed_form(self):
        sigma, r = 2.0, 0.3
        for magnitude in (10.0, 100.0, 1000.0):
            coeffs = make_coeffs(2, 3, fill=magnitude)
            out = local_soft(coeffs, sigma, ShrinkageParams("localsoft", r=r))
            local_sd = math.sqrt(magnitude ** 2 - sigma ** 2)
            expected = magnitude - r * sigma ** 2 / local_sd
            assert np.allclose(out.highpass[0], expected, atol=1e-10)
        # shrink amount vanishes as the plane magnitude grows
        shrink = [
            magnitude - float(local_soft(
                make_coeffs(2, 3, fill=magnitude), sigma,
                ShrinkageParams("localsoft", r=r)).highpass[0][0, 0])
            for magnitude in (10.0, 100.0, 1000.0)
        ]
        assert shrink[0] > shrink[1] > shrink[2] > 0.0

    def test_kill_rule_below_noise_floor(self):
        coeffs = make_coeffs(2, 3, fill=1.0)
        out = local_soft(coeffs, sigma=10.0, params=ShrinkageParams("localsoft"))
        assert np.max(np.abs(out.highpass[0])) == 0.0

    def test_lowpass_untouched(self, rng):
        signal = SphericalSignal(3, rng.normal(size=6 * 64), 1.0)
        coeffs = decompose_signal(signal, BANK, 1)
        for rule in (lambda c: local_soft(c, 0.5, ShrinkageParams("localsoft")),
                     lambda c: bivariate(c, 0.5, ShrinkageParams("bivariate"))):
            out = rule(coeffs)
            assert np.array_equal(out.lowpass, coeffs.lowpass)


class TestBivariate:
    def test_no_parent_matches_local_soft(self, rng):
        # single decomposition level: the only highpass level has no
        # parent, so both rules coincide
        signal = SphericalSignal(3, rng.normal(size=6 * 64) * 10, 10.0)
        coeffs = decompose_signal(signal, BANK, 2)
        sigma = 1.0
        params = ShrinkageParams("bivariate")
        a = bivariate(coeffs, sigma, params)
        b = local_soft(coeffs, sigma, params)
        assert np.allclose(a.highpass[0], b.highpass[0], atol=1e-12)

    def test_equal_parent_halves_threshold_power(self):
        # uniform planes at two levels with equal values: the threshold
        # divides by sqrt(2)
        magnitude, sigma, r = 100.0, 2.0, 0.3
        coeffs = make_coeffs(1, 3, fill=magnitude)
        out = bivariate(coeffs, sigma, ShrinkageParams("bivariate", r=r))
        local_sd = math.sqrt(magnitude ** 2 - sigma ** 2)
        lam_ls = r * sigma ** 2 / local_sd
        # coarsest level: no parent
        assert np.allclose(out.highpass[0], magnitude - lam_ls, atol=1e-10)
        # finer level: parent equals child
        assert np.allclose(out.highpass[1], magnitude - lam_ls / math.sqrt(2.0),
                           atol=1e-10)

    def test_zero_child_stays_zero(self):
        coeffs = make_coeffs(1, 3, fill=0.0)
        stacks = tuple(p.copy() for p in coeffs.highpass)
        stacks[0][:, :] = 50.0  # parents large, children zero
        coeffs = FrameletCoefficients(1, 3, 6, coeffs.lowpass, stacks)
        out = bivariate(coeffs, sigma=1.0, params=ShrinkageParams("bivariate"))
        assert np.max(np.abs(out.highpass[1])) == 0.0


class TestPsnr:
    def test_identical_is_infinite(self, rng):
        signal = SphericalSignal(2, rng.normal(size=96), 3.0)
        assert psnr(signal, signal) == math.inf

    def test_peak_error_is_zero_db(self):
        ref = SphericalSignal(1, np.zeros(24), 255.0)
        est = SphericalSignal(1, np.full(24, 255.0), 255.0)
        assert psnr(ref, est) == pytest.approx(0.0, abs=1e-12)

    def test_matches_reported_first_rate(self):
        ref = SphericalSignal(1, np.zeros(24), 255.0)
        est = SphericalSignal(1, np.full(24, 12.75), 1.0)
        assert psnr(ref, est) == pytest.approx(26.02, abs=0.005)

    def test_level_mismatch(self, rng):
        a = SphericalSignal(1, np.zeros(24), 1.0)
        b = SphericalSignal(2, np.zeros(96), 1.0)
        with pytest.raises(LevelRangeError):
            psnr(a, b)


class TestDenoiseSignal:
    def test_improves_piecewise_constant(self):
        clean = piecewise_constant_signals(3, level=5, coarse=2, seed=5)
        for method in METHODS:
            befores, afters = [], []
            for i, signal in enumerate(clean):
                noisy = add_noise(signal, NoiseSpec.for_signal(signal, 0.2, i))
                restored = denoise_signal(noisy, method, 0.2, levels=3)
                befores.append(psnr(signal, noisy))
                afters.append(psnr(signal, restored))
            assert np.mean(afters) > np.mean(befores) + 3.0, method

    def test_bivariate_at_least_soft_at_rate_point_two(self):
        clean = piecewise_constant_signals(4, level=5, coarse=2, seed=11)
        report = run_experiment(clean, rates=[0.2],
                                methods=["soft", "bivariate"], levels=3,
                                seed=3)
        assert report.cell(0.2, "bivariate").after_mean >= \
            report.cell(0.2, "soft").after_mean


class TestExperiment:
    def test_report_deterministic(self):
        clean = piecewise_constant_signals(2, level=4, coarse=2, seed=1)
        a = run_experiment(clean, [0.1, 0.5], list(METHODS), 2, seed=123,
                           dataset_id="suite")
        b = run_experiment(clean, [0.1, 0.5], list(METHODS), 2, seed=123,
                           dataset_id="suite")
        assert a.to_json() == b.to_json()

    def test_prenoise_psnr_matches_rate(self):
        clean = piecewise_constant_signals(6, level=5, coarse=2, seed=2)
        report = run_experiment(clean, [0.05], ["soft"], 2, seed=9)
        assert report.cell(0.05, "soft").before_mean == pytest.approx(26.02,
                                                                      abs=0.5)

    def test_method_order_preserved(self):
        clean = piecewise_constant_signals(1, level=4, coarse=2, seed=3)
        report = run_experiment(clean, [0.1], list(METHODS), 2, seed=4)
        assert [c.method for c in report.cells] == list(METHODS)

    def test_empty_rates_gives_empty_cells(self):
        clean = piecewise_constant_signals(1, level=4, coarse=2, seed=3)
        report = run_experiment(clean, [], ["soft"], 2, seed=4)
        assert report.cells == ()

    def test_json_schema(self):
        import json

        clean = piecewise_constant_signals(1, level=4, coarse=2, seed=3)
        report = run_experiment(clean, [0.1], ["soft"], 2, seed=4,
                                dataset_id="abc")
        payload = json.loads(report.to_json())
        assert payload["dataset"] == "abc"
        assert payload["seed"] == 4
        cell = payload["cells"][0]
        assert set(cell) == {"rate", "method", "psnr_before_mean",
                             "psnr_after_mean", "improvement", "variance"}
