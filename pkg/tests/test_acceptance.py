"""
Monte Carlo acceptance runs on the shipped presets

These take minutes; deselect with -m "not slow".
"""

import json
import logging
import math

import numpy as np
import pytest

from flm_threshold.analysis.basis import CoefficientVector, WeightSequence, weighted_norm_sq
from flm_threshold.analysis.estimator import (EstimateResult, empirical_moments, oracle_galerkin,
                                              population_inverse_norm, threshold_estimate)
from flm_threshold.analysis.model import (LinkPattern, ProcessSpec, Sample, SlopeSpec, assouad_checks,
                                          assouad_slope, make_slope)
from flm_threshold.analysis.rates import m_star
from flm_threshold.analysis.risk import prediction_risk, prediction_risk_monte_carlo, run_experiment
from flm_threshold.cli import EXIT_OK, main
from flm_threshold.cli.commands import _sign_vectors
from flm_threshold.core.config_manager import ConfigurationManager, process_spec, rate_case

pytestmark = pytest.mark.slow

PRESETS = [p['name'] for p in ConfigurationManager().list_presets()]


def _gaussian_elimination(A, b):
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    size = b.size
    for col in range(size):
        pivot = col + int(np.argmax(np.abs(A[col:, col])))
        A[[col, pivot]] = A[[pivot, col]]
        b[[col, pivot]] = b[[pivot, col]]
        for row in range(col + 1, size):
            factor = A[row, col] / A[col, col]
            A[row, col:] -= factor * A[col, col:]
            b[row] -= factor * b[col]
    out = np.zeros(size)
    for row in range(size - 1, -1, -1):
        out[row] = (b[row] - A[row, row + 1:] @ out[row + 1:]) / A[row, row]
    return out


@pytest.fixture(autouse=True)
def restore_logging():
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    for handler in list(root.handlers):
        if handler not in handlers:
            root.removeHandler(handler)
    root.setLevel(level)


def _rates_verdict(preset, out_dir, *extra):
    code = main(["--log-level", "WARNING", "rates", preset, "--out", str(out_dir), *extra])
    with open(out_dir / f"{preset}_verdict.json", encoding='utf-8') as f:
        return code, json.load(f)


class TestEmpiricalRates:

    def test_polynomial_prediction(self, tmp_path):
        code, verdict = _rates_verdict("poly_p1_a1_prediction", tmp_path)
        assert code == EXIT_OK
        assert verdict['pass'] is True
        assert abs(verdict['fitted_slope'] + 0.8) <= 0.2

    def test_exponential_prediction(self, tmp_path):
        code, verdict = _rates_verdict("exp_a05_prediction", tmp_path)
        assert code == EXIT_OK
        assert abs(verdict['fitted_slope'] + 1.0) <= 0.15

    def test_derivative_ordering(self, tmp_path):
        _, slope_only = _rates_verdict("poly_p2_a1_derivative_s0", tmp_path / "s0")
        _, derivative = _rates_verdict("poly_p2_a1_derivative_s1", tmp_path / "s1")
        assert abs(slope_only['fitted_slope'] + 4.0 / 7.0) <= 0.2
        assert abs(derivative['fitted_slope'] + 2.0 / 7.0) <= 0.2
        assert derivative['fitted_slope'] > slope_only['fitted_slope']


class TestStructuralBounds:

    @pytest.mark.parametrize("d", [1.0, 2.0])
    @pytest.mark.parametrize("p", [1.0, 2.0])
    def test_galerkin_bias_bound(self, d, p):
        J = 256
        decay = WeightSequence.poly_decay(1.0)
        proc = ProcessSpec(decay=decay, truncation=J, d=d, link_pattern=LinkPattern.ALTERNATING)
        beta = make_slope(SlopeSpec(p=p, rho=1.0), J)
        b = WeightSequence.sobolev(p)
        for omega in (decay, WeightSequence.constant()):
            for m in range(1, 65):
                residual = beta - oracle_galerkin(proc.eigenvalues(), beta, m)
                value = b.w(m) / omega.w(m) * weighted_norm_sq(residual, omega)
                assert value <= 10.0 * d ** 4 * (1.0 + 1e-12)

    @pytest.mark.parametrize("preset", PRESETS)
    def test_assouad_inequalities(self, preset):
        manager = ConfigurationManager()
        config = manager.resolve(manager.load(preset))
        case = rate_case(config)
        proc = process_spec(config)
        rho = float(config.slope.rho)
        for n in config.experiment.n_grid:
            bal = m_star(n, case.b(), case.omega(), case.upsilon())
            for theta in _sign_vectors(bal.m_star, config.experiment.master_seed):
                slope = assouad_slope(theta, n, proc.decay, proc.sigma, proc.d, rho,
                                      bal.achieved_delta, proc.truncation)
                check = assouad_checks(slope, bal.m_star, n, case.b(), case.omega(), proc.decay,
                                       proc.sigma, proc.d, rho, bal.achieved_delta, bal.delta_star)
                assert check.noise_ok
                assert check.ellipsoid_ok

    def test_prediction_risk_identity(self, poly_proc, smooth_beta):
        rng = np.random.default_rng(2024)
        for trial in range(5):
            coeffs = smooth_beta.coeffs + 0.2 * rng.standard_normal(16) / np.arange(1, 17)
            est = EstimateResult(beta_hat=CoefficientVector(coeffs), m=16, sigma_min=1.0, omega_held=True)
            exact = prediction_risk(est, smooth_beta, poly_proc)
            mean, stderr = prediction_risk_monte_carlo(est, smooth_beta, poly_proc, draws=100000,
                                                       seed=trial)
            assert abs(mean - exact) <= 3.0 * stderr

    def test_small_instance_oracle(self):
        rng = np.random.default_rng(8)
        compared = 0
        for _ in range(100):
            n = int(rng.integers(1, 4))
            m = int(rng.integers(1, 4))
            sample = Sample(y=rng.standard_normal(n), x=rng.standard_normal((n, 3)))
            est = threshold_estimate(sample, m, math.inf)
            mom = empirical_moments(sample, m)
            if not est.omega_held or est.sigma_min < 1e-4 * np.linalg.norm(mom.gamma_hat, 2):
                continue
            expected = _gaussian_elimination(mom.gamma_hat, mom.g_hat)
            scale = max(1.0, float(np.max(np.abs(expected))))
            np.testing.assert_allclose(est.beta_hat.coeffs[:m], expected, atol=1e-10 * scale,
                                       rtol=1e-10)
            compared += 1
        assert compared > 0

    def test_lowerbound_worst_case(self, tmp_path):
        code = main(["--log-level", "WARNING", "lowerbound", "poly_p1_a1_prediction",
                     "--out", str(tmp_path)])
        assert code == EXIT_OK
        with open(tmp_path / "poly_p1_a1_prediction_lowerbound.json", encoding='utf-8') as f:
            summary = json.load(f)
        assert summary['all_checks_passed'] is True
        assert summary['worst_case_over_delta_star'] >= 0.1


class TestThresholdBehavior:

    def test_threshold_n_holds(self, poly_proc, smooth_beta):
        n = 5000
        m = math.ceil(n ** 0.2)
        report = run_experiment(poly_proc, smooth_beta, n, m, float(n), 0, "prediction", 200, 20240611)
        assert report.omega_frequency >= 0.95

    def test_low_threshold_bites(self, poly_proc, smooth_beta):
        n = 5000
        m = math.ceil(n ** 0.2)
        gamma = 0.5 * population_inverse_norm(poly_proc.eigenvalues(), m)
        report = run_experiment(poly_proc, smooth_beta, n, m, gamma, 0, "prediction", 200, 20240611)
        assert report.omega_frequency <= 0.2


class TestDeterminism:

    @pytest.mark.parametrize("preset", PRESETS)
    def test_rerun_byte_identical(self, preset, tmp_path):
        args = ["-R", "4", "--set", "experiment.n_grid=[200,400,800]"]
        for run in ("first", "second"):
            _rates_verdict(preset, tmp_path / run, *args)
        first = {p.name: p.read_bytes() for p in (tmp_path / "first").iterdir()}
        second = {p.name: p.read_bytes() for p in (tmp_path / "second").iterdir()}
        assert first.keys() == second.keys()
        for name in first:
            if name.endswith(".json"):
                # output.directory differs between the two runs
                a = json.loads(first[name])
                b = json.loads(second[name])
                a['config']['output'].pop('directory')
                b['config']['output'].pop('directory')
                assert a == b
            else:
                assert first[name] == second[name]

    @pytest.mark.parametrize("preset", PRESETS)
    def test_thread_count_does_not_matter(self, preset, tmp_path):
        args = ["-R", "6", "--set", "experiment.n_grid=[200,400,800]"]
        _rates_verdict(preset, tmp_path / "serial", *args, "--workers", "1")
        _rates_verdict(preset, tmp_path / "pool", *args, "--workers", "4")
        for suffix in ("rates.csv", "rates.dat", "rates.gp"):
            serial = (tmp_path / "serial" / f"{preset}_{suffix}").read_bytes()
            pooled = (tmp_path / "pool" / f"{preset}_{suffix}").read_bytes()
            assert serial == pooled
