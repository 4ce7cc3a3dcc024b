import numpy as np
import pytest

from roscal.calibrate import (
    algo_constants,
    baseline_scales,
    calibrate_scale,
    check_sandwich,
    reduced_domain,
)
from roscal.errors import InputValidationError
from roscal.estimate import empirical_moments
from roscal.model import TrueModel
from roscal.numerics import RngStream, chi_quantile, cholesky_psd, sample_mvn_batch
from roscal.solve import SolverConfig, Subspace, solve_robust

CFG = SolverConfig(max_iters=400)


def _sigma_portfolio(d, risky):
    out = np.zeros((d + 1, d + 1))
    out[1:, 1:] = risky
    return out


def _draw_samples(model, n, stream):
    f = cholesky_psd(model.sigma_star)
    return model.theta_star + sample_mvn_batch(f, stream, n)


class TestAlgoConstants:
    def test_practical_values(self):
        c = algo_constants(100, 2, 0.3, tau=5.0, tau_prime=7.0, mode="practical")
        assert c.alpha_n == pytest.approx(0.03)
        assert c.beta_n == 0.0
        assert c.gamma_n == pytest.approx(0.1)
        assert c.eta_n == 0.0
        assert c.delta_n == pytest.approx(0.03)

    def test_theoretical_with_zero_moments_matches_practical(self):
        a = algo_constants(100, 2, 0.3, 0.0, 0.0, "practical")
        b = algo_constants(100, 2, 0.3, 0.0, 0.0, "theoretical")
        assert (a.alpha_n, a.beta_n, a.gamma_n, a.eta_n, a.delta_n) == (
            b.alpha_n,
            b.beta_n,
            b.gamma_n,
            b.eta_n,
            b.delta_n,
        )

    def test_dimension_constant(self):
        c = algo_constants(10, 20, 0.3, 0.0, 0.0, "theoretical")
        assert c.c_d == pytest.approx(400.0 * 20**0.25)
        assert c.c_d == pytest.approx(845.9, abs=0.1)

    def test_theoretical_corrections_positive(self):
        c = algo_constants(400, 3, 0.2, tau=0.5, tau_prime=0.01, mode="theoretical")
        assert c.beta_n > 0
        assert c.delta_n > c.alpha_n  # includes the moment terms


class TestBaselineScales:
    def test_single_dim(self):
        lo, hi = baseline_scales(1, 1, 0.1)
        assert lo == pytest.approx(1.6449, abs=1e-3)
        assert hi == pytest.approx(lo)

    def test_two_dim_upper(self):
        _, hi = baseline_scales(1, 2, 0.1)
        assert hi == pytest.approx(2.1460, abs=1e-3)

    def test_sqrt_n_scaling(self):
        lo1, hi1 = baseline_scales(1, 5, 0.2)
        lo100, hi100 = baseline_scales(100, 5, 0.2)
        assert lo100 == pytest.approx(lo1 / 10)
        assert hi100 == pytest.approx(hi1 / 10)


class TestReducedDomain:
    def test_vacuous_cuts(self, portfolio2):
        problem, _ = portfolio2
        est = empirical_moments(
            np.column_stack([np.ones(10), np.random.default_rng(0).normal(size=(10, 2))])
        )
        sub = reduced_domain(problem, est, np.inf, np.inf)
        assert sub.polytope().rows == problem.reduced_polytope().rows

    def test_nominal_optimizer_contained(self, portfolio2):
        problem, _ = portfolio2
        rng = RngStream(1)
        model = TrueModel(
            np.array([1.0, -1.0, -0.5]), _sigma_portfolio(2, np.diag([1.0, 0.5]))
        )
        est = empirical_moments(_draw_samples(model, 200, rng))
        x0, w0 = solve_robust(problem, est.theta_hat, est.sigma_hat, 0.0, CFG)
        sub = reduced_domain(problem, est, w0, 0.0)
        assert sub.contains_reduced(x0[1:], tol=1e-7)

    def test_grid_membership_matches_inequalities(self, portfolio2):
        problem, _ = portfolio2
        model = TrueModel(
            np.array([1.0, -0.6, 0.3]), _sigma_portfolio(2, np.diag([2.0, 1.0]))
        )
        est = empirical_moments(_draw_samples(model, 100, RngStream(2)))
        sub = reduced_domain(problem, est, -0.2, 0.3)
        poly = sub.polytope()
        ticks = np.linspace(0, 1, 21)
        for a in ticks:
            for b in ticks:
                if a + b > 1:
                    continue
                y = np.array([a, b])
                assert poly.contains(y) == sub.contains_reduced(y)


class TestCalibrateScale:
    def test_lambda_dot_bracket(self, portfolio2):
        problem, _ = portfolio2
        model = TrueModel(
            np.array([1.0, -1.0, -0.5]), _sigma_portfolio(2, np.diag([4.0, 1.0]))
        )
        for n in (30, 200):
            samples = _draw_samples(model, n, RngStream(40 + n))
            res = calibrate_scale(problem, samples, 0.3, CFG, "practical", RngStream(41))
            p2 = 1.0 - 0.3 + res.constants.delta_n
            lo = chi_quantile(1, p2) - res.constants.gamma_n
            hi = chi_quantile(2, p2)
            assert lo <= res.lambda_dot <= hi + 1e-12
            assert res.lambda_hat == pytest.approx(
                res.lambda_dot / ((1 - res.constants.gamma_n) * np.sqrt(n))
            )

    def test_deterministic(self, portfolio2):
        problem, _ = portfolio2
        model = TrueModel(
            np.array([1.0, -1.0, -0.5]), _sigma_portfolio(2, np.diag([1.0, 2.0]))
        )
        samples = _draw_samples(model, 60, RngStream(7))
        a = calibrate_scale(problem, samples, 0.3, CFG, "practical", RngStream(8))
        b = calibrate_scale(problem, samples, 0.3, CFG, "practical", RngStream(8))
        assert a.lambda_hat == b.lambda_hat  # bit identical

    def test_stage_streams_independent(self, portfolio2):
        problem, _ = portfolio2
        model = TrueModel(
            np.array([1.0, -1.0, -0.5]), _sigma_portfolio(2, np.diag([1.0, 2.0]))
        )
        samples = _draw_samples(model, 60, RngStream(7))
        res = calibrate_scale(problem, samples, 0.3, CFG, "practical", RngStream(8))
        assert res.stage1.q_samples == res.stage2.q_samples
        assert res.subspace["kind"] == "cuts"

    def test_rejects_bad_inputs(self, portfolio2):
        problem, _ = portfolio2
        with pytest.raises(InputValidationError):
            calibrate_scale(problem, np.ones((1, 3)), 0.3, CFG)
        with pytest.raises(InputValidationError):
            calibrate_scale(problem, np.ones((5, 3)), 1.5, CFG)

    def test_result_serializes(self, portfolio2):
        import json

        problem, _ = portfolio2
        model = TrueModel(
            np.array([1.0, -1.0, -0.5]), _sigma_portfolio(2, np.diag([1.0, 2.0]))
        )
        samples = _draw_samples(model, 40, RngStream(3))
        res = calibrate_scale(problem, samples, 0.3, CFG, "practical", RngStream(4))
        blob = json.dumps(res.to_dict())
        assert "lambda_hat" in blob


class TestCheckSandwich:
    def test_exact_parameters(self, portfolio3):
        problem, _ = portfolio3
        sigma = _sigma_portfolio(3, np.diag([1.0, 2.0, 0.5]))
        model = TrueModel(np.array([1.0, -1.0, -0.3, 0.4]), sigma)
        report = check_sandwich(problem, model, sigma, model.theta_star, 0.3)
        assert report.hypotheses_met and report.conclusion_holds
        assert bool(report)

    def test_ball_errors_never_violate(self, portfolio3, rng):
        problem, _ = portfolio3
        for k in range(10):
            risky = np.diag(rng.uniform(0.5, 2.0, size=3))
            sigma = _sigma_portfolio(3, risky)
            model = TrueModel(np.array([1.0, -1.0, -0.3, 0.4]), sigma)
            lam = rng.uniform(0.05, 0.8)
            z = rng.standard_normal(4)
            z[0] = 0.0
            f = cholesky_psd(sigma)
            unit = rng.uniform(0, 1) * z / max(np.linalg.norm(z), 1e-12)
            eps = lam * (f.L @ unit)
            theta = model.theta_star + eps
            report = check_sandwich(problem, model, sigma, theta, lam)
            assert report.hypotheses_met, report.failures
            assert report.conclusion_holds, report.failures

    def test_reports_unmet_hypotheses(self, portfolio3):
        problem, _ = portfolio3
        sigma = _sigma_portfolio(3, np.eye(3))
        model = TrueModel(np.array([1.0, -1.0, -0.3, 0.4]), sigma)
        theta = model.theta_star + np.array([0.0, 50.0, 0.0, 0.0])
        report = check_sandwich(problem, model, sigma, theta, 0.1)
        assert not report.hypotheses_met
        assert any("tolerance set" in f for f in report.failures)
