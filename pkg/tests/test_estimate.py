import math

import numpy as np
import pytest
from scipy import special

from roscal.errors import InputValidationError
from roscal.estimate import covariance_sandwich, empirical_moments, eta
from roscal.numerics import RngStream, cholesky_psd, sample_mvn_batch


class TestEmpiricalMoments:
    def test_two_point_scatter(self):
        est = empirical_moments([[1.0, 2.0], [3.0, 4.0]])
        assert np.allclose(est.theta_hat, [2.0, 3.0])
        assert np.allclose(est.sigma_hat, [[1.0, 1.0], [1.0, 1.0]])
        assert est.n == 2

    def test_identical_samples(self):
        est = empirical_moments([[2.0, 5.0]] * 6)
        assert np.all(est.sigma_hat == 0.0)

    def test_monte_carlo_consistency(self):
        f = cholesky_psd(np.diag([1.0, 4.0]))
        draws = np.array([0.0, 0.0]) + sample_mvn_batch(f, RngStream(13), 10_000)
        est = empirical_moments(draws)
        assert np.allclose(np.diag(est.sigma_hat), [1.0, 4.0], rtol=0.10)

    def test_needs_two_samples(self):
        with pytest.raises(InputValidationError):
            empirical_moments([[1.0, 2.0]])

    def test_shift_equivariance(self, rng):
        X = rng.standard_normal((40, 3))
        b = np.array([5.0, -2.0, 0.5])
        a = empirical_moments(X)
        c = empirical_moments(X + b)
        assert np.allclose(c.theta_hat, a.theta_hat + b)
        assert np.allclose(c.sigma_hat, a.sigma_hat)

    def test_scale_equivariance(self, rng):
        X = rng.standard_normal((40, 3))
        s = 2.5
        a = empirical_moments(X)
        c = empirical_moments(s * X)
        assert np.allclose(c.sigma_hat, s**2 * a.sigma_hat)

    def test_dummy_column_exact(self):
        X = np.column_stack([np.ones(50), np.random.default_rng(0).standard_normal(50)])
        est = empirical_moments(X)
        assert est.theta_hat[0] == 1.0
        assert np.all(est.sigma_hat[0, :] == 0.0)
        assert np.all(est.sigma_hat[:, 0] == 0.0)

    def test_explicit_bounds_respected(self):
        est = empirical_moments([[1.0], [2.0], [3.0]], bounds=(7.0, 9.0))
        assert est.tau == 7.0
        assert est.tau_prime == 9.0

    def test_plugin_bounds_scale_free(self, rng):
        X = rng.standard_normal((500, 2))
        a = empirical_moments(X)
        b = empirical_moments(3.0 * X)
        # Whitened moments do not depend on the data scale.
        assert a.tau == pytest.approx(b.tau, rel=1e-9)
        assert a.tau_prime == pytest.approx(b.tau_prime, rel=1e-9)


class TestEta:
    def test_zero_tau_prime(self):
        assert eta(5, 100, 0.1, 0.0) == 0.0

    def test_vacuous_branch(self):
        assert eta(2, 100, 0.1, 1.0) == np.inf

    def test_formula_double_entry(self):
        # Independent re-implementation straight from scipy primitives.
        def ref(d, n, dp, tp):
            arg = 1.0 - dp / d**2 + 400.0 * tp / math.sqrt(n)
            if arg >= 1.0:
                return np.inf
            return (tp ** (1 / 3) * d / math.sqrt(n)) * math.sqrt(
                2.0 * special.gammaincinv(0.5, arg)
            )

        # d=2, n=1e6, delta'=0.1, tau'=1 puts the quantile argument at
        # 1.375: the bound is vacuous and both entries must agree on that.
        assert eta(2, 10**6, 0.1, 1.0) == ref(2, 10**6, 0.1, 1.0) == np.inf
        # A small sixth-moment bound keeps the argument below 1.
        d, n, dp, tp = 2, 10**6, 0.1, 1e-4
        assert ref(d, n, dp, tp) < np.inf
        assert eta(d, n, dp, tp) == pytest.approx(ref(d, n, dp, tp), rel=1e-12)

    def test_monotone_in_n_and_tau_prime(self):
        # Regimes where the bound is non-vacuous.
        vals_n = [eta(2, n, 0.1, 1e-4) for n in (10**6, 4 * 10**6, 10**7)]
        assert vals_n[0] > vals_n[1] > vals_n[2]
        vals_tp = [eta(2, 10**7, 0.1, tp) for tp in (1e-5, 1e-4, 5e-4)]
        assert vals_tp[0] < vals_tp[1] < vals_tp[2]


class TestCovarianceSandwich:
    def test_exact(self):
        assert covariance_sandwich(None, 0.0) == (1.0, 1.0)

    def test_half(self):
        assert covariance_sandwich(None, 0.5) == (0.5, 1.5)

    def test_clamped(self):
        lo, hi = covariance_sandwich(None, 2.0)
        assert lo == pytest.approx(1e-6)
        assert hi == 3.0

    def test_coverage_event(self):
        # With the c1 = 400 constant the bound is vacuous at this n, so the
        # sandwich event holds trivially; the test exercises the whole
        # check (eta -> factors -> eigenvalue comparison) end to end.
        d, n, delta_prime = 2, 10_000, 0.2
        sigma_star = np.diag([1.0, 4.0])
        f = cholesky_psd(sigma_star)
        inv_sqrt = np.diag(1.0 / np.sqrt(np.diag(sigma_star)))
        hits = 0
        reps = 200
        for rep in range(reps):
            draws = sample_mvn_batch(f, RngStream(900 + rep), n)
            est = empirical_moments(draws)
            e = eta(d, n, delta_prime, est.tau_prime)
            lo, hi = covariance_sandwich(est, e)
            w = np.linalg.eigvalsh(inv_sqrt @ est.sigma_hat @ inv_sqrt)
            if np.all(w >= lo - 1e-12) and np.all(w <= hi + 1e-12):
                hits += 1
        assert hits / reps >= 1.0 - delta_prime
