import numpy as np
import pytest

from roscal.errors import InputValidationError, LPInfeasibleError, LPUnboundedError
from roscal.numerics import (
    RngStream,
    chi_cdf,
    chi_quantile,
    cholesky_psd,
    empirical_quantile,
    project_simplex,
    sample_mvn,
    sample_mvn_batch,
    solve_lp,
)

from _oracles import lp_min_by_enumeration, refine_min_on_simplex


class TestChi:
    def test_cdf_zero(self):
        assert chi_cdf(1, 0.0) == 0.0

    def test_cdf_reference_values(self):
        assert chi_cdf(1, 1.6449) == pytest.approx(0.90, abs=2e-4)
        assert chi_cdf(2, 2.1460) == pytest.approx(0.90, abs=2e-4)

    def test_quantile_reference_values(self):
        assert chi_quantile(1, 0.9) == pytest.approx(1.6449, abs=1e-3)
        assert chi_quantile(4, 0.7) == pytest.approx(2.2, abs=0.05)
        assert chi_quantile(2, 0.7) == pytest.approx(1.55, abs=0.05)

    def test_quantile_zero(self):
        assert chi_quantile(7, 0.0) == 0.0

    def test_quantile_rejects_p_one(self):
        with pytest.raises(InputValidationError):
            chi_quantile(3, 1.0)

    def test_cdf_rejects_bad_dof(self):
        with pytest.raises(InputValidationError):
            chi_cdf(0, 1.0)

    def test_right_inverse(self):
        for d in range(1, 51):
            for p in (0.0, 1e-6, 0.1, 0.5, 0.9, 0.99, 0.9999):
                assert chi_cdf(d, chi_quantile(d, p)) == pytest.approx(p, abs=1e-8)

    def test_quantile_monotone_in_p_and_dof(self):
        ps = np.linspace(0.05, 0.99, 20)
        for d in (1, 2, 5, 20, 50):
            qs = [chi_quantile(d, p) for p in ps]
            assert np.all(np.diff(qs) > 0)
        for p in (0.1, 0.5, 0.9):
            qs = [chi_quantile(d, p) for d in range(1, 51)]
            assert np.all(np.diff(qs) > 0)


class TestRngStream:
    def test_reproducible(self):
        a = RngStream(42, (1, 2)).generator().standard_normal(8)
        b = RngStream(42, (1, 2)).generator().standard_normal(8)
        assert np.array_equal(a, b)

    def test_distinct_paths_differ(self):
        a = RngStream(42).spawn(0).generator().standard_normal(8)
        b = RngStream(42).spawn(1).generator().standard_normal(8)
        assert not np.array_equal(a, b)

    def test_path_correlation(self):
        n = 10_000
        a = RngStream(7).spawn(3).generator().standard_normal(n)
        b = RngStream(7).spawn(4).generator().standard_normal(n)
        rho = np.corrcoef(a, b)[0, 1]
        assert abs(rho) < 0.05


class TestCholesky:
    def test_identity(self):
        f = cholesky_psd(np.eye(2))
        assert np.allclose(f.L, np.eye(2))
        assert f.rank == 2

    def test_dummy_coordinate(self):
        f = cholesky_psd(np.diag([4.0, 0.0]))
        assert np.allclose(f.L, np.diag([2.0, 0.0]))
        assert f.rank == 1
        assert np.all(f.L[1] == 0.0)

    def test_reconstruction(self, rng):
        A = rng.standard_normal((5, 5))
        sigma = A @ A.T
        f = cholesky_psd(sigma)
        err = np.linalg.norm(f.L @ f.L.T - sigma) / np.linalg.norm(sigma)
        assert err <= 1e-8

    def test_rank_deficient(self, rng):
        A = rng.standard_normal((6, 3))
        sigma = A @ A.T
        f = cholesky_psd(sigma)
        assert f.rank == 3
        err = np.linalg.norm(f.L @ f.L.T - sigma) / np.linalg.norm(sigma)
        assert err <= 1e-8

    def test_rejects_indefinite(self):
        with pytest.raises(InputValidationError):
            cholesky_psd(np.diag([1.0, -1.0]))

    def test_rejects_asymmetric(self):
        with pytest.raises(InputValidationError):
            cholesky_psd(np.array([[1.0, 0.5], [0.0, 1.0]]))


class TestSampleMvn:
    def test_zero_factor(self):
        f = cholesky_psd(np.zeros((3, 3)))
        assert np.all(sample_mvn(f, RngStream(1)) == 0.0)

    def test_dummy_coordinate_exact_zero(self):
        f = cholesky_psd(np.diag([0.0, 1.0]))
        draws = sample_mvn_batch(f, RngStream(3), 100)
        assert np.all(draws[:, 0] == 0.0)

    def test_moments(self):
        f = cholesky_psd(np.diag([1.0, 4.0]))
        draws = sample_mvn_batch(f, RngStream(5), 100_000)
        cov = np.cov(draws.T, bias=True)
        assert np.allclose(np.diag(cov), [1.0, 4.0], rtol=0.05)

    def test_single_matches_distribution_shape(self):
        f = cholesky_psd(np.eye(4))
        x = sample_mvn(f, RngStream(11, (2,)))
        assert x.shape == (4,)


class TestSolveLp:
    def test_simplex_vertex(self):
        x, v = solve_lp([-1.0, 0.0], (np.ones((1, 2)), [1.0], [True, True]))
        assert np.allclose(x, [1.0, 0.0])
        assert v == pytest.approx(-1.0, abs=1e-9)

    def test_constant_objective(self):
        x, v = solve_lp([0.0, 0.0], (np.ones((1, 2)), [1.0], [True, True]))
        assert v == pytest.approx(0.0, abs=1e-12)

    def test_free_variable_with_negative_rhs(self):
        # x >= 0.5 encoded as -x <= -0.5; minimize x over [0.5, 1].
        x, v = solve_lp([1.0], (np.array([[-1.0], [1.0]]), [-0.5, 1.0], [False]))
        assert v == pytest.approx(0.5, abs=1e-9)

    def test_infeasible(self):
        with pytest.raises(LPInfeasibleError):
            solve_lp([1.0], (np.array([[1.0], [-1.0]]), [-1.0, -1.0], [False]))

    def test_unbounded(self):
        with pytest.raises(LPUnboundedError):
            solve_lp([-1.0], (np.zeros((0, 1)), [], [True]))

    def test_matches_enumeration_oracle(self, rng):
        for _ in range(40):
            n = int(rng.integers(2, 4))
            r = int(rng.integers(1, 4))
            G = rng.standard_normal((r, n))
            h = rng.uniform(0.5, 2.0, size=r)
            G = np.vstack([G, np.eye(n)])  # box rows keep it bounded
            h = np.concatenate([h, np.full(n, 2.0)])
            nonneg = np.ones(n, dtype=bool)
            cost = rng.standard_normal(n)
            x, v = solve_lp(cost, (G, h, nonneg))
            _, v_ref = lp_min_by_enumeration(cost, G, h, nonneg)
            assert v == pytest.approx(v_ref, abs=1e-9)
            assert np.all(G @ x <= h + 1e-9)


class TestProjectSimplex:
    def test_interior_point_unchanged(self):
        v = np.array([0.2, 0.3])
        assert np.allclose(project_simplex(v, 1.0), v)

    def test_single_active_coordinate(self):
        assert np.allclose(project_simplex(np.array([2.0, 0.0]), 1.0), [1.0, 0.0])

    def test_feasibility_exact(self, rng):
        for _ in range(50):
            x = project_simplex(rng.standard_normal(6) * 3, 1.0)
            assert np.all(x >= 0)
            assert x.sum() <= 1.0 + 1e-12

    def test_matches_grid_oracle(self, rng):
        for _ in range(5):
            v = rng.standard_normal(4) * 1.5

            def dist(pts):
                return np.linalg.norm(pts - v, axis=1)

            _, ref = refine_min_on_simplex(dist, 4, coarse_step=0.1, rounds=3)
            got = float(np.linalg.norm(project_simplex(v, 1.0) - v))
            assert got <= ref + 1e-3

    def test_nonexpansive(self, rng):
        for _ in range(50):
            u = rng.standard_normal(5)
            w = rng.standard_normal(5)
            pu = project_simplex(u, 1.0)
            pw = project_simplex(w, 1.0)
            assert np.linalg.norm(pu - pw) <= np.linalg.norm(u - w) + 1e-12


def _grid4(step=0.1):
    ticks = np.arange(0.0, 1.0 + step / 2, step)
    mesh = np.meshgrid(*([ticks] * 4), indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    return pts[pts.sum(axis=1) <= 1.0 + 1e-12]


class TestEmpiricalQuantile:
    def test_basic(self):
        assert empirical_quantile(range(1, 11), 0.3) == 7.0

    def test_constant(self):
        assert empirical_quantile([3.5] * 9, 0.4) == 3.5

    def test_top_index(self):
        assert empirical_quantile(range(1, 11), 0.05) == 10.0

    def test_empty_rejected(self):
        with pytest.raises(InputValidationError):
            empirical_quantile([], 0.3)

    def test_level_bounds(self):
        with pytest.raises(InputValidationError):
            empirical_quantile([1.0], 0.0)
