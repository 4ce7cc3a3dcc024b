import numpy as np
import pytest

from roscal.errors import InputValidationError, ProblemValidationError
from roscal.model import (
    DomainSpec,
    ProblemSpec,
    SensitivityMap,
    TrueModel,
    eval_constraint,
    radius,
    true_objective,
)
from roscal.numerics import cholesky_psd

from _oracles import ellipsoid_support


class TestEvalConstraint:
    def test_portfolio_bilinear(self, portfolio2):
        problem, _ = portfolio2
        # v(x) = (x0, -x1, -x2); theta @ v with theta = (1, -1, -0.5).
        x = np.array([3.0, 1.0, 0.0])
        theta = np.array([1.0, -1.0, -0.5])
        assert eval_constraint(problem, 1, x, theta) == pytest.approx(4.0)

    def test_zero_parameter(self, portfolio2):
        problem, _ = portfolio2
        x = np.array([0.3, 0.2, 0.5])
        assert eval_constraint(problem, 1, x, np.zeros(3)) == 0.0

    def test_identity_map(self, toy_problem):
        assert eval_constraint(
            toy_problem, 1, np.array([1.0, 0.0]), np.array([2.0, 1.0])
        ) == pytest.approx(2.0)

    def test_linearity_in_theta(self, portfolio3, rng):
        problem, _ = portfolio3
        x = np.array([0.1, 0.2, 0.3, 0.4])
        for _ in range(20):
            t1 = rng.standard_normal(4)
            t2 = rng.standard_normal(4)
            a, b = rng.standard_normal(2)
            lhs = eval_constraint(problem, 1, x, a * t1 + b * t2)
            rhs = a * eval_constraint(problem, 1, x, t1) + b * eval_constraint(
                problem, 1, x, t2
            )
            assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_index_bounds(self, portfolio2):
        problem, _ = portfolio2
        with pytest.raises(InputValidationError):
            eval_constraint(problem, 0, np.zeros(3), np.zeros(3))
        with pytest.raises(InputValidationError):
            eval_constraint(problem, 2, np.zeros(3), np.zeros(3))

    def test_dimension_mismatch(self, portfolio2):
        problem, _ = portfolio2
        with pytest.raises(InputValidationError):
            eval_constraint(problem, 1, np.zeros(2), np.zeros(3))


class TestRadius:
    def test_unit_case(self, toy_problem):
        assert radius(toy_problem, 1, np.array([1.0, 0.0]), np.eye(2)) == pytest.approx(1.0)

    def test_scaling(self, toy_problem):
        assert radius(toy_problem, 1, np.array([1.0, 0.0]), 4.0 * np.eye(2)) == pytest.approx(2.0)

    def test_scale_law_random(self, toy_problem, rng):
        for _ in range(10):
            x = rng.uniform(0, 1, size=2)
            nu = rng.uniform(0.1, 3.0)
            base = radius(toy_problem, 1, x, np.eye(2))
            assert radius(toy_problem, 1, x, nu**2 * np.eye(2)) == pytest.approx(
                nu * base, rel=1e-12
            )

    def test_portfolio_dummy_variance(self, portfolio2):
        problem, _ = portfolio2
        sigma = np.diag([0.0, 1.0, 1.0])
        x = np.array([0.7, 1.0, 0.0])  # x0 arbitrary: zero-variance coordinate
        assert radius(problem, 1, x, sigma) == pytest.approx(1.0)

    def test_against_support_sampling(self, portfolio2):
        problem, _ = portfolio2
        sigma = np.diag([0.0, 1.0, 1.0])
        x = np.array([0.2, 1.0, 0.0])
        v = problem.constraints[0](x)
        sampled = ellipsoid_support(v, sigma)
        assert radius(problem, 1, x, sigma) == pytest.approx(sampled, abs=2e-4)

    def test_cauchy_schwarz_domination(self, toy_problem, rng):
        sigma = np.eye(2)
        f = cholesky_psd(sigma)
        for _ in range(30):
            x = rng.uniform(0, 2, size=2)
            delta = rng.standard_normal(2)
            lhs = abs(eval_constraint(toy_problem, 1, x, delta))
            bound = np.linalg.norm(delta) * radius(toy_problem, 1, x, f)
            assert lhs <= bound + 1e-12

    def test_rejects_non_psd(self, toy_problem):
        with pytest.raises(InputValidationError):
            radius(toy_problem, 1, np.ones(2), np.diag([1.0, -2.0]))


class TestTrueObjective:
    def test_feasible(self, toy_problem):
        model = TrueModel(np.array([1.0, 2.0, 1.0]), np.diag([0.0, 1.0, 1.0]))
        problem, _model = _toy_with_dummy()
        x = np.array([1.5, 0.0])  # 2*1.5 - 2 = 1 >= 0
        assert true_objective(problem, x, model) == pytest.approx(1.5)

    def test_infeasible_no_cap(self):
        problem, model = _toy_with_dummy()
        x = np.array([0.1, 0.1])
        assert true_objective(problem, x, model) == np.inf

    def test_infeasible_with_cap(self):
        problem, model = _toy_with_dummy()
        x = np.array([0.1, 0.1])
        assert true_objective(problem, x, model, cap=1.0) == 1.0

    def test_boundary_tolerance(self):
        problem, model = _toy_with_dummy()
        x = np.array([1.0, 0.0])  # exactly binding constraint
        assert np.isfinite(true_objective(problem, x - 1e-12, model))


def _toy_with_dummy():
    from roscal.toy import example_problem

    return example_problem()


class TestValidation:
    def test_unbounded_domain_rejected(self):
        with pytest.raises(ProblemValidationError, match="unbounded"):
            ProblemSpec(
                m=2,
                d=2,
                objective=np.array([1.0, 1.0]),
                constraints=(SensitivityMap(np.eye(2), np.zeros(2)),),
                domain=DomainSpec(np.zeros((0, 2)), np.zeros(0), (True, True)),
            )

    def test_bad_constraint_shape(self):
        with pytest.raises(ProblemValidationError, match="constraint 1"):
            ProblemSpec(
                m=2,
                d=2,
                objective=np.array([1.0, 1.0]),
                constraints=(SensitivityMap(np.eye(3), np.zeros(3)),),
                domain=DomainSpec(np.eye(2), np.ones(2), (True, True)),
            )

    def test_epigraph_column_must_hit_dummies(self):
        A = np.zeros((2, 2))
        A[1, 0] = 1.0  # epigraph column supported on a non-dummy coordinate
        A[1, 1] = -1.0
        with pytest.raises(ProblemValidationError, match="epigraph column"):
            ProblemSpec(
                m=2,
                d=2,
                objective=np.array([1.0, 0.0]),
                constraints=(SensitivityMap(A, np.zeros(2)),),
                domain=DomainSpec(np.array([[0.0, 1.0]]), np.ones(1), (False, True)),
                dummy_coords=frozenset({0}),
                epigraph_var=0,
            )

    def test_effective_dim(self, portfolio20):
        problem, _ = portfolio20
        assert problem.d == 21
        assert problem.effective_dim == 20
