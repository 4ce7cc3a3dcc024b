"""Parameterized problem family with constraints linear in the parameter.

A problem instance is ``min f(x) = objective @ x`` over a bounded
polyhedral domain subject to ``g_k(x, theta) = theta @ v_k(x) >= 0`` where
each sensitivity map is affine, ``v_k(x) = A_k x + c_k``.  Affine constant
terms are encoded through dummy parameter coordinates pinned to 1 with
zero variance.  The robust counterpart replaces each constraint by its
worst case over an ellipsoid of radius ``lambda`` around the parameter
estimate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._polytope import Polytope
from .errors import InputValidationError, LPUnboundedError, ProblemValidationError
from .numerics import CholFactor, cholesky_psd, solve_lp

FEASIBILITY_TOL = 1e-9

__all__ = [
    "FEASIBILITY_TOL",
    "SensitivityMap",
    "DomainSpec",
    "ProblemSpec",
    "EllipsoidalUncertainty",
    "TrueModel",
    "eval_constraint",
    "radius",
    "true_objective",
    "is_true_feasible",
]


@dataclass(frozen=True, eq=False)
class SensitivityMap:
    """Affine map v(x) = A x + c from decisions to parameter space."""

    A: np.ndarray
    c: np.ndarray

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.A @ x + self.c


@dataclass(frozen=True, eq=False)
class DomainSpec:
    """Inequality polyhedron G x <= h plus componentwise nonnegativity flags."""

    G: np.ndarray
    h: np.ndarray
    nonneg: tuple


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    m: int
    d: int
    objective: np.ndarray
    constraints: tuple
    domain: DomainSpec
    dummy_coords: frozenset = frozenset()
    epigraph_var: int | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "objective", np.asarray(self.objective, dtype=float))
        object.__setattr__(self, "dummy_coords", frozenset(int(i) for i in self.dummy_coords))
        validate_problem(self)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    @property
    def effective_dim(self) -> int:
        """Parameter dimension excluding dummy coordinates."""
        return self.d - len(self.dummy_coords)

    def objective_value(self, x) -> float:
        return float(self.objective @ np.asarray(x, dtype=float))

    # -- reductions used by the solvers --------------------------------------

    def kept_vars(self) -> np.ndarray:
        """Decision indices that remain after epigraph elimination."""
        if self.epigraph_var is None:
            return np.arange(self.m)
        return np.array([i for i in range(self.m) if i != self.epigraph_var])

    def reduced_polytope(self) -> Polytope:
        """Solver-facing domain over the kept decision variables."""
        if "reduced_polytope" in self._cache:
            return self._cache["reduced_polytope"]
        keep = self.kept_vars()
        G = np.atleast_2d(np.asarray(self.domain.G, dtype=float))
        if G.size == 0:
            G = G.reshape(0, self.m)
        nonneg = np.asarray(self.domain.nonneg, dtype=bool)
        poly = Polytope(G[:, keep], np.asarray(self.domain.h, dtype=float), nonneg[keep])
        self._cache["reduced_polytope"] = poly
        return poly

    def reduced_maps(self):
        """Per-constraint (A_k, c_k, kappa_k) over kept variables.

        ``kappa_k`` is the constant coefficient the epigraph variable
        contributes to g_k (through dummy parameter coordinates); zero when
        there is no epigraph variable.
        """
        if "reduced_maps" in self._cache:
            return self._cache["reduced_maps"]
        keep = self.kept_vars()
        out = []
        for smap in self.constraints:
            A = np.asarray(smap.A, dtype=float)
            c = np.asarray(smap.c, dtype=float)
            if self.epigraph_var is None:
                kappa = 0.0
            else:
                col = A[:, self.epigraph_var]
                kappa = float(sum(col[j] for j in self.dummy_coords))
            out.append((A[:, keep], c, kappa))
        self._cache["reduced_maps"] = out
        return out


@dataclass(frozen=True, eq=False)
class EllipsoidalUncertainty:
    """Ellipsoid {u : u^T Sigma^+ u <= 1, u in range(Sigma)} scaled by a
    nonnegative robustness coefficient."""

    sigma: np.ndarray
    scale: float

    def __post_init__(self):
        if self.scale < 0:
            raise InputValidationError("EllipsoidalUncertainty: scale must be >= 0")
        cholesky_psd(self.sigma)  # validates symmetry and PSD-ness


@dataclass(frozen=True, eq=False)
class TrueModel:
    """Ground-truth parameters used by benchmarks and test harnesses."""

    theta_star: np.ndarray
    sigma_star: np.ndarray


def validate_problem(p: ProblemSpec) -> None:
    """Check structural invariants; raises on the first violated one."""
    if p.num_constraints < 1:
        raise ProblemValidationError("problem must have at least one constraint")
    if p.objective.shape != (p.m,):
        raise ProblemValidationError("objective dimension does not match m")
    for k, smap in enumerate(p.constraints, start=1):
        A = np.asarray(smap.A, dtype=float)
        c = np.asarray(smap.c, dtype=float)
        if A.shape != (p.d, p.m):
            raise ProblemValidationError(f"constraint {k}: A must be d x m")
        if c.shape != (p.d,):
            raise ProblemValidationError(f"constraint {k}: c must have length d")
    G = np.atleast_2d(np.asarray(p.domain.G, dtype=float))
    h = np.atleast_1d(np.asarray(p.domain.h, dtype=float))
    nonneg = np.asarray(p.domain.nonneg, dtype=bool)
    if G.size == 0:
        G = G.reshape(0, p.m)
    if G.shape[1] != p.m or G.shape[0] != h.size or nonneg.size != p.m:
        raise ProblemValidationError("domain arrays inconsistent with m")
    for i in p.dummy_coords:
        if not 0 <= i < p.d:
            raise ProblemValidationError(f"dummy coordinate {i} out of range")
    e = p.epigraph_var
    if e is not None:
        if not 0 <= e < p.m:
            raise ProblemValidationError("epigraph variable index out of range")
        if nonneg[e]:
            raise ProblemValidationError("epigraph variable must not carry a sign bound")
        if G.shape[0] and np.any(G[:, e] != 0.0):
            raise ProblemValidationError("epigraph variable must not appear in domain rows")
        if p.objective[e] <= 0:
            raise ProblemValidationError("epigraph variable needs positive objective weight")
        for k, smap in enumerate(p.constraints, start=1):
            col = np.asarray(smap.A, dtype=float)[:, e]
            live = [j for j in range(p.d) if col[j] != 0.0]
            if any(j not in p.dummy_coords for j in live):
                raise ProblemValidationError(
                    f"constraint {k}: epigraph column must be supported on dummy coordinates"
                )
    # Boundedness of the solver-facing domain: the recession cone
    # {Gr y <= 0, y_i >= 0 for flagged i} must be {0}.  Intersected with the
    # unit box it contains a nonzero point iff some coordinate can move.
    keep = [i for i in range(p.m) if i != e]
    Gr = G[:, keep]
    nr = nonneg[keep]
    n = len(keep)
    box = np.vstack([np.eye(n), -np.eye(n)])
    Gcone = np.vstack([Gr, box])
    hcone = np.concatenate([np.zeros(Gr.shape[0]), np.ones(2 * n)])
    for i in range(n):
        for sign in (-1.0, 1.0):
            cost = np.zeros(n)
            cost[i] = sign
            try:
                _, val = solve_lp(cost, (Gcone, hcone, nr))
            except LPUnboundedError as exc:  # pragma: no cover - boxed
                raise ProblemValidationError("domain recession check failed") from exc
            if val < -1e-7:
                raise ProblemValidationError(
                    "domain is unbounded after epigraph-variable elimination"
                )


def check_dummy_covariance(problem: ProblemSpec, sigma: np.ndarray) -> None:
    """Dummy coordinates must carry no variance in any paired covariance."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (problem.d, problem.d):
        raise InputValidationError("covariance dimension does not match problem")
    for j in problem.dummy_coords:
        if np.any(np.abs(sigma[j, :]) > 1e-12) or np.any(np.abs(sigma[:, j]) > 1e-12):
            raise InputValidationError(
                f"covariance has nonzero entries on dummy coordinate {j}"
            )


def eval_constraint(problem: ProblemSpec, k: int, x, theta) -> float:
    """Bilinear constraint value theta @ v_k(x); k is 1-based."""
    if not 1 <= k <= problem.num_constraints:
        raise InputValidationError(f"constraint index {k} outside 1..K")
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if x.shape != (problem.m,) or theta.shape != (problem.d,):
        raise InputValidationError("eval_constraint: dimension mismatch")
    smap = problem.constraints[k - 1]
    return float(theta @ smap(x))


def radius(problem: ProblemSpec, k: int, x, sigma) -> float:
    """Worst-case constraint perturbation over the unit ellipsoid.

    Equals ``||Sigma^{1/2} v_k(x)||_2`` (support function of the ellipsoid).
    """
    if not 1 <= k <= problem.num_constraints:
        raise InputValidationError(f"constraint index {k} outside 1..K")
    factor = sigma if isinstance(sigma, CholFactor) else cholesky_psd(sigma)
    v = problem.constraints[k - 1](np.asarray(x, dtype=float))
    return float(np.linalg.norm(factor.L.T @ v))


def constraint_slacks(problem: ProblemSpec, x, theta) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    return np.array([float(theta @ smap(x)) for smap in problem.constraints])


def is_true_feasible(problem: ProblemSpec, x, model: TrueModel) -> bool:
    """Whether x satisfies every true constraint within the feasibility
    tolerance (solver outputs are inexact, so exact >= 0 would misclassify
    boundary solutions)."""
    slacks = constraint_slacks(problem, x, model.theta_star)
    return bool(np.all(slacks >= -FEASIBILITY_TOL))


def true_objective(problem: ProblemSpec, x, model: TrueModel, cap: float | None = None) -> float:
    """f(x) when x is feasible under the true parameters, else +inf.

    ``cap`` replaces the infinity (the benchmark scores infeasible
    solutions at a fixed penalty instead).
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.m,):
        raise InputValidationError("true_objective: decision dimension mismatch")
    if is_true_feasible(problem, x, model):
        return problem.objective_value(x)
    return float("inf") if cap is None else float(cap)
