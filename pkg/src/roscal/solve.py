"""Convex subproblem solvers.

Two workhorses live here: the robust counterpart ``x(lambda; theta, Sigma)``
of the uncertain program, and the membership objective ``psi`` that decides
whether a parameter error lies inside the error-tolerance set of a search
subspace.  Both reduce to minimizing ``linear + weight * ||Sigma^{1/2}
(A y + c)||`` over a bounded polyhedron.

The default engine is Frank-Wolfe driven by a linear-minimization oracle
(a cached vertex table when the domain is small, the dense simplex LP
otherwise) with exact line search and a tracked duality-gap certificate.
A projected-subgradient fallback covers plain-simplex domains, and a small
interior-point engine provides certified high-accuracy solves where the
first-order tail would be too slow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._polytope import Polytope
from ._socp import solve_socp
from .errors import (
    EmptyDomainError,
    InputValidationError,
    RobustInfeasibleError,
    SolverNonConvergenceError,
)
from .model import ProblemSpec, check_dummy_covariance
from .numerics import CholFactor, cholesky_psd, project_simplex

MEMBERSHIP_TOL = 1e-7

_METHODS = ("frank_wolfe", "projected_subgradient", "barrier")

__all__ = [
    "MEMBERSHIP_TOL",
    "SolverConfig",
    "SolveDiagnostics",
    "Subspace",
    "solve_robust",
    "solve_linear_plus_norm",
    "psi",
    "in_S",
]


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 2000
    tol: float = 1e-8
    method: str = "frank_wolfe"

    def __post_init__(self):
        if self.max_iters < 1:
            raise InputValidationError("SolverConfig: max_iters must be >= 1")
        if self.tol <= 0:
            raise InputValidationError("SolverConfig: tol must be positive")
        if self.method not in _METHODS:
            raise InputValidationError(f"SolverConfig: unknown method {self.method!r}")


@dataclass
class SolveDiagnostics:
    """Result of one norm-regularized linear minimization.

    ``value`` is a feasible upper bound; ``lower_bound`` comes from the
    duality gap, so the optimum lies in ``[lower_bound, value]``.
    """

    value: float
    point: np.ndarray | None
    lower_bound: float
    gap: float
    iterations: int
    converged: bool
    warning: str | None = None


# ---------------------------------------------------------------------------
# search subspaces
# ---------------------------------------------------------------------------

NORM_MODES = ("linear_surrogate", "exact_l2")


def _surrogate_terms(problem, A_red, c_red, sigma_diag_sqrt):
    """Linear coefficients of the norm surrogate sum_j sigma_j |v_j(y)|.

    Valid on nonnegative domains when every component of the map is
    sign-definite there; raises otherwise.
    """
    poly = problem.reduced_polytope()
    if not np.all(poly.nonneg):
        raise InputValidationError(
            "linear surrogate requires a nonnegative-orthant domain"
        )
    coef = np.zeros(A_red.shape[1])
    const = 0.0
    for j in range(A_red.shape[0]):
        sj = sigma_diag_sqrt[j]
        if sj == 0.0:
            continue
        row = A_red[j]
        cj = c_red[j]
        if np.all(row >= 0) and cj >= 0:
            sign = 1.0
        elif np.all(row <= 0) and cj <= 0:
            sign = -1.0
        else:
            raise InputValidationError(
                "linear surrogate needs sign-definite sensitivity components"
            )
        coef += sj * sign * row
        const += sj * sign * cj
    return coef, const


@dataclass(frozen=True, eq=False)
class Subspace:
    """A reduced search domain over the solver-facing decision variables.

    Kinds:
      * ``full`` - the whole problem domain;
      * ``cuts`` - domain intersected with a value cap ``f(y) <= w`` and a
        relaxed-feasibility margin ``g_k(y, theta_ref) >= -margin * norm_k(y)``;
      * ``polytope`` - an explicit bounded polyhedron (test geometry);
      * ``points`` - an explicit finite point set.

    With ``linear_surrogate`` the margin uses a linear overestimate of the
    ellipsoidal radius, keeping the subspace polyhedral (the surrogate
    over-bounds the radius by at most ``kappa``).  With ``exact_l2`` the
    set may be nonconvex; only direct membership checks are offered.
    Infinite caps or margins disable the corresponding cut.
    """

    problem: ProblemSpec
    kind: str = "full"
    value_cap: float | None = None
    margin: float | None = None
    margin_theta: np.ndarray | None = None
    margin_sigma: np.ndarray | None = None
    norm_mode: str = "linear_surrogate"
    explicit_G: np.ndarray | None = None
    explicit_h: np.ndarray | None = None
    explicit_nonneg: np.ndarray | None = None
    points: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.kind not in ("full", "cuts", "polytope", "points"):
            raise InputValidationError(f"Subspace: unknown kind {self.kind!r}")
        if self.norm_mode not in NORM_MODES:
            raise InputValidationError(f"Subspace: unknown norm mode {self.norm_mode!r}")
        if self.margin is not None and self.margin < 0:
            raise InputValidationError("Subspace: margin must be nonnegative")

    # -- constructors ---------------------------------------------------

    @classmethod
    def full(cls, problem: ProblemSpec) -> "Subspace":
        return cls(problem=problem, kind="full")

    @classmethod
    def from_polytope(cls, problem: ProblemSpec, G, h, nonneg) -> "Subspace":
        return cls(
            problem=problem,
            kind="polytope",
            explicit_G=np.atleast_2d(np.asarray(G, dtype=float)),
            explicit_h=np.atleast_1d(np.asarray(h, dtype=float)),
            explicit_nonneg=np.asarray(nonneg, dtype=bool),
        )

    @classmethod
    def from_points(cls, problem: ProblemSpec, points) -> "Subspace":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[0] < 1:
            raise InputValidationError("Subspace.from_points: need at least one point")
        return cls(problem=problem, kind="points", points=pts)

    @classmethod
    def cuts(
        cls,
        problem: ProblemSpec,
        theta_ref,
        sigma_ref,
        value_cap: float | None,
        margin: float | None,
        norm_mode: str = "linear_surrogate",
    ) -> "Subspace":
        return cls(
            problem=problem,
            kind="cuts",
            value_cap=None if value_cap is None or math.isinf(value_cap) else float(value_cap),
            margin=None if margin is None or math.isinf(margin) else float(margin),
            margin_theta=np.asarray(theta_ref, dtype=float),
            margin_sigma=np.asarray(sigma_ref, dtype=float),
            norm_mode=norm_mode,
        )

    @property
    def kappa(self) -> float:
        """Overestimation factor recorded for the linear surrogate."""
        return math.sqrt(self.problem.effective_dim)

    # -- geometry ---------------------------------------------------------

    def _cut_rows(self):
        """Extra inequality rows implementing the value cap and margins."""
        problem = self.problem
        maps = problem.reduced_maps()
        theta = self.margin_theta
        sig_sqrt = (
            np.sqrt(np.clip(np.diag(self.margin_sigma), 0.0, None))
            if self.margin_sigma is not None
            else None
        )
        rows = []
        rhs = []
        n = problem.reduced_polytope().dim
        epi = problem.epigraph_var
        if self.margin is not None:
            if self.norm_mode != "linear_surrogate":
                raise InputValidationError(
                    "exact_l2 margins define a nonconvex set; no polyhedral form"
                )
            for A_red, c_red, kappa_k in maps:
                u_coef, u_const = _surrogate_terms(problem, A_red, c_red, sig_sqrt)
                lin = A_red.T @ theta
                const = float(theta @ c_red)
                if kappa_k > 0.0:
                    if self.value_cap is None:
                        continue  # the epigraph coordinate absorbs the margin
                    rows.append(-lin - self.margin * u_coef)
                    rhs.append(kappa_k * self.value_cap + const + self.margin * u_const)
                else:
                    rows.append(-lin - self.margin * u_coef)
                    rhs.append(const + self.margin * u_const)
        if self.value_cap is not None and epi is None:
            rows.append(problem.objective[problem.kept_vars()])
            rhs.append(self.value_cap)
        if self.value_cap is not None and epi is not None and self.margin is None:
            # A bare value cap on an epigraph problem would have to bound the
            # epigraph coordinate through the robust constraints themselves;
            # without a margin there is no linear row to add.
            pass
        if not rows:
            return None
        return np.array(rows), np.array(rhs)

    def polytope(self) -> Polytope:
        """Polyhedral realization over the kept decision variables."""
        if "poly" in self._cache:
            return self._cache["poly"]
        if self.kind == "points":
            raise InputValidationError("a point-set subspace has no polyhedral form")
        if self.kind == "polytope":
            poly = Polytope(self.explicit_G, self.explicit_h, self.explicit_nonneg)
        else:
            poly = self.problem.reduced_polytope()
            if self.kind == "cuts":
                extra = self._cut_rows()
                if extra is not None:
                    poly = poly.with_rows(*extra)
        self._cache["poly"] = poly
        return poly

    def contains_reduced(self, y, tol: float = 1e-9) -> bool:
        """Direct membership test for a point in the reduced space.

        Works in both norm modes (this is the sampled-feasibility check the
        nonconvex exact_l2 mode is restricted to).
        """
        y = np.asarray(y, dtype=float)
        if self.kind == "points":
            return bool(np.any(np.linalg.norm(self.points - y, axis=1) <= tol))
        if self.kind == "polytope":
            return self.polytope().contains(y, tol)
        if not self.problem.reduced_polytope().contains(y, tol):
            return False
        if self.kind == "full":
            return True
        problem = self.problem
        maps = problem.reduced_maps()
        theta = self.margin_theta
        factor = cholesky_psd(self.margin_sigma)
        sig_sqrt = np.sqrt(np.clip(np.diag(self.margin_sigma), 0.0, None))
        lower_epi = -np.inf
        for A_red, c_red, kappa_k in maps:
            v = A_red @ y + c_red
            if self.norm_mode == "linear_surrogate":
                norm_val = float(sig_sqrt @ np.abs(v))
            else:
                norm_val = float(np.linalg.norm(factor.L.T @ v))
            g_val = float(theta @ v)
            margin = self.margin if self.margin is not None else np.inf
            if kappa_k > 0.0:
                lower_epi = max(lower_epi, (-margin * norm_val - g_val) / kappa_k)
            else:
                if margin is not np.inf and g_val < -margin * norm_val - tol:
                    return False
        if self.value_cap is not None:
            epi = problem.epigraph_var
            if epi is None:
                keep = problem.kept_vars()
                if float(problem.objective[keep] @ y) > self.value_cap + tol:
                    return False
            elif lower_epi > -np.inf:
                gamma = problem.objective[epi]
                base = float(problem.objective[problem.kept_vars()] @ y)
                if base + gamma * lower_epi > self.value_cap + tol:
                    return False
        return True

    def describe(self) -> dict:
        out = {"kind": self.kind, "norm_mode": self.norm_mode}
        if self.value_cap is not None:
            out["value_cap"] = self.value_cap
        if self.margin is not None:
            out["margin"] = self.margin
        if self.kind == "cuts":
            out["kappa"] = self.kappa
        if self.kind == "points":
            out["points"] = self.points.tolist()
        return out


# ---------------------------------------------------------------------------
# Frank-Wolfe engine (batched; single solves are batches of one)
# ---------------------------------------------------------------------------

def _bisect_step(linD, UdotMD, MD2, U2, weight, t_max):
    """Exact line search on t in [0, t_max] for p·t + w*sqrt(q(t)) with
    q(t) = U2 + 2 t UdotMD + t^2 MD2.  Vectorized over rows.

    Stationarity p*sqrt(q) = -w(B + A t) squares to a quadratic in t; both
    roots plus the endpoint are evaluated directly and the best one wins,
    which sidesteps every sign/degeneracy case analysis.
    """
    p, B, A = linD, UdotMD, MD2
    w = weight

    def phi(t):
        q = np.maximum(U2 + 2.0 * B * t + A * t * t, 0.0)
        return p * t + w * np.sqrt(q)

    with np.errstate(all="ignore"):
        d2 = p * p - w * w * A
        disc = B * B - A * (p * p * U2 - w * w * B * B) / d2
        sq = np.sqrt(np.maximum(disc, 0.0))
        r1 = (-B - sq) / A
        r2 = (-B + sq) / A
        # A == 0 (direction invisible to the norm): single candidate root.
        r3 = (w * w * B * B / np.maximum(p * p, 1e-300) - U2) / np.where(
            np.abs(B) > 1e-300, 2.0 * B, 1.0
        )
    cands = [np.clip(np.nan_to_num(r, nan=0.0, posinf=0.0, neginf=0.0), 0.0, t_max)
             for r in (r1, r2, r3)]
    cands.append(t_max.astype(float))
    best_t = cands[0]
    best_v = phi(best_t)
    for t in cands[1:]:
        v = phi(t)
        take = v < best_v
        best_t = np.where(take, t, best_t)
        best_v = np.where(take, v, best_v)
    return best_t


def _fw_batch(
    V: np.ndarray,
    M: np.ndarray,
    b: np.ndarray,
    lin: np.ndarray,
    weight: float,
    tol: float,
    max_iters: int,
    offsets: np.ndarray | None = None,
    sign_tol: float | None = None,
):
    """Pairwise Frank-Wolfe over the vertex table V for a batch of linear
    terms.

    Minimizes ``lin_i @ y + offsets_i + weight * ||M y + b||`` for each row
    i.  Each step moves weight from the worst active vertex to the oracle
    vertex (pairwise steps avoid the O(1/k) zig-zag tail of the vanilla
    method near non-vertex optima).  Returns (value, lower_bound,
    iterations, converged, points).  When ``sign_tol`` is given, a row also
    finishes as soon as its sign against ``-sign_tol`` is certified
    (membership counting needs only the sign).
    """
    B, n = lin.shape
    nv = V.shape[0]
    offsets = np.zeros(B) if offsets is None else offsets
    VT = V.T
    start = np.argmin(lin @ VT, axis=1)
    Wgt = np.zeros((B, nv))
    Wgt[np.arange(B), start] = 1.0
    Y = V[start].copy()
    U = Y @ M.T + b
    value = np.einsum("ij,ij->i", lin, Y) + weight * np.linalg.norm(U, axis=1) + offsets
    lower = np.full(B, -np.inf)
    iters = np.zeros(B, dtype=int)
    converged = np.zeros(B, dtype=bool)
    active = np.ones(B, dtype=bool)

    for it in range(max_iters):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        if (it + 1) % 64 == 0:  # refresh against drift of incremental updates
            Y[idx] = Wgt[idx] @ V
            U[idx] = Y[idx] @ M.T + b
        Ya = Y[idx]
        Ua = U[idx]
        lina = lin[idx]
        nrm = np.linalg.norm(Ua, axis=1)
        dir_u = np.where(nrm[:, None] > 0, Ua / np.maximum(nrm, 1e-300)[:, None], 0.0)
        grad = lina + weight * (dir_u @ M)
        scores = grad @ VT
        jfw = np.argmin(scores, axis=1)
        S = V[jfw]
        hcur = np.einsum("ij,ij->i", lina, Ya) + weight * nrm + offsets[idx]
        gap = np.einsum("ij,ij->i", grad, Ya - S)
        lower[idx] = np.maximum(lower[idx], hcur - gap)
        value[idx] = hcur
        iters[idx] = it + 1

        done = gap <= tol * (1.0 + np.abs(hcur))
        converged[idx] |= done
        finished = done.copy()
        if sign_tol is not None:
            finished |= hcur < -sign_tol  # certified negative (value is an UB)
            finished |= lower[idx] >= -sign_tol  # certified above the threshold
        if np.all(finished):
            active[idx] = False
            continue

        cont = ~finished
        ic = idx[cont]
        away_scores = np.where(Wgt[ic] > 1e-15, scores[cont], -np.inf)
        ja = np.argmax(away_scores, axis=1)
        D = S[cont] - V[ja]
        t_max = Wgt[ic, ja]
        MD = D @ M.T
        linD = np.einsum("ij,ij->i", lina[cont], D)
        UdotMD = np.einsum("ij,ij->i", Ua[cont], MD)
        MD2 = np.einsum("ij,ij->i", MD, MD)
        U2 = np.einsum("ij,ij->i", Ua[cont], Ua[cont])
        t = _bisect_step(linD, UdotMD, MD2, U2, weight, t_max)
        Wgt[ic, jfw[cont]] += t
        Wgt[ic, ja] = np.maximum(Wgt[ic, ja] - t, 0.0)
        Y[ic] = Ya[cont] + t[:, None] * D
        U[ic] = Ua[cont] + t[:, None] * MD
        active[idx[finished]] = False
        # A zero step means the line search cannot improve this row any
        # further; spending more oracle calls on it is pointless.
        active[ic[t <= 0.0]] = False

    # Final value refresh for rows that ran out of budget, then reconcile
    # the convergence flags against the final certified gap (a row that
    # stalled exactly at its optimum is converged even though the in-loop
    # check never fired).
    rest = np.flatnonzero(active)
    if rest.size:
        Ur = Y[rest] @ M.T + b
        value[rest] = (
            np.einsum("ij,ij->i", lin[rest], Y[rest])
            + weight * np.linalg.norm(Ur, axis=1)
            + offsets[rest]
        )
    converged |= value - lower <= tol * (1.0 + np.abs(value))
    return value, lower, iters, converged, Y


def _fw_single_lp(poly, M, b, lin, weight, offset, tol, max_iters):
    """Frank-Wolfe with the simplex LP as oracle (domains too large for a
    vertex table)."""
    y, _ = poly.lp(lin)
    u = M @ y + b
    best_lb = -np.inf
    it = 0
    for it in range(1, max_iters + 1):
        nrm = float(np.linalg.norm(u))
        grad = lin + (weight * (M.T @ (u / nrm)) if nrm > 0 else 0.0)
        s, _ = poly.lp(grad)
        hcur = float(lin @ y) + weight * nrm + offset
        gap = float(grad @ (y - s))
        best_lb = max(best_lb, hcur - gap)
        if gap <= tol * (1.0 + abs(hcur)):
            return SolveDiagnostics(hcur, y, best_lb, hcur - best_lb, it, True)
        d = s - y
        md = M @ d
        t = _bisect_step(
            np.array([float(lin @ d)]),
            np.array([float(u @ md)]),
            np.array([float(md @ md)]),
            np.array([float(u @ u)]),
            weight,
            np.array([1.0]),
        )[0]
        y = y + t * d
        u = u + t * md
    hcur = float(lin @ y) + weight * float(np.linalg.norm(u)) + offset
    return SolveDiagnostics(
        hcur, y, best_lb, hcur - best_lb, it, False, warning="iteration budget exhausted"
    )


def _psg_solve(poly, M, b, lin, weight, offset, tol, max_iters):
    """Projected subgradient for plain capped-simplex domains."""
    if poly.rows != 1 or not np.all(poly.nonneg):
        raise InputValidationError(
            "projected_subgradient requires a plain simplex domain"
        )
    row = poly.G[0]
    if np.any(row <= 0) or np.max(row) - np.min(row) > 1e-12 * max(np.max(row), 1.0):
        raise InputValidationError(
            "projected_subgradient requires a uniform simplex row"
        )
    radius = float(poly.h[0] / row[0])
    y = np.zeros(poly.dim)
    best_y = y
    best = float(lin @ y) + weight * float(np.linalg.norm(M @ y + b))
    for k in range(1, max_iters + 1):
        u = M @ y + b
        nrm = float(np.linalg.norm(u))
        g = lin + (weight * (M.T @ (u / nrm)) if nrm > 0 else 0.0)
        step = radius / (math.sqrt(k) * max(1.0, float(np.linalg.norm(g))))
        y = project_simplex(y - step * g, radius)
        val = float(lin @ y) + weight * float(np.linalg.norm(M @ y + b))
        if val < best:
            best, best_y = val, y
    # Certificate at the incumbent via one oracle call.
    u = M @ best_y + b
    nrm = float(np.linalg.norm(u))
    g = lin + (weight * (M.T @ (u / nrm)) if nrm > 0 else 0.0)
    s, sval = poly.lp(g)
    gap = float(g @ (best_y - s))
    return SolveDiagnostics(
        best + offset,
        best_y,
        best + offset - gap,
        gap,
        max_iters,
        gap <= max(tol * (1.0 + abs(best)), 1e-6),
    )


def _barrier_norm_solve(poly, M, b, lin, weight, offset, tol):
    """Certified solve of lin·y + weight*||M y + b|| via the interior-point
    engine on the epigraph reformulation."""
    y0_aff, N, reduced = poly.equality_presolve()
    if N.shape[1] == 0:
        val = float(lin @ y0_aff) + weight * float(np.linalg.norm(M @ y0_aff + b)) + offset
        return SolveDiagnostics(val, y0_aff, val, 0.0, 0, True)
    z0 = reduced.interior_point()
    if z0 is None:
        raise EmptyDomainError("barrier solve: domain has an empty interior")
    Mz = M @ N
    bz = M @ y0_aff + b
    linz = N.T @ lin
    # Variables (z, t): minimize linz·z + weight*t, ||(Mz z + bz, eps)|| <= t.
    # The constant eps row keeps the cone away from complete collapse when
    # the optimal norm is zero; it perturbs the value by at most weight*eps.
    nz = reduced.dim
    perturb = 1e-12
    Mp = np.vstack([Mz, np.zeros((1, nz))])
    bp = np.concatenate([bz, [perturb]])
    c = np.concatenate([linz, [weight]])
    soc = [
        (
            np.hstack([Mp, np.zeros((Mp.shape[0], 1))]),
            bp,
            np.concatenate([np.zeros(nz), [1.0]]),
            0.0,
        )
    ]
    G2 = np.hstack([reduced.G, np.zeros((reduced.rows, 1))])
    t0 = float(np.linalg.norm(Mp @ z0 + bp)) * 1.5 + 1.0
    x0 = np.concatenate([z0, [t0]])
    res = solve_socp(c, soc, G2, reduced.h, x0, tol=tol)
    y = y0_aff + N @ res.x[:nz]
    val = float(lin @ y) + weight * float(np.linalg.norm(M @ y + b)) + offset
    gap = res.gap + weight * perturb
    return SolveDiagnostics(val, y, val - gap, gap, res.iterations, res.converged)


_VERTEX_LIMIT = 3000


def _norm_solve(poly, M, b, lin, weight, offset, cfg: SolverConfig) -> SolveDiagnostics:
    if cfg.method == "barrier":
        return _barrier_norm_solve(poly, M, b, lin, weight, offset, cfg.tol)
    if cfg.method == "projected_subgradient":
        return _psg_solve(poly, M, b, lin, weight, offset, cfg.tol, cfg.max_iters)
    try:
        V = poly.vertices()
        use_table = V.shape[0] <= _VERTEX_LIMIT
    except InputValidationError:
        use_table = False
    if not use_table:
        return _fw_single_lp(poly, M, b, lin, weight, offset, cfg.tol, cfg.max_iters)
    value, lower, iters, converged, Y = _fw_batch(
        V,
        M,
        b,
        lin[None, :],
        weight,
        cfg.tol,
        cfg.max_iters,
        offsets=np.array([offset]),
    )
    warn = None if converged[0] else "iteration budget exhausted"
    return SolveDiagnostics(
        float(value[0]),
        Y[0],
        float(lower[0]),
        float(value[0] - lower[0]),
        int(iters[0]),
        bool(converged[0]),
        warning=warn,
    )


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def solve_linear_plus_norm(
    domain: Subspace,
    linear,
    norm_weight: float,
    chol: CholFactor,
    smap,
    cfg: SolverConfig | None = None,
) -> SolveDiagnostics:
    """Minimize ``linear @ y + norm_weight * ||Sigma^{1/2}(A y + c)||`` over
    the subspace.

    ``smap`` is the affine sensitivity pair (A, c) in the reduced decision
    space; ``chol`` factors Sigma.  The reported value is a feasible upper
    bound; ``lower_bound``/``gap`` certify how far it can be from optimal.
    """
    cfg = cfg or SolverConfig()
    if norm_weight < 0:
        raise InputValidationError("norm_weight must be nonnegative")
    A, c = smap
    A = np.atleast_2d(np.asarray(A, dtype=float))
    c = np.asarray(c, dtype=float)
    lin = np.asarray(linear, dtype=float)
    M = chol.L.T @ A
    b = chol.L.T @ c
    if domain.kind == "points":
        pts = domain.points
        vals = pts @ lin + norm_weight * np.linalg.norm(pts @ M.T + b, axis=1)
        j = int(np.argmin(vals))
        return SolveDiagnostics(float(vals[j]), pts[j], float(vals[j]), 0.0, 0, True)
    return _norm_solve(domain.polytope(), M, b, lin, norm_weight, 0.0, cfg)


def psi(
    problem: ProblemSpec,
    subspace: Subspace,
    sigma,
    mu: float,
    eps,
    cfg: SolverConfig | None = None,
) -> float:
    """Membership objective: minimum over all constraints and both error
    signs of ``g_k(y, +-eps) + mu * r_k(y; Sigma)`` over the subspace.

    The error is inside the tolerance set exactly when this is >= 0.
    """
    eps = np.asarray(eps, dtype=float)
    if eps.shape != (problem.d,):
        raise InputValidationError("psi: error vector dimension mismatch")
    for j in problem.dummy_coords:
        if abs(eps[j]) > 1e-12:
            raise InputValidationError("psi: dummy coordinates of eps must be zero")
    if mu < 0:
        raise InputValidationError("psi: mu must be nonnegative")
    factor = sigma if isinstance(sigma, CholFactor) else cholesky_psd(sigma)
    best = np.inf
    for A_red, c_red, _ in problem.reduced_maps():
        lin = A_red.T @ eps
        offset = float(eps @ c_red)
        for sgn in (1.0, -1.0):
            diag = solve_linear_plus_norm(
                subspace, sgn * lin, mu, factor, (A_red, c_red), cfg
            )
            best = min(best, diag.value + sgn * offset)
    return float(best)


def in_S(
    problem: ProblemSpec,
    subspace: Subspace,
    sigma,
    mu: float,
    eps,
    cfg: SolverConfig | None = None,
) -> bool:
    """True when the error lies in the tolerance set (psi >= -membership
    tolerance; boundary values count as members)."""
    return psi(problem, subspace, sigma, mu, eps, cfg) >= -MEMBERSHIP_TOL


# ---------------------------------------------------------------------------
# robust counterpart
# ---------------------------------------------------------------------------

def _residual_pieces(problem: ProblemSpec, theta, factor, lam):
    """Objective pieces of the epigraph-eliminated robust counterpart."""
    (A_red, c_red, kappa) = problem.reduced_maps()[0]
    epi = problem.epigraph_var
    gamma = float(problem.objective[epi])
    keep = problem.kept_vars()
    rho = problem.objective[keep]
    lin = -(gamma / kappa) * (A_red.T @ theta) + rho
    weight = gamma * lam / kappa
    M = factor.L.T @ A_red
    b = factor.L.T @ c_red
    const = -(gamma / kappa) * float(theta @ c_red)
    return lin, weight, M, b, const, A_red, c_red, kappa


def _assemble_epigraph(problem, y_red, theta, factor, lam, A_red, c_red, kappa):
    v = A_red @ y_red + c_red
    r = float(np.linalg.norm(factor.L.T @ v))
    x0 = (lam * r - float(theta @ v)) / kappa
    x = np.zeros(problem.m)
    x[problem.kept_vars()] = y_red
    x[problem.epigraph_var] = x0
    return x


def _solve_robust_general(problem, theta, factor, lam, cfg):
    """Constraint-form robust counterpart via the interior-point engine."""
    m = problem.m
    socs = []
    for smap in problem.constraints:
        A = np.asarray(smap.A, dtype=float)
        c = np.asarray(smap.c, dtype=float)
        socs.append((lam * (factor.L.T @ A), lam * (factor.L.T @ c), A.T @ theta, float(theta @ c)))
    G = np.atleast_2d(np.asarray(problem.domain.G, dtype=float))
    if G.size == 0:
        G = G.reshape(0, m)
    h = np.asarray(problem.domain.h, dtype=float)
    nonneg = np.asarray(problem.domain.nonneg, dtype=bool)
    Gl = np.vstack([G, -np.eye(m)[nonneg]])
    hl = np.concatenate([h, np.zeros(int(nonneg.sum()))])

    # Phase 1: maximize the least slack to find a strict interior point.
    norms = np.maximum(np.linalg.norm(Gl, axis=1), 1e-12)
    Gp = np.hstack([Gl, norms[:, None]])
    Gp = np.vstack([Gp, np.concatenate([np.zeros(m), [1.0]])])
    hp = np.concatenate([hl, [1.0]])
    socp1 = [
        (np.hstack([M2, np.zeros((M2.shape[0], 1))]), m2, np.concatenate([a2, [-1.0]]), b2)
        for (M2, m2, a2, b2) in socs
    ]
    base = problem.reduced_polytope()
    y_int = base.interior_point()
    if y_int is None:
        raise EmptyDomainError("solve_robust: domain has no interior")
    x_int = np.zeros(m)
    x_int[problem.kept_vars()] = y_int
    if problem.epigraph_var is not None:
        x_int[problem.epigraph_var] = 0.0
    s0 = min(
        float(a2 @ x_int + b2 - np.linalg.norm(M2 @ x_int + m2)) for (M2, m2, a2, b2) in socs
    )
    s0 = min(s0, float(np.min((hl - Gl @ x_int) / norms))) - 1.0
    z0 = np.concatenate([x_int, [s0]])
    cost1 = np.concatenate([np.zeros(m), [-1.0]])
    res1 = solve_socp(cost1, socp1, Gp, hp, z0, tol=1e-9)
    if res1.x[-1] <= 1e-9:
        if not res1.converged:
            raise SolverNonConvergenceError(
                "solve_robust: feasibility phase inconclusive",
                best_point=res1.x[:m],
                best_value=float(problem.objective @ res1.x[:m]),
            )
        raise RobustInfeasibleError(
            f"solve_robust: no robust-feasible point at scale {lam}"
        )
    # Main solve from the interior point found by phase 1.
    shrink = res1.x.copy()
    x_start = shrink[:m]
    res = solve_socp(problem.objective, socs, Gl, hl, x_start, tol=cfg.tol)
    if not res.converged:
        raise SolverNonConvergenceError(
            "solve_robust: interior-point engine did not converge",
            best_point=res.x,
            best_value=res.value,
        )
    return res.x, float(problem.objective @ res.x)


def solve_robust(problem: ProblemSpec, theta, sigma, lam: float, cfg: SolverConfig | None = None):
    """Solve the robust counterpart at scale ``lam``.

    Minimizes f over the domain subject to ``g_k(x, theta) - lam * r_k(x;
    Sigma) >= 0`` (the support-function form of the ellipsoidal worst
    case).  Returns ``(x, value)``.  Epigraph-variable problems with a
    single constraint are reduced analytically and handed to the
    configured first-order method; everything else goes through the
    interior-point engine.
    """
    cfg = cfg or SolverConfig()
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (problem.d,):
        raise InputValidationError("solve_robust: theta dimension mismatch")
    if lam < 0:
        raise InputValidationError("solve_robust: lambda must be nonnegative")
    factor = sigma if isinstance(sigma, CholFactor) else cholesky_psd(sigma)
    check_dummy_covariance(problem, factor.L @ factor.L.T)

    if problem.epigraph_var is not None and problem.num_constraints == 1:
        lin, weight, M, b, const, A_red, c_red, kappa = _residual_pieces(
            problem, theta, factor, lam
        )
        if kappa <= 0:
            raise InputValidationError(
                "solve_robust: epigraph variable carries no constraint weight"
            )
        poly = problem.reduced_polytope()
        diag = _norm_solve(poly, M, b, lin, weight, 0.0, cfg)
        if not diag.converged:
            raise SolverNonConvergenceError(
                "solve_robust: first-order method did not converge",
                best_point=_assemble_epigraph(
                    problem, diag.point, theta, factor, lam, A_red, c_red, kappa
                ),
                best_value=diag.value + const,
            )
        x = _assemble_epigraph(problem, diag.point, theta, factor, lam, A_red, c_red, kappa)
        return x, float(problem.objective @ x)

    return _solve_robust_general(problem, theta, factor, lam, cfg)
