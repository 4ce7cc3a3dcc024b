"""Self-contained numeric kernels.

Chi-distribution CDF/quantile, rank-revealing PSD Cholesky, reproducible
multivariate-normal sampling, a dense simplex LP solver, Euclidean
projection onto the capped simplex, and empirical quantiles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox, SeedSequence
from scipy import special

from .errors import (
    InputValidationError,
    LPInfeasibleError,
    LPUnboundedError,
)

__all__ = [
    "RngStream",
    "CholFactor",
    "chi_cdf",
    "chi_quantile",
    "cholesky_psd",
    "sample_mvn",
    "sample_mvn_batch",
    "solve_lp",
    "project_simplex",
    "empirical_quantile",
]


# ---------------------------------------------------------------------------
# chi distribution
# ---------------------------------------------------------------------------

def chi_cdf(dof: int, x: float) -> float:
    """P(||Z|| <= x) for Z standard normal in R^dof.

    Computed through the regularized lower incomplete gamma function
    P(dof/2, x^2/2); absolute error is well below 1e-10.
    """
    if dof < 1:
        raise InputValidationError("chi_cdf: dof must be a positive integer")
    if x < 0:
        raise InputValidationError("chi_cdf: x must be nonnegative")
    if x == 0.0:
        return 0.0
    return float(special.gammainc(dof / 2.0, 0.5 * x * x))


def chi_quantile(dof: int, p: float) -> float:
    """Inverse of :func:`chi_cdf` in its second argument.

    ``chi_quantile(dof, 0) == 0``; ``p >= 1`` is rejected because the
    quantile is unbounded there.
    """
    if dof < 1:
        raise InputValidationError("chi_quantile: dof must be a positive integer")
    if not 0.0 <= p:
        raise InputValidationError("chi_quantile: p must lie in [0, 1)")
    if p >= 1.0:
        raise InputValidationError("chi_quantile: quantile unbounded at p >= 1")
    if p == 0.0:
        return 0.0
    return float(math.sqrt(2.0 * special.gammaincinv(dof / 2.0, p)))


# ---------------------------------------------------------------------------
# random streams
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RngStream:
    """Splittable random stream addressed by (seed, path).

    Identical (seed, path) pairs reproduce bit-identical draws; distinct
    paths are statistically independent.  Workers can therefore be keyed
    by (trial, stage, block) indices without any coordination, and results
    do not depend on scheduling order.
    """

    seed: int
    path: tuple = ()

    def __post_init__(self):
        for i in self.path:
            if int(i) < 0:
                raise InputValidationError("RngStream: path indices must be nonnegative")

    def spawn(self, *indices: int) -> "RngStream":
        """Child stream extending this stream's path."""
        return RngStream(self.seed, tuple(self.path) + tuple(int(i) for i in indices))

    def generator(self) -> Generator:
        """Fresh counter-based generator for this (seed, path)."""
        ss = SeedSequence(self.seed, spawn_key=tuple(int(i) for i in self.path))
        return Generator(Philox(ss))


# ---------------------------------------------------------------------------
# PSD factorization and Gaussian sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CholFactor:
    """Lower-triangular factor L with L L^T equal to the input matrix.

    Zero-variance coordinates yield zero rows, so degenerate (dummy)
    directions never require inverting the matrix.
    """

    L: np.ndarray
    rank: int

    @property
    def dim(self) -> int:
        return self.L.shape[0]


def cholesky_psd(sigma: np.ndarray) -> CholFactor:
    """Rank-revealing Cholesky factorization of a symmetric PSD matrix.

    Pivots below ``1e-12 * trace`` are treated as exact zeros (the whole
    column is zeroed); a pivot below ``-1e-8 * trace`` signals a non-PSD
    input.
    """
    a = np.asarray(sigma, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputValidationError("cholesky_psd: input must be a square matrix")
    scale = max(float(np.abs(a).max(initial=0.0)), 1.0)
    if np.abs(a - a.T).max(initial=0.0) > 1e-8 * scale:
        raise InputValidationError("cholesky_psd: input must be symmetric")
    a = 0.5 * (a + a.T)
    d = a.shape[0]
    trace = max(float(np.trace(a)), 0.0)
    zero_tol = 1e-12 * max(trace, 1e-300)
    neg_tol = -1e-8 * max(trace, 1e-300)
    L = np.zeros((d, d))
    rank = 0
    for j in range(d):
        pivot = a[j, j] - L[j, :j] @ L[j, :j]
        if pivot < neg_tol:
            raise InputValidationError(
                f"cholesky_psd: matrix is not positive semidefinite (pivot {pivot:.3e})"
            )
        if pivot <= zero_tol:
            continue
        L[j, j] = math.sqrt(pivot)
        rank += 1
        if j + 1 < d:
            L[j + 1 :, j] = (a[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    return CholFactor(L=L, rank=rank)


def sample_mvn(factor: CholFactor, rng: RngStream) -> np.ndarray:
    """One draw L z with z i.i.d. standard normal from the stream."""
    z = rng.generator().standard_normal(factor.dim)
    return factor.L @ z


def sample_mvn_batch(factor: CholFactor, rng: RngStream, count: int) -> np.ndarray:
    """``count`` draws as rows; the vectorized form of :func:`sample_mvn`."""
    if count < 0:
        raise InputValidationError("sample_mvn_batch: count must be nonnegative")
    z = rng.generator().standard_normal((count, factor.dim))
    return z @ factor.L.T


# ---------------------------------------------------------------------------
# dense LP (primal simplex, Bland's rule)
# ---------------------------------------------------------------------------

def _domain_arrays(polyhedron):
    if hasattr(polyhedron, "G"):
        G, h, nonneg = polyhedron.G, polyhedron.h, polyhedron.nonneg
    else:
        G, h, nonneg = polyhedron
    G = np.atleast_2d(np.asarray(G, dtype=float))
    h = np.atleast_1d(np.asarray(h, dtype=float))
    nonneg = np.asarray(nonneg, dtype=bool)
    if G.size == 0:
        G = G.reshape(0, nonneg.size)
    if G.shape[0] != h.size or G.shape[1] != nonneg.size:
        raise InputValidationError("solve_lp: inconsistent polyhedron arrays")
    return G, h, nonneg


_PIV_TOL = 1e-11


def _simplex_phase(T, basis, ncols, max_iter):
    """Run Bland-rule pivots in place; returns False if unbounded."""
    r = T.shape[0] - 1
    for _ in range(max_iter):
        enter = -1
        for j in range(ncols):
            if T[r, j] < -_PIV_TOL:
                enter = j
                break
        if enter < 0:
            return True
        ratio_best = np.inf
        leave = -1
        for i in range(r):
            if T[i, enter] > _PIV_TOL:
                ratio = T[i, -1] / T[i, enter]
                if ratio < ratio_best - 1e-12 or (
                    abs(ratio - ratio_best) <= 1e-12
                    and (leave < 0 or basis[i] < basis[leave])
                ):
                    ratio_best = ratio
                    leave = i
        if leave < 0:
            return False
        piv = T[leave, enter]
        T[leave] /= piv
        for i in range(r + 1):
            if i != leave and abs(T[i, enter]) > 0.0:
                T[i] -= T[i, enter] * T[leave]
        basis[leave] = enter
    raise SolverLoopGuard("simplex iteration limit exceeded")


class SolverLoopGuard(RuntimeError):
    pass


def solve_lp(cost, polyhedron):
    """Minimize ``cost @ x`` over ``{x : G x <= h, x_i >= 0 for flagged i}``.

    Dense two-phase primal simplex with Bland's anti-cycling rule; returns
    a basic (vertex) solution and its objective value.  Raises
    :class:`LPInfeasibleError` / :class:`LPUnboundedError`.
    """
    G, h, nonneg = _domain_arrays(polyhedron)
    c = np.asarray(cost, dtype=float)
    n = c.size
    if nonneg.size != n:
        raise InputValidationError("solve_lp: cost dimension mismatch")
    r = G.shape[0]

    # Column layout: one column per variable, plus a negated column per free
    # variable (x = x+ - x-), plus r slack columns, plus phase-1 artificials.
    free = np.flatnonzero(~nonneg)
    nsplit = n + free.size
    Aext = np.zeros((r, nsplit))
    Aext[:, :n] = G
    Aext[:, n:] = -G[:, free]
    cext = np.zeros(nsplit)
    cext[:n] = c
    cext[n:] = -c[free]

    neg_rows = h < 0
    A = np.where(neg_rows[:, None], -Aext, Aext)
    b = np.where(neg_rows, -h, h)
    slack = np.diag(np.where(neg_rows, -1.0, 1.0))
    art_rows = [int(i) for i in np.flatnonzero(neg_rows)]
    nart = len(art_rows)
    nslack_end = nsplit + r  # slack columns occupy [nsplit, nslack_end)

    ncols = nslack_end + nart
    T = np.zeros((r + 1, ncols + 1))
    T[:r, :nsplit] = A
    T[:r, nsplit:nslack_end] = slack
    for idx, i in enumerate(art_rows):
        T[i, nslack_end + idx] = 1.0
    T[:r, -1] = b

    basis = [
        nslack_end + art_rows.index(i) if neg_rows[i] else nsplit + i
        for i in range(r)
    ]

    max_iter = 4000 + 40 * (ncols + r)

    if nart:
        # Phase 1: drive artificial variables to zero.
        T[r, nslack_end:ncols] = 1.0
        for i in range(r):
            if basis[i] >= nslack_end:
                T[r] -= T[i]
        if not _simplex_phase(T, basis, ncols, max_iter):
            raise LPInfeasibleError("solve_lp: phase-1 unbounded (internal error)")
        if T[r, -1] < -1e-8:
            raise LPInfeasibleError("solve_lp: infeasible polyhedron")
        # Pivot remaining zero-value artificials out of the basis; rows that
        # cannot be pivoted are redundant equations and are dropped.
        keep_rows = list(range(r))
        for i in range(r):
            if basis[i] >= nslack_end:
                piv_col = -1
                for j in range(nslack_end):
                    if abs(T[i, j]) > _PIV_TOL:
                        piv_col = j
                        break
                if piv_col < 0:
                    keep_rows.remove(i)
                    continue
                piv = T[i, piv_col]
                T[i] /= piv
                for k in range(r + 1):
                    if k != i and abs(T[k, piv_col]) > 0.0:
                        T[k] -= T[k, piv_col] * T[i]
                basis[i] = piv_col
        if len(keep_rows) != r:
            T = T[keep_rows + [r]]
            basis = [basis[i] for i in keep_rows]
        T[:, nslack_end:ncols] = 0.0

    # Phase 2 with the true objective.
    T[-1, :] = 0.0
    T[-1, :nsplit] = cext
    for i in range(len(basis)):
        if T[-1, basis[i]] != 0.0:
            T[-1] -= T[-1, basis[i]] * T[i]
    if not _simplex_phase(T, basis, nslack_end, max_iter):
        raise LPUnboundedError("solve_lp: objective unbounded below on polyhedron")

    xi = np.zeros(nsplit)
    for i in range(len(basis)):
        if basis[i] < nsplit:
            xi[basis[i]] = T[i, -1]
    x = xi[:n].copy()
    x[free] -= xi[n:]
    return x, float(c @ x)


# ---------------------------------------------------------------------------
# simplex projection and quantiles
# ---------------------------------------------------------------------------

def project_simplex(v: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto ``{x >= 0, sum(x) <= radius}``.

    Sorting-based thresholding; exact up to floating point.
    """
    if radius <= 0:
        raise InputValidationError("project_simplex: radius must be positive")
    v = np.asarray(v, dtype=float)
    w = np.maximum(v, 0.0)
    if w.sum() <= radius:
        return w
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - radius
    idx = np.arange(1, v.size + 1)
    cond = u - css / idx > 0
    rho = int(np.max(np.flatnonzero(cond))) + 1
    tau = css[rho - 1] / rho
    return np.maximum(v - tau, 0.0)


def empirical_quantile(values, level: float) -> float:
    """Smallest value whose empirical CDF reaches ``1 - level``.

    Returns the ``ceil((1 - level) * N)``-th smallest entry.
    """
    arr = np.asarray(list(values), dtype=float).ravel()
    if arr.size == 0:
        raise InputValidationError("empirical_quantile: empty input")
    if not 0.0 < level < 1.0:
        raise InputValidationError("empirical_quantile: level must lie in (0, 1)")
    k = int(math.ceil((1.0 - level) * arr.size - 1e-9))
    k = min(max(k, 1), arr.size)
    return float(np.partition(arr, k - 1)[k - 1])
