"""Bounded-polyhedron helpers shared by the convex solvers.

A :class:`Polytope` is ``{y : G y <= h, y_i >= 0 for flagged i}``.  It
offers LP minimization, cached vertex enumeration (used as a fast linear
minimization oracle), membership tests, an interior-point finder, and a
presolve that eliminates implied equalities (needed by the barrier solver
on thin domains such as segments).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import EmptyDomainError, InputValidationError
from .numerics import solve_lp

_FEAS_TOL = 1e-9


@dataclass(eq=False)
class Polytope:
    G: np.ndarray
    h: np.ndarray
    nonneg: np.ndarray
    _vertices: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.G = np.atleast_2d(np.asarray(self.G, dtype=float))
        self.h = np.atleast_1d(np.asarray(self.h, dtype=float))
        self.nonneg = np.asarray(self.nonneg, dtype=bool)
        if self.G.size == 0:
            self.G = self.G.reshape(0, self.nonneg.size)
        if self.G.shape[0] != self.h.size or self.G.shape[1] != self.nonneg.size:
            raise InputValidationError("Polytope: inconsistent shapes")

    @property
    def dim(self) -> int:
        return self.nonneg.size

    @property
    def rows(self) -> int:
        return self.G.shape[0]

    def with_rows(self, G_extra, h_extra) -> "Polytope":
        G_extra = np.atleast_2d(np.asarray(G_extra, dtype=float))
        h_extra = np.atleast_1d(np.asarray(h_extra, dtype=float))
        return Polytope(
            np.vstack([self.G, G_extra]), np.concatenate([self.h, h_extra]), self.nonneg
        )

    def contains(self, y, tol: float = _FEAS_TOL) -> bool:
        y = np.asarray(y, dtype=float)
        if self.rows and np.any(self.G @ y > self.h + tol):
            return False
        return not np.any(y[self.nonneg] < -tol)

    def lp(self, cost):
        return solve_lp(cost, self)

    # -- vertex enumeration -------------------------------------------------

    def _all_rows(self):
        """All constraints as rows a^T y <= b (bounds included)."""
        bound_idx = np.flatnonzero(self.nonneg)
        Gb = -np.eye(self.dim)[bound_idx]
        hb = np.zeros(bound_idx.size)
        return np.vstack([self.G, Gb]), np.concatenate([self.h, hb])

    def vertices(self, cap: int = 200_000) -> np.ndarray:
        """All vertices, lexicographically sorted.

        Enumerates n-subsets of active constraints; intended for domains
        with few general rows (the subset count is capped).
        """
        if self._vertices is not None:
            return self._vertices
        A, b = self._all_rows()
        n = self.dim
        total = A.shape[0]
        if total < n:
            raise InputValidationError("Polytope.vertices: domain is unbounded")
        from math import comb

        if comb(total, n) > cap:
            raise InputValidationError(
                "Polytope.vertices: too many candidate bases for enumeration"
            )
        seen = {}
        scale = max(float(np.abs(b).max(initial=0.0)), 1.0)
        for subset in combinations(range(total), n):
            M = A[list(subset)]
            rhs = b[list(subset)]
            # Skip singular active sets.
            if abs(np.linalg.det(M)) < 1e-10:
                continue
            y = np.linalg.solve(M, rhs)
            if np.all(A @ y <= b + 1e-8 * scale):
                key = tuple(np.round(y, 9))
                seen.setdefault(key, y)
        if not seen:
            raise EmptyDomainError("Polytope.vertices: no feasible vertex found")
        verts = np.array(sorted(seen.values(), key=tuple))
        self._vertices = verts
        return verts

    def lmo(self, cost) -> np.ndarray:
        """Vertex minimizing a linear cost (linear minimization oracle)."""
        V = self.vertices()
        return V[int(np.argmin(V @ np.asarray(cost, dtype=float)))]

    # -- interior / presolve ------------------------------------------------

    def equality_presolve(self):
        """Detect implied equalities and eliminate them.

        Opposing row pairs (G_i == -G_j, h_i == -h_j) and pinned bounds
        (0 <= y_i together with a row y_i <= 0) define equalities
        ``E y = f``.  Returns ``(y0, N, reduced)`` with the affine map
        ``y = y0 + N z`` and the reduced polytope over z, expressed with
        explicit rows only (no sign flags); ``N`` has zero columns when the
        domain is a single point.
        """
        A, b = self._all_rows()
        norms = np.linalg.norm(A, axis=1)
        norms[norms == 0] = 1.0
        An = A / norms[:, None]
        bn = b / norms
        eq_rows = []
        drop = set()
        nrows = A.shape[0]
        for i in range(nrows):
            for j in range(i + 1, nrows):
                if j in drop or i in drop:
                    continue
                if (
                    np.allclose(An[i], -An[j], atol=1e-12)
                    and abs(bn[i] + bn[j]) < 1e-12
                ):
                    eq_rows.append(i)
                    drop.update((i, j))
        if not eq_rows:
            rows_only = Polytope(A, b, np.zeros(self.dim, dtype=bool))
            return np.zeros(self.dim), np.eye(self.dim), rows_only
        E = An[eq_rows]
        f = bn[eq_rows]
        y0, *_ = np.linalg.lstsq(E, f, rcond=None)
        if np.linalg.norm(E @ y0 - f) > 1e-8:
            raise EmptyDomainError("equality_presolve: inconsistent equalities")
        _, s, vt = np.linalg.svd(E)
        rank = int(np.sum(s > 1e-12 * max(s[0], 1e-300))) if s.size else 0
        N = vt[rank:].T
        keep = [i for i in range(nrows) if i not in drop]
        Gz = A[keep] @ N
        hz = b[keep] - A[keep] @ y0
        reduced = Polytope(Gz, hz, np.zeros(N.shape[1], dtype=bool))
        return y0, N, reduced

    def interior_point(self):
        """A strictly feasible point, or None when the interior is empty.

        Maximizes the smallest normalized slack via one LP.
        """
        A, b = self._all_rows()
        if A.shape[0] == 0:
            return np.zeros(self.dim)
        norms = np.linalg.norm(A, axis=1)
        norms[norms == 0] = 1.0
        # Variables (y, s): maximize s subject to A y + s * norm <= b, s <= 1.
        n = self.dim
        G2 = np.hstack([A, norms[:, None]])
        G2 = np.vstack([G2, np.concatenate([np.zeros(n), [1.0]])])
        h2 = np.concatenate([b, [1.0]])
        cost = np.concatenate([np.zeros(n), [-1.0]])
        x, _ = solve_lp(cost, (G2, h2, np.zeros(n + 1, dtype=bool)))
        if x[-1] <= 1e-11:
            return None
        return x[:n]
