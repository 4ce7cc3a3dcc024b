"""Small dense barrier solver for linear objectives over second-order-cone
and linear-inequality constraints.

Used where certified high accuracy matters more than raw speed: robust
counterparts in constraint form, cross-checks of the first-order engines,
and thin test fixtures.  Problems here have a handful of cones and tens of
variables, so a straightforward log-barrier Newton method is adequate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class SocpResult:
    x: np.ndarray
    value: float
    gap: float
    iterations: int
    converged: bool


def _barrier_terms(z, socs, G, h):
    """Value, gradient and Hessian of the log barrier at z (or None if
    outside the strict interior)."""
    n = z.size
    val = 0.0
    grad = np.zeros(n)
    hess = np.zeros((n, n))
    if G is not None and G.shape[0]:
        slack = h - G @ z
        if np.any(slack <= 0):
            return None
        val -= float(np.sum(np.log(slack)))
        inv = 1.0 / slack
        grad += G.T @ inv
        hess += (G * (inv**2)[:, None]).T @ G
    for M, m, a, b in socs:
        w = float(a @ z + b)
        u = M @ z + m
        rho = w * w - float(u @ u)
        if w <= 0 or rho <= 0:
            return None
        val -= np.log(rho)
        drho = 2.0 * w * a - 2.0 * (M.T @ u)
        d2rho = 2.0 * np.outer(a, a) - 2.0 * (M.T @ M)
        grad -= drho / rho
        hess += np.outer(drho, drho) / rho**2 - d2rho / rho
    return val, grad, hess


def solve_socp(
    c,
    socs,
    G,
    h,
    x0,
    tol: float = 1e-9,
    max_newton: int = 400,
) -> SocpResult:
    """Minimize ``c @ z`` s.t. ``||M_j z + m_j|| <= a_j @ z + b_j`` and
    ``G z <= h``, starting from the strictly feasible ``x0``.

    Standard path-following log barrier; the returned ``gap`` is the
    rigorous duality-gap bound nu/t of the final central point.
    """
    c = np.asarray(c, dtype=float)
    z = np.asarray(x0, dtype=float).copy()
    socs = [
        (
            np.atleast_2d(np.asarray(M, dtype=float)),
            np.asarray(m, dtype=float),
            np.asarray(a, dtype=float),
            float(b),
        )
        for M, m, a, b in socs
    ]
    if G is not None:
        G = np.atleast_2d(np.asarray(G, dtype=float))
        h = np.asarray(h, dtype=float)
        if G.size == 0:
            G = None
    nu = 2.0 * len(socs) + (0 if G is None else G.shape[0])
    if nu == 0:
        raise ValueError("solve_socp: unconstrained problem")
    if _barrier_terms(z, socs, G, h) is None:
        raise ValueError("solve_socp: start point is not strictly feasible")

    scale = max(1.0, float(np.linalg.norm(c)))
    t = max(1.0, nu / (10.0 * scale))
    grow = 12.0
    newton_total = 0
    certified_gap = np.inf

    # Newton-decrement target for centering: lambda^2 small enough that the
    # certified duality gap (nu + 2 sqrt(nu) lambda)/t is essentially nu/t.
    decr_target = 1e-8

    def _center(t):
        """Newton-center at barrier weight t.

        Returns the final squared decrement, or None when numerical
        boundary effects stop progress before the target is reached.
        """
        nonlocal z, newton_total
        for _ in range(60):
            terms = _barrier_terms(z, socs, G, h)
            if terms is None:
                return None
            val, grad, hess = terms
            g = t * c + grad
            H = hess + 1e-13 * np.eye(z.size)
            if not (np.all(np.isfinite(H)) and np.all(np.isfinite(g))):
                return None
            try:
                step = -np.linalg.solve(H, g)
            except np.linalg.LinAlgError:
                try:
                    step = -np.linalg.solve(H + 1e-8 * np.eye(z.size), g)
                except np.linalg.LinAlgError:
                    return None
            if not np.all(np.isfinite(step)):
                return None
            decr = float(-g @ step)
            newton_total += 1
            if decr <= decr_target:
                return max(decr, 0.0)
            alpha = 1.0
            base = t * float(c @ z) + val
            for _ in range(60):
                cand = z + alpha * step
                terms2 = _barrier_terms(cand, socs, G, h)
                if terms2 is not None and (
                    t * float(c @ cand) + terms2[0] <= base - 0.25 * alpha * decr
                ):
                    break
                alpha *= 0.5
            else:
                return None
            z = z + alpha * step
            if newton_total > max_newton:
                return None
        return None

    while True:
        decr = _center(t)
        if decr is not None:
            certified_gap = (nu + 2.0 * np.sqrt(nu * decr)) / t
        converged = certified_gap <= tol * (1.0 + abs(float(c @ z)))
        if converged or decr is None or newton_total > max_newton:
            return SocpResult(
                x=z,
                value=float(c @ z),
                gap=certified_gap,
                iterations=newton_total,
                converged=bool(converged),
            )
        t *= grow
