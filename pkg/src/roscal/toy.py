"""Two-dimensional toy fixtures for the error-tolerance-set geometry.

A single uncertain constraint ``theta_1 y_1 + theta_2 y_2 - 2 >= 0`` over
nonnegative decisions, with the constant term carried by a dummy parameter
coordinate.  Three bounded subspace representatives whose conic hulls are
the plane, the nonnegative quadrant, and the first axis ray reproduce the
strict-inclusion chain of tolerance sets: membership only depends on a
subspace through its conic hull, so bounded stand-ins are exact.
"""

from __future__ import annotations

import numpy as np

from .model import DomainSpec, ProblemSpec, SensitivityMap, TrueModel
from .solve import SolverConfig, Subspace, psi, MEMBERSHIP_TOL

__all__ = [
    "example_problem",
    "subspace_plane",
    "subspace_quadrant",
    "subspace_axis",
    "membership_tables",
]


def example_problem():
    """min y1 + y2 s.t. theta_1 y1 + theta_2 y2 - 2 >= 0 on a box domain."""
    A = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    c = np.array([-2.0, 0.0, 0.0])
    problem = ProblemSpec(
        m=2,
        d=3,
        objective=np.array([1.0, 1.0]),
        constraints=(SensitivityMap(A=A, c=c),),
        domain=DomainSpec(
            G=np.vstack([np.eye(2)]), h=np.array([3.0, 3.0]), nonneg=(True, True)
        ),
        dummy_coords=frozenset({0}),
    )
    model = TrueModel(
        theta_star=np.array([1.0, 2.0, 1.0]),
        sigma_star=np.diag([0.0, 1.0, 1.0]),
    )
    return problem, model


def _axis_map_problem():
    """Variant whose sensitivity map is the identity on the error plane
    (no constant term); the membership geometry of the figure-style toy."""
    A = np.array([[1.0, 0.0], [0.0, 1.0]])
    problem = ProblemSpec(
        m=2,
        d=2,
        objective=np.array([1.0, 1.0]),
        constraints=(SensitivityMap(A=A, c=np.zeros(2)),),
        domain=DomainSpec(G=np.eye(2), h=np.array([1.0, 1.0]), nonneg=(True, True)),
    )
    return problem


def subspace_plane(problem=None) -> Subspace:
    """Bounded representative of the whole plane (cross polytope)."""
    problem = problem or _axis_map_problem()
    G = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
    return Subspace.from_polytope(problem, G, np.ones(4), (False, False))


def subspace_quadrant(problem=None) -> Subspace:
    """Bounded representative of the nonnegative quadrant (unit box)."""
    problem = problem or _axis_map_problem()
    return Subspace.from_polytope(problem, np.eye(2), np.ones(2), (True, True))


def subspace_axis(problem=None) -> Subspace:
    """Bounded representative of the first axis ray (unit segment)."""
    problem = problem or _axis_map_problem()
    G = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    return Subspace.from_polytope(problem, G, np.array([1.0, 0.0, 0.0]), (True, False))


def membership_tables(scale: float = 1.0, half_width: float = 2.5, step: float = 0.5):
    """Membership of a grid of errors in the three tolerance sets.

    Returns a dict with the grid, one boolean table per subspace, and the
    verified strict-inclusion chain plane <= quadrant <= axis.
    """
    problem = _axis_map_problem()
    sigma = np.eye(2)
    cfg = SolverConfig(method="barrier", tol=1e-10)
    spaces = {
        "plane": subspace_plane(problem),
        "quadrant": subspace_quadrant(problem),
        "axis": subspace_axis(problem),
    }
    ticks = np.round(np.arange(-half_width, half_width + step / 2, step), 10)
    tables = {name: [] for name in spaces}
    for name, space in spaces.items():
        for ex in ticks:
            row = []
            for ey in ticks:
                val = psi(problem, space, sigma, scale, np.array([ex, ey]), cfg)
                row.append(bool(val >= -MEMBERSHIP_TOL))
            tables[name].append(row)
    plane = np.array(tables["plane"])
    quadrant = np.array(tables["quadrant"])
    axis = np.array(tables["axis"])
    chain_ok = bool(np.all(~plane | quadrant) and np.all(~quadrant | axis))
    strict = bool(np.any(quadrant & ~plane) and np.any(axis & ~quadrant))
    return {
        "ticks": ticks.tolist(),
        "scale": scale,
        "tables": {k: np.array(v).tolist() for k, v in tables.items()},
        "counts": {k: int(np.sum(v)) for k, v in tables.items()},
        "chain_ok": chain_ok,
        "strictly_nested": strict,
    }
