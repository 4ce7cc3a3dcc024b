"""Monte-Carlo estimation of the minimum spatial uniform bound.

Draw a fixed batch of Gaussian errors once, then bisect on the scale: at
each candidate scale count the fraction of draws inside the error-tolerance
set of the subspace (each test is a family of convex subproblems), and
move the bracket end indicated by the count.  Per-draw results are cached
across bisection steps: membership is monotone in the scale, so a draw
known to be inside at a smaller scale (or outside at a larger one) is
never re-solved.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputValidationError
from .model import check_dummy_covariance
from .numerics import CholFactor, RngStream, chi_quantile, cholesky_psd
from .solve import MEMBERSHIP_TOL, SolverConfig, Subspace, _fw_batch

log = logging.getLogger(__name__)

__all__ = [
    "AccuracyParams",
    "MuEstimate",
    "num_samples",
    "estimate_mu",
    "empirical_membership_rate",
]


@dataclass(frozen=True)
class AccuracyParams:
    """(failure budget, quantile slack, bisection resolution)."""

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        if not 0 < self.alpha:
            raise InputValidationError("AccuracyParams: alpha must be positive")
        if not 0 < self.beta < 1:
            raise InputValidationError("AccuracyParams: beta must lie in (0, 1)")
        if not 0 < self.gamma:
            raise InputValidationError("AccuracyParams: gamma must be positive")


@dataclass
class MuEstimate:
    mu_dot: float
    p: float
    q_samples: int
    iterations: int
    samples_reused: bool = True
    bracket: tuple = (0.0, 0.0)


def num_samples(alpha: float, beta: float) -> int:
    """Hoeffding-style draw count ceil(log(2/alpha) / (8 beta^2))."""
    if not 0 < alpha < 1 or not 0 < beta < 1:
        raise InputValidationError("num_samples: alpha, beta must lie in (0, 1)")
    return int(math.ceil(math.log(2.0 / alpha) / (8.0 * beta * beta)))


class _MembershipEvaluator:
    """Batched membership decisions for a fixed subspace and error batch.

    Each decision asks whether the membership objective over all
    constraints and both signs stays above ``-MEMBERSHIP_TOL``; the
    Frank-Wolfe bounds let most draws finish as soon as their sign is
    certified.
    """

    def __init__(self, subspace: Subspace, factor: CholFactor, eps: np.ndarray, cfg: SolverConfig):
        self.subspace = subspace
        self.eps = eps
        self.cfg = cfg
        problem = subspace.problem
        self.branches = []
        for A_red, c_red, _ in problem.reduced_maps():
            M = factor.L.T @ A_red
            b = factor.L.T @ c_red
            lin_all = eps @ A_red  # (Q, n_reduced)
            off_all = eps @ c_red  # (Q,)
            self.branches.append((lin_all, off_all, M, b))
        if subspace.kind == "points":
            self.vertices = None
            self.points = subspace.points
        else:
            self.points = None
            self.vertices = subspace.polytope().vertices()

    def decide(self, mu: float, idx: np.ndarray) -> np.ndarray:
        """Membership booleans for the requested draw indices at scale mu."""
        member = np.ones(idx.size, dtype=bool)
        pending = np.arange(idx.size)
        for lin_all, off_all, M, b in self.branches:
            for sgn in (1.0, -1.0):
                if pending.size == 0:
                    break
                rows = idx[pending]
                lin = sgn * lin_all[rows]
                off = sgn * off_all[rows]
                if self.points is not None:
                    pv = self.points
                    vals = lin @ pv.T + off[:, None] + mu * np.linalg.norm(
                        pv @ M.T + b, axis=1
                    )
                    branch_val = vals.min(axis=1)
                    bad = branch_val < -MEMBERSHIP_TOL
                else:
                    value, lower, _, _, _ = _fw_batch(
                        self.vertices,
                        M,
                        b,
                        lin,
                        mu,
                        self.cfg.tol,
                        self.cfg.max_iters,
                        offsets=off,
                        sign_tol=MEMBERSHIP_TOL,
                    )
                    # value is an upper bound on the branch minimum, so a
                    # negative value certifies non-membership; ambiguous
                    # boundary cases count as members.
                    bad = value < -MEMBERSHIP_TOL
                if np.any(bad):
                    member[pending[bad]] = False
                    pending = pending[~bad]
        return member


def estimate_mu(
    p: float,
    subspace: Subspace,
    sigma,
    acc: AccuracyParams,
    cfg: SolverConfig | None = None,
    rng: RngStream | None = None,
    sample_sigma=None,
) -> MuEstimate:
    """Estimate the smallest scale at which a Gaussian error lies in the
    subspace's tolerance set with probability p.

    Draws ``num_samples(alpha, beta)`` errors once, brackets the answer by
    the 1- and full-dimensional chi quantiles, and bisects to resolution
    gamma, raising the lower end when the empirical membership rate clears
    ``p + beta/2`` (capped at 1).  ``sample_sigma`` optionally decouples
    the sampling covariance from the norm covariance (diagnostics only).
    """
    cfg = cfg or SolverConfig()
    rng = rng or RngStream(0)
    if p < 0.0:
        log.warning("estimate_mu: negative target probability clamped to 0")
        p = 0.0
    factor = sigma if isinstance(sigma, CholFactor) else cholesky_psd(sigma)
    check_dummy_covariance(subspace.problem, factor.L @ factor.L.T)
    sample_factor = factor if sample_sigma is None else cholesky_psd(sample_sigma)

    Q = num_samples(acc.alpha, acc.beta)
    # Q draws cannot resolve probabilities beyond 1 - 1/(Q + 1); targets at
    # or above that (notably the exact-1 target of the practical calibration
    # mode) are clamped to it so the quantile brackets stay finite and match
    # what the empirical search can actually distinguish.
    p_cap = 1.0 - max(1.0 / (Q + 1.0), 1e-12)
    if p > p_cap:
        log.warning(
            "estimate_mu: target probability %.17g clamped to %.17g (Q=%d)",
            p,
            p_cap,
            Q,
        )
        p = p_cap
    gen = rng.generator()
    eps = gen.standard_normal((Q, sample_factor.dim)) @ sample_factor.L.T

    rank = factor.rank
    if rank == 0:
        return MuEstimate(0.0, p, Q, 0, bracket=(0.0, 0.0))
    # Quantile bracket for the answer.  With a decoupled sampling
    # covariance (diagnostics mode, proportional matrices) the bracket
    # rescales by the square root of the covariance ratio.
    scale = 1.0
    if sample_sigma is not None:
        tr_norm = float(np.trace(factor.L @ factor.L.T))
        tr_sample = float(np.trace(sample_factor.L @ sample_factor.L.T))
        if tr_norm > 0:
            scale = math.sqrt(tr_sample / tr_norm)
    lo = scale * chi_quantile(1, p)
    hi = scale * chi_quantile(rank, p)
    bracket = (lo, hi)
    if hi - lo < acc.gamma:
        return MuEstimate(hi, p, Q, 0, bracket=bracket)

    evaluator = _MembershipEvaluator(subspace, factor, eps, cfg)
    threshold = min(p + acc.beta / 2.0, 1.0)
    all_needed = threshold >= 1.0 - 1e-12
    known_member_at = np.full(Q, np.inf)  # smallest scale each draw is known in
    known_outside_at = np.full(Q, -np.inf)  # largest scale each draw is known out
    iterations = 0
    while hi - lo >= acc.gamma:
        lam = 0.5 * (lo + hi)
        is_member = lam >= known_member_at
        is_out = lam <= known_outside_at
        todo = np.flatnonzero(~(is_member | is_out))
        saw_outside = bool(np.any(is_out))
        # When every draw must be covered, one draw outside already decides
        # the step, so evaluate lazily in chunks.
        chunk = 64 if all_needed else todo.size
        for lo_i in range(0, todo.size, max(chunk, 1)):
            if all_needed and saw_outside:
                break
            part = todo[lo_i : lo_i + chunk]
            decided = evaluator.decide(lam, part)
            is_member[part] = decided
            known_member_at[part[decided]] = np.minimum(
                known_member_at[part[decided]], lam
            )
            known_outside_at[part[~decided]] = np.maximum(
                known_outside_at[part[~decided]], lam
            )
            saw_outside = saw_outside or bool(np.any(~decided))
        count = int(np.count_nonzero(is_member))
        if all_needed and saw_outside:
            count = 0  # the undecided rest cannot change this step's branch
        # The membership rate is nondecreasing in the scale, so a rate that
        # already clears the threshold means the answer lies at or below the
        # midpoint.  This keeps rate(hi) >= threshold > rate(lo) whenever
        # both ends have been visited, which is what the output guarantee
        # needs.
        if count >= threshold * Q - 1e-9:
            hi = lam
        else:
            lo = lam
        iterations += 1
    return MuEstimate(hi, p, Q, iterations, bracket=bracket)


def empirical_membership_rate(
    lam: float,
    eps_samples,
    subspace: Subspace,
    sigma,
    cfg: SolverConfig | None = None,
) -> float:
    """Fraction of the given error draws inside the tolerance set at scale
    lam; deterministic given the draws."""
    cfg = cfg or SolverConfig()
    eps = np.atleast_2d(np.asarray(eps_samples, dtype=float))
    factor = sigma if isinstance(sigma, CholFactor) else cholesky_psd(sigma)
    evaluator = _MembershipEvaluator(subspace, factor, eps, cfg)
    decided = evaluator.decide(lam, np.arange(eps.shape[0]))
    return float(np.count_nonzero(decided)) / eps.shape[0]
