"""Two-stage domain-reduction calibration of the robustness scale.

Stage one estimates a conservative spatial bound over the full domain,
which yields a value cap and a feasibility margin; the domain reduced by
those cuts is handed to a second spatial-bound estimation whose output,
rescaled by 1/((1 - gamma_n) sqrt(n)), is the calibrated scale.  The
standard chi-quantile scales are provided as references.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CalibrationStageError, InputValidationError, RoscalError
from .estimate import C1, EmpiricalEstimate, covariance_sandwich, empirical_moments, eta
from .model import ProblemSpec, TrueModel, true_objective
from .numerics import RngStream, chi_quantile, cholesky_psd
from .solve import SolverConfig, Subspace, in_S, solve_robust
from .spatial_bound import AccuracyParams, MuEstimate, estimate_mu

log = logging.getLogger(__name__)

#: Monte-Carlo quantile slack floor used when the mode-derived slack is
#: zero (a zero slack would require infinitely many draws).
DEFAULT_BETA_FLOOR = 0.05

MODES = ("practical", "theoretical")

__all__ = [
    "DEFAULT_BETA_FLOOR",
    "AlgoConstants",
    "CalibrationResult",
    "algo_constants",
    "reduced_domain",
    "calibrate_scale",
    "baseline_scales",
    "check_sandwich",
    "SandwichReport",
]


@dataclass(frozen=True)
class AlgoConstants:
    """Per-sample-size constants of the calibration algorithm."""

    alpha_n: float
    beta_n: float
    gamma_n: float
    eta_n: float
    delta_n: float
    c_d: float
    mode: str


def algo_constants(
    n: int, d: int, delta: float, tau: float, tau_prime: float, mode: str = "practical"
) -> AlgoConstants:
    """alpha_n = delta/sqrt(n), beta_n = c_d tau/sqrt(n), gamma_n = 1/sqrt(n),
    plus the covariance-accuracy factor eta_n and the stage-two probability
    correction delta_n.

    Practical mode zeroes tau and tau_prime first, which collapses every
    correction term (beta_n = eta_n = 0, delta_n = delta/sqrt(n)).
    """
    if n < 1:
        raise InputValidationError("algo_constants: n must be >= 1")
    if not 0 < delta < 1:
        raise InputValidationError("algo_constants: delta must lie in (0, 1)")
    if mode not in MODES:
        raise InputValidationError(f"algo_constants: unknown mode {mode!r}")
    if mode == "practical":
        tau = 0.0
        tau_prime = 0.0
    sqrt_n = math.sqrt(n)
    c_d = 400.0 * d**0.25
    eta_n = eta(d, n, d**2 * C1 * tau_prime / sqrt_n, tau_prime)
    delta_n = (2.0 * d**2 * C1 * tau_prime + 4.0 * c_d * tau + delta) / sqrt_n
    return AlgoConstants(
        alpha_n=delta / sqrt_n,
        beta_n=c_d * tau / sqrt_n,
        gamma_n=1.0 / sqrt_n,
        eta_n=eta_n,
        delta_n=delta_n,
        c_d=c_d,
        mode=mode,
    )


@dataclass
class CalibrationResult:
    lambda_hat: float
    mu_dot: float
    mu_hat: float
    w_hat: float
    lambda_dot: float
    stage1: MuEstimate
    stage2: MuEstimate
    subspace: dict
    mode: str
    n: int
    d: int
    delta: float
    constants: AlgoConstants
    seed: int | None = None
    seed_path: tuple = ()

    @property
    def sqrt_n_lambda_hat(self) -> float:
        return math.sqrt(self.n) * self.lambda_hat

    def to_dict(self) -> dict:
        return {
            "lambda_hat": self.lambda_hat,
            "sqrt_n_lambda_hat": self.sqrt_n_lambda_hat,
            "mu_dot": self.mu_dot,
            "mu_hat": self.mu_hat,
            "w_hat": self.w_hat,
            "lambda_dot": self.lambda_dot,
            "stage1": {
                "mu_dot": self.stage1.mu_dot,
                "p": self.stage1.p,
                "q_samples": self.stage1.q_samples,
                "iterations": self.stage1.iterations,
                "bracket": list(self.stage1.bracket),
            },
            "stage2": {
                "mu_dot": self.stage2.mu_dot,
                "p": self.stage2.p,
                "q_samples": self.stage2.q_samples,
                "iterations": self.stage2.iterations,
                "bracket": list(self.stage2.bracket),
            },
            "subspace": self.subspace,
            "mode": self.mode,
            "n": self.n,
            "d": self.d,
            "delta": self.delta,
            "constants": {
                "alpha_n": self.constants.alpha_n,
                "beta_n": self.constants.beta_n,
                "gamma_n": self.constants.gamma_n,
                "eta_n": self.constants.eta_n,
                "delta_n": self.constants.delta_n,
                "c_d": self.constants.c_d,
            },
            "seed": self.seed,
            "seed_path": list(self.seed_path),
        }


def reduced_domain(
    problem: ProblemSpec,
    estimate: EmpiricalEstimate,
    w_hat: float,
    mu: float,
    norm_mode: str = "linear_surrogate",
) -> Subspace:
    """Search domain cut down to ``{f(y) <= w_hat}`` intersected with the
    relaxed-feasibility margin around the estimated parameters."""
    if mu < 0:
        raise InputValidationError("reduced_domain: mu must be nonnegative")
    return Subspace.cuts(
        problem,
        theta_ref=estimate.theta_hat,
        sigma_ref=estimate.sigma_hat,
        value_cap=w_hat,
        margin=mu,
        norm_mode=norm_mode,
    )


def calibrate_scale(
    problem: ProblemSpec,
    samples,
    delta: float,
    cfg: SolverConfig | None = None,
    mode: str = "practical",
    rng: RngStream | None = None,
    beta_floor: float = DEFAULT_BETA_FLOOR,
    moment_bounds=None,
    norm_mode: str = "linear_surrogate",
) -> CalibrationResult:
    """Calibrate the robustness scale from raw parameter samples.

    Runs the six calibration steps in order: spatial bound over the full
    domain, margin scaling, value cap from a robust solve at three times
    the margin, domain reduction, spatial bound over the reduced domain,
    and the final 1/((1-gamma_n) sqrt(n)) rescaling.  ``beta_floor`` keeps
    the Monte-Carlo draw count finite when the mode-derived quantile slack
    is zero (practical mode).
    """
    cfg = cfg or SolverConfig()
    rng = rng or RngStream(0)
    if mode not in MODES:
        raise InputValidationError(f"calibrate_scale: unknown mode {mode!r}")
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    n = X.shape[0]
    if n < 2:
        raise InputValidationError("calibrate_scale: need at least two samples")
    if X.shape[1] != problem.d:
        raise InputValidationError("calibrate_scale: sample dimension mismatch")
    if not 0 < delta < 1:
        raise InputValidationError("calibrate_scale: delta must lie in (0, 1)")

    est = empirical_moments(X, bounds=moment_bounds)
    d_eff = problem.effective_dim
    const = algo_constants(n, d_eff, delta, est.tau, est.tau_prime, mode)
    sqrt_n = math.sqrt(n)
    acc = AccuracyParams(
        alpha=const.alpha_n,
        beta=max(const.beta_n, beta_floor),
        gamma=const.gamma_n,
    )
    lower_factor, upper_factor = covariance_sandwich(est, const.eta_n)

    # Stage 1: spatial bound over the full domain (c_d tau / sqrt(n) is
    # exactly beta_n, so the target is 1 - 2 beta_n; estimate_mu clamps the
    # practical-mode value 1 just below 1 and logs it).
    p1 = 1.0 - 2.0 * const.beta_n
    try:
        stage1 = estimate_mu(
            p1, Subspace.full(problem), est.sigma_hat, acc, cfg, rng.spawn(1)
        )
    except RoscalError as exc:
        raise CalibrationStageError("1: full-domain spatial bound", exc) from exc
    mu_dot = stage1.mu_dot
    mu_hat = upper_factor * mu_dot / (lower_factor**2 * sqrt_n)

    # Value cap from a robust solve at three times the margin.  This one
    # solve anchors the whole domain reduction, so it always goes through
    # the certified interior-point engine rather than cfg's method.
    try:
        _, w_hat = solve_robust(
            problem,
            est.theta_hat,
            est.sigma_hat / lower_factor,
            3.0 * mu_hat,
            SolverConfig(method="barrier", tol=1e-7),
        )
    except RoscalError as exc:
        raise CalibrationStageError("3: value-cap robust solve", exc) from exc

    subspace = reduced_domain(problem, est, w_hat, mu_hat / lower_factor, norm_mode)

    # Stage 2: spatial bound over the reduced domain.
    p2 = 1.0 - delta + const.delta_n
    try:
        stage2 = estimate_mu(p2, subspace, est.sigma_hat, acc, cfg, rng.spawn(2))
    except RoscalError as exc:
        raise CalibrationStageError("5: reduced-domain spatial bound", exc) from exc
    lambda_dot = stage2.mu_dot
    lambda_hat = lambda_dot / ((1.0 - const.gamma_n) * sqrt_n)

    return CalibrationResult(
        lambda_hat=lambda_hat,
        mu_dot=mu_dot,
        mu_hat=mu_hat,
        w_hat=w_hat,
        lambda_dot=lambda_dot,
        stage1=stage1,
        stage2=stage2,
        subspace=subspace.describe(),
        mode=mode,
        n=n,
        d=d_eff,
        delta=delta,
        constants=const,
        seed=rng.seed,
        seed_path=tuple(rng.path),
    )


def baseline_scales(n: int, d: int, delta: float):
    """Reference scales: the single-dimension lower bound and the standard
    full-dimension scale, both divided by sqrt(n)."""
    if n < 1:
        raise InputValidationError("baseline_scales: n must be >= 1")
    if not 0 < delta < 1:
        raise InputValidationError("baseline_scales: delta must lie in (0, 1)")
    sqrt_n = math.sqrt(n)
    return chi_quantile(1, 1.0 - delta) / sqrt_n, chi_quantile(d, 1.0 - delta) / sqrt_n


@dataclass
class SandwichReport:
    hypotheses_met: bool
    conclusion_holds: bool
    failures: list = field(default_factory=list)
    values: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.hypotheses_met and self.conclusion_holds


def check_sandwich(
    problem: ProblemSpec,
    true_model: TrueModel,
    sigma,
    theta,
    lam: float,
    subspace: Subspace | None = None,
    cfg: SolverConfig | None = None,
    tol: float = 1e-6,
) -> SandwichReport:
    """Test-harness verification of the solution-sandwich inequalities.

    Checks the membership hypothesis and solution containment, then the
    conclusion f*(x(lam; theta)) <= f*(x(2 lam; theta*)) together with the
    three-solve chain f*(x(2 lam; theta*)) <= f*(x(3 lam; theta)) <=
    f*(x(4 lam; theta*)).  Returns a falsy report naming the first failed
    inequality instead of raising.
    """
    cfg = cfg or SolverConfig(method="barrier", tol=1e-7)
    subspace = subspace or Subspace.full(problem)
    report = SandwichReport(hypotheses_met=True, conclusion_holds=True)
    eps = np.asarray(theta, dtype=float) - true_model.theta_star
    if not in_S(problem, subspace, sigma, lam, eps, cfg):
        report.hypotheses_met = False
        report.failures.append("error outside tolerance set")

    solves = {}
    for name, (scale, th) in {
        "x_lam_theta": (lam, theta),
        "x_2lam_star": (2 * lam, true_model.theta_star),
        "x_3lam_theta": (3 * lam, theta),
        "x_4lam_star": (4 * lam, true_model.theta_star),
    }.items():
        x, _ = solve_robust(problem, th, sigma, scale, cfg)
        solves[name] = x
        report.values[name] = true_objective(problem, x, true_model)

    keep = problem.kept_vars()
    for name in ("x_lam_theta", "x_2lam_star"):
        if not subspace.contains_reduced(solves[name][keep], tol=1e-7):
            report.hypotheses_met = False
            report.failures.append(f"{name} escapes the subspace")

    f = report.values
    checks = [
        ("f*(x(lam;theta)) <= f*(x(2lam;theta*))", f["x_lam_theta"], f["x_2lam_star"]),
        ("f*(x(2lam;theta*)) <= f*(x(3lam;theta))", f["x_2lam_star"], f["x_3lam_theta"]),
        ("f*(x(3lam;theta)) <= f*(x(4lam;theta*))", f["x_3lam_theta"], f["x_4lam_star"]),
    ]
    for label, lhs, rhs in checks:
        if lhs > rhs + tol:
            report.conclusion_holds = False
            report.failures.append(label)
    return report
