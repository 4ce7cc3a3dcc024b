"""Scale calibration for data-driven robust optimization with ellipsoidal
uncertainty.

The toolkit estimates the robustness scale from parameter samples through
two-stage empirical domain reduction driven by a Monte-Carlo spatial-bound
estimator, solves the resulting robust counterparts, and benchmarks the
calibrated scale against the standard chi-quantile choices.
"""

__version__ = "0.1.0"

from .calibrate import (
    AlgoConstants,
    CalibrationResult,
    algo_constants,
    baseline_scales,
    calibrate_scale,
    check_sandwich,
    reduced_domain,
)
from .estimate import EmpiricalEstimate, covariance_sandwich, empirical_moments, eta
from .model import (
    DomainSpec,
    EllipsoidalUncertainty,
    ProblemSpec,
    SensitivityMap,
    TrueModel,
    eval_constraint,
    radius,
    true_objective,
)
from .numerics import (
    CholFactor,
    RngStream,
    chi_cdf,
    chi_quantile,
    cholesky_psd,
    empirical_quantile,
    project_simplex,
    sample_mvn,
    solve_lp,
)
from .solve import (
    MEMBERSHIP_TOL,
    SolverConfig,
    Subspace,
    in_S,
    psi,
    solve_linear_plus_norm,
    solve_robust,
)
from .spatial_bound import (
    AccuracyParams,
    MuEstimate,
    empirical_membership_rate,
    estimate_mu,
    num_samples,
)
from .bench import (
    SweepConfig,
    SweepReport,
    TrialRecord,
    generate_portfolio,
    run_sweep,
    run_trial,
    sample_covariance_scenario,
)

__all__ = [
    "__version__",
    "AlgoConstants",
    "CalibrationResult",
    "algo_constants",
    "baseline_scales",
    "calibrate_scale",
    "check_sandwich",
    "reduced_domain",
    "EmpiricalEstimate",
    "covariance_sandwich",
    "empirical_moments",
    "eta",
    "DomainSpec",
    "EllipsoidalUncertainty",
    "ProblemSpec",
    "SensitivityMap",
    "TrueModel",
    "eval_constraint",
    "radius",
    "true_objective",
    "CholFactor",
    "RngStream",
    "chi_cdf",
    "chi_quantile",
    "cholesky_psd",
    "empirical_quantile",
    "project_simplex",
    "sample_mvn",
    "solve_lp",
    "MEMBERSHIP_TOL",
    "SolverConfig",
    "Subspace",
    "in_S",
    "psi",
    "solve_linear_plus_norm",
    "solve_robust",
    "AccuracyParams",
    "MuEstimate",
    "empirical_membership_rate",
    "estimate_mu",
    "num_samples",
    "SweepConfig",
    "SweepReport",
    "TrialRecord",
    "generate_portfolio",
    "run_sweep",
    "run_trial",
    "sample_covariance_scenario",
]
