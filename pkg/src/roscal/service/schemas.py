"""Request/response models for the calibration service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class ConstraintModel(BaseModel):
    A: list[list[float]] = Field(description="row-major d x m sensitivity matrix")
    c: list[float] = Field(description="constant part of the sensitivity map")


class DomainModel(BaseModel):
    G: list[list[float]] = Field(default_factory=list)
    h: list[float] = Field(default_factory=list)
    nonneg: list[bool]


class ProblemModel(BaseModel):
    m: int
    d: int
    objective: list[float]
    constraints: list[ConstraintModel]
    domain: DomainModel
    dummy_coords: list[int] = Field(default_factory=list)
    epigraph_var: int | None = None


class SolverModel(BaseModel):
    max_iters: int = 2000
    tol: float = 1e-8
    method: str = "frank_wolfe"


class AccuracyModel(BaseModel):
    alpha: float = Field(gt=0)
    beta: float = Field(gt=0, lt=1)
    gamma: float = Field(gt=0)


class SubspaceModel(BaseModel):
    """Explicit search subspace; ``full`` uses the whole problem domain."""

    kind: str = "full"  # full | polytope | points
    G: list[list[float]] | None = None
    h: list[float] | None = None
    nonneg: list[bool] | None = None
    points: list[list[float]] | None = None


class QuantileRequest(BaseModel):
    dof: int = Field(ge=1)
    p: float


class QuantileResponse(BaseModel):
    dof: int
    p: float
    value: float


class MuRequest(BaseModel):
    problem: ProblemModel
    sigma: list[list[float]] | None = Field(
        default=None, description="defaults to identity on non-dummy coordinates"
    )
    subspace: SubspaceModel = Field(default_factory=SubspaceModel)
    p: float
    accuracy: AccuracyModel
    seed: int = 0
    solver: SolverModel = Field(default_factory=SolverModel)


class MuResponse(BaseModel):
    mu_dot: float
    p: float
    num_samples: int
    iterations: int
    bracket: list[float]
    sandwich_note: str


class CalibrateRequest(BaseModel):
    problem: ProblemModel
    samples_csv: str | None = None
    samples: list[list[float]] | None = None
    delta: float
    mode: str = "practical"
    seed: int = 0
    solver: SolverModel = Field(default_factory=SolverModel)
    beta_floor: float = 0.05


class StageModel(BaseModel):
    mu_dot: float
    p: float
    q_samples: int
    iterations: int
    bracket: list[float]


class CalibrateResponse(BaseModel):
    lambda_hat: float
    sqrt_n_lambda_hat: float
    mu_dot: float
    mu_hat: float
    w_hat: float
    lambda_dot: float
    stage1: StageModel
    stage2: StageModel
    subspace: dict
    mode: str
    n: int
    d: int
    delta: float
    constants: dict
    seed: int | None
    seed_path: list[int]
    reference_lower: float = Field(description="chi_1 quantile scale / sqrt(n)")
    reference_upper: float = Field(description="chi_d quantile scale / sqrt(n)")


class SweepRequest(BaseModel):
    d: int = 20
    delta: float = 0.3
    n_grid: list[int] = Field(default_factory=lambda: [20, 60, 120, 1000])
    trials_per_cov: int = 10
    cov_draws: int = 10
    methods: list[str] = Field(default_factory=lambda: ["proposed", "lower", "upper"])
    seed: int = 2024
    cap: float = 1.0
    threads: int = 1
    full_scale: bool = False
    solver: SolverModel = Field(default_factory=SolverModel)


class SummaryRow(BaseModel):
    n: int
    method: str
    var_delta: float
    violation_rate: float
    mean_sqrt_n_lambda: float


class SweepResponse(BaseModel):
    raw_csv: str
    summary_csv: str
    summary: list[SummaryRow]
    failures: int


class DemoResponse(BaseModel):
    scale: float
    ticks: list[float]
    tables: dict[str, list[list[bool]]]
    counts: dict[str, int]
    chain_ok: bool
    strictly_nested: bool


class ErrorBody(BaseModel):
    code: str
    message: str
