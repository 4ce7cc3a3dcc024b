"""HTTP service wrapping the calibration library.

All endpoints are synchronous pure computations over the request payload;
the service holds no state, so any number of clients and replicas can
share it.  Library errors map to structured bodies with a stable ``code``
(validation / infeasible / nonconvergence) that the CLI translates into
exit codes.
"""

from __future__ import annotations

import math

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..bench import SweepConfig, run_sweep
from ..calibrate import baseline_scales, calibrate_scale
from ..errors import RoscalError
from ..fileio import parse_samples_csv, problem_from_dict, sweep_config_from_dict
from ..numerics import RngStream, chi_quantile
from ..solve import SolverConfig, Subspace
from ..spatial_bound import AccuracyParams, estimate_mu
from ..toy import membership_tables
from . import schemas

_STATUS = {"validation": 422, "infeasible": 409, "nonconvergence": 422, "error": 400}


def _solver(model: schemas.SolverModel) -> SolverConfig:
    return SolverConfig(max_iters=model.max_iters, tol=model.tol, method=model.method)


def _subspace(problem, model: schemas.SubspaceModel) -> Subspace:
    if model.kind == "full":
        return Subspace.full(problem)
    if model.kind == "polytope":
        if model.G is None or model.h is None or model.nonneg is None:
            raise RoscalError("polytope subspace needs G, h and nonneg")
        return Subspace.from_polytope(problem, model.G, model.h, model.nonneg)
    if model.kind == "points":
        if not model.points:
            raise RoscalError("point subspace needs at least one point")
        return Subspace.from_points(problem, model.points)
    raise RoscalError(f"unknown subspace kind {model.kind!r}")


def create_app() -> FastAPI:
    app = FastAPI(
        title="roscal service",
        version=__version__,
        description=(
            "Scale calibration for data-driven robust optimization with "
            "ellipsoidal uncertainty."
        ),
    )

    @app.exception_handler(RoscalError)
    def _handle_roscal(request: Request, exc: RoscalError):
        code = getattr(exc, "code", "error")
        return JSONResponse(
            status_code=_STATUS.get(code, 400),
            content={"detail": {"code": code, "message": str(exc)}},
        )

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "version": __version__}

    @app.post("/v1/quantile", response_model=schemas.QuantileResponse)
    def quantile(req: schemas.QuantileRequest):
        return schemas.QuantileResponse(
            dof=req.dof, p=req.p, value=chi_quantile(req.dof, req.p)
        )

    @app.post("/v1/mu", response_model=schemas.MuResponse)
    def mu(req: schemas.MuRequest):
        problem = problem_from_dict(req.problem.model_dump())
        if req.sigma is None:
            diag = np.ones(problem.d)
            for j in problem.dummy_coords:
                diag[j] = 0.0
            sigma = np.diag(diag)
        else:
            sigma = np.asarray(req.sigma, dtype=float)
        acc = AccuracyParams(req.accuracy.alpha, req.accuracy.beta, req.accuracy.gamma)
        est = estimate_mu(
            req.p,
            _subspace(problem, req.subspace),
            sigma,
            acc,
            _solver(req.solver),
            RngStream(req.seed),
        )
        note = (
            f"with probability >= {1 - acc.alpha:.6g} the output lies in "
            f"[mu'({est.p:.6g}), mu'({min(est.p + acc.beta, 1.0):.6g}) + {acc.gamma:g}]"
        )
        return schemas.MuResponse(
            mu_dot=est.mu_dot,
            p=est.p,
            num_samples=est.q_samples,
            iterations=est.iterations,
            bracket=list(est.bracket),
            sandwich_note=note,
        )

    @app.post("/v1/calibrate", response_model=schemas.CalibrateResponse)
    def calibrate(req: schemas.CalibrateRequest):
        problem = problem_from_dict(req.problem.model_dump())
        if req.samples_csv is not None:
            samples = parse_samples_csv(req.samples_csv, problem)
        elif req.samples is not None:
            samples = np.asarray(req.samples, dtype=float)
        else:
            raise RoscalError("calibrate needs samples or samples_csv")
        result = calibrate_scale(
            problem,
            samples,
            req.delta,
            _solver(req.solver),
            req.mode,
            RngStream(req.seed),
            beta_floor=req.beta_floor,
        )
        lower, upper = baseline_scales(result.n, result.d, req.delta)
        payload = result.to_dict()
        payload["reference_lower"] = lower
        payload["reference_upper"] = upper
        return schemas.CalibrateResponse(**payload)

    @app.post("/v1/sweep", response_model=schemas.SweepResponse)
    def sweep(req: schemas.SweepRequest):
        data = req.model_dump()
        solver = data.pop("solver")
        config = sweep_config_from_dict(data)
        report = run_sweep(config, _solver(schemas.SolverModel(**solver)))
        rows = [
            schemas.SummaryRow(
                n=n,
                method=method,
                var_delta=_nan_safe(var),
                violation_rate=_nan_safe(viol),
                mean_sqrt_n_lambda=_nan_safe(mean_sl),
            )
            for n, method, var, viol, mean_sl in report.summary
        ]
        return schemas.SweepResponse(
            raw_csv=report.raw_csv(),
            summary_csv=report.summary_csv(),
            summary=rows,
            failures=report.failures,
        )

    @app.get("/v1/demo", response_model=schemas.DemoResponse)
    def demo(scale: float = 1.0, half_width: float = 2.5, step: float = 0.5):
        return schemas.DemoResponse(**membership_tables(scale, half_width, step))

    return app


def _nan_safe(x: float) -> float:
    return -1.0 if (x != x or math.isinf(x)) else float(x)
