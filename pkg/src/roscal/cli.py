"""Command-line client for the calibration service.

Every command speaks to the HTTP service: by default an in-process
instance (no network involved), or a remote one via ``--server``.  Human
summaries go to standard output; machine artifacts (JSON results, CSVs,
manifests) only to files, so pipelines never have to parse the console.
The only environment variable honored is ``ROSCAL_LOG_LEVEL``.
"""

from __future__ import annotations

import datetime as _dt
import json
import logging
import os
import sys
import time
from pathlib import Path

import click

from . import __version__
from .fileio import _load_structured, load_problem, problem_to_dict

_EXIT_BY_CODE = {"validation": 2, "infeasible": 3, "nonconvergence": 4, "error": 2}

log = logging.getLogger(__name__)


def _configure_logging():
    level = os.environ.get("ROSCAL_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))


def _client(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=None)
    import warnings

    with warnings.catch_warnings():
        # The in-process transport triggers an upstream deprecation notice
        # that is irrelevant to CLI users.
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service import create_app

    return TestClient(create_app())


def _call(client, method: str, path: str, **kwargs):
    resp = client.request(method, path, **kwargs)
    if resp.status_code >= 400:
        try:
            detail = resp.json().get("detail")
        except Exception:
            detail = None
        if isinstance(detail, dict) and "code" in detail:
            code, message = detail["code"], detail.get("message", "")
        else:
            code, message = "validation", str(detail)
        click.echo(f"error ({code}): {message}", err=True)
        sys.exit(_EXIT_BY_CODE.get(code, 2))
    return resp.json()


def _write_manifest(path: Path, command: str, params: dict, outputs: list):
    manifest = {
        "command": command,
        "parameters": params,
        "outputs": [str(o) for o in outputs],
        "library_version": __version__,
        "wall_clock_start": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


@click.group()
@click.version_option(__version__, prog_name="roscal")
@click.option(
    "--server",
    default=None,
    metavar="URL",
    help="Target a running service instead of computing in-process.",
)
@click.pass_context
def main(ctx, server):
    """Robust-optimization scale calibration toolkit."""
    _configure_logging()
    ctx.ensure_object(dict)
    ctx.obj["server"] = server


@main.command()
@click.argument("dof", type=int)
@click.argument("p", type=float)
@click.pass_context
def quantile(ctx, dof, p):
    """Print the chi-distribution quantile for DOF degrees of freedom at P."""
    with _client(ctx.obj["server"]) as client:
        data = _call(client, "POST", "/v1/quantile", json={"dof": dof, "p": p})
    click.echo(f"chi_quantile({dof}, {p}) = {data['value']:.10g}")


@main.command()
@click.option("--problem", "problem_path", required=True, type=click.Path(exists=True))
@click.option("--subspace", "subspace_path", type=click.Path(exists=True), default=None,
              help="JSON subspace description (kind polytope/points); default: full domain.")
@click.option("--sigma", "sigma_path", type=click.Path(exists=True), default=None,
              help="JSON matrix; default: identity on non-dummy coordinates.")
@click.option("--p", "p", required=True, type=float, help="Target coverage probability.")
@click.option("--alpha", default=0.05, show_default=True, help="Failure budget.")
@click.option("--beta", default=0.02, show_default=True, help="Quantile slack.")
@click.option("--gamma", default=0.01, show_default=True, help="Bisection resolution.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--manifest", "manifest_path", type=click.Path(), default=None)
@click.pass_context
def mu(ctx, problem_path, subspace_path, sigma_path, p, alpha, beta, gamma, seed, manifest_path):
    """Estimate the minimum spatial uniform bound for a problem/subspace."""
    try:
        problem = load_problem(problem_path)
        payload = {
            "problem": problem_to_dict(problem),
            "p": p,
            "accuracy": {"alpha": alpha, "beta": beta, "gamma": gamma},
            "seed": seed,
        }
        if subspace_path:
            payload["subspace"] = _load_structured(Path(subspace_path))
        if sigma_path:
            payload["sigma"] = _load_structured(Path(sigma_path))["sigma"]
    except Exception as exc:
        click.echo(f"error (validation): {exc}", err=True)
        sys.exit(2)
    if manifest_path:
        _write_manifest(Path(manifest_path), "mu", payload | {"problem": problem_path}, [])
    with _client(ctx.obj["server"]) as client:
        data = _call(client, "POST", "/v1/mu", json=payload)
    click.echo(f"mu_dot = {data['mu_dot']:.10g}")
    click.echo(f"bracket = [{data['bracket'][0]:.10g}, {data['bracket'][1]:.10g}]")
    click.echo(f"samples = {data['num_samples']}, bisection steps = {data['iterations']}")
    click.echo(data["sandwich_note"])


@main.command()
@click.option("--problem", "problem_path", required=True, type=click.Path(exists=True))
@click.option("--samples", "samples_path", required=True, type=click.Path(exists=True))
@click.option("--delta", required=True, type=float, help="Violation probability budget.")
@click.option("--mode", type=click.Choice(["practical", "theoretical"]),
              default="practical", show_default=True)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_path", type=click.Path(), default="calibration.json",
              show_default=True, help="Result record destination.")
@click.option("--manifest", "manifest_path", type=click.Path(), default=None,
              help="Run manifest destination (default: alongside --out).")
@click.pass_context
def calibrate(ctx, problem_path, samples_path, delta, mode, seed, out_path, manifest_path):
    """Calibrate the robustness scale from a problem file and sample CSV."""
    if not 0 < delta < 1:
        click.echo("error (validation): delta must lie strictly between 0 and 1", err=True)
        sys.exit(2)
    try:
        problem = load_problem(problem_path)
        samples_csv = Path(samples_path).read_text()
    except Exception as exc:
        click.echo(f"error (validation): {exc}", err=True)
        sys.exit(2)
    out = Path(out_path)
    manifest = Path(manifest_path) if manifest_path else out.with_suffix(".manifest.json")
    _write_manifest(
        manifest,
        "calibrate",
        {
            "problem": str(problem_path),
            "samples": str(samples_path),
            "delta": delta,
            "mode": mode,
            "seed": seed,
        },
        [out],
    )
    payload = {
        "problem": problem_to_dict(problem),
        "samples_csv": samples_csv,
        "delta": delta,
        "mode": mode,
        "seed": seed,
    }
    start = time.time()
    with _client(ctx.obj["server"]) as client:
        data = _call(client, "POST", "/v1/calibrate", json=payload)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    click.echo(f"lambda_hat         = {data['lambda_hat']:.10g}")
    click.echo(f"sqrt(n)*lambda_hat = {data['sqrt_n_lambda_hat']:.10g}")
    click.echo(
        "reference scales   = "
        f"[{data['reference_lower']:.10g}, {data['reference_upper']:.10g}]"
        " (single-dim lower, full-dim standard)"
    )
    for name in ("stage1", "stage2"):
        st = data[name]
        click.echo(
            f"{name}: mu_dot={st['mu_dot']:.6g} p={st['p']:.6g} "
            f"samples={st['q_samples']} steps={st['iterations']}"
        )
    click.echo(f"result written to {out} ({time.time() - start:.1f}s)")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True),
              help="Sweep configuration (TOML or JSON).")
@click.option("--out-dir", type=click.Path(), default=".", show_default=True)
@click.option("--full-scale", is_flag=True,
              help="Use the headline replication counts (30 scenarios x 20 trials).")
@click.option("--threads", default=None, type=int,
              help="Worker cap; results do not depend on it.")
@click.pass_context
def sweep(ctx, config_path, out_dir, full_scale, threads):
    """Run the benchmark sweep and write raw/summary CSVs."""
    try:
        data = _load_structured(Path(config_path))
    except Exception as exc:
        click.echo(f"error (validation): {exc}", err=True)
        sys.exit(2)
    if full_scale:
        data["full_scale"] = True
    if threads is not None:
        data["threads"] = threads
    elif "threads" not in data:
        data["threads"] = os.cpu_count() or 1
    out = Path(out_dir)
    raw_path = out / "sweep_raw.csv"
    summary_path = out / "sweep_summary.csv"
    manifest_path = out / "sweep_manifest.json"
    _write_manifest(
        manifest_path,
        "sweep",
        {"config": str(config_path), "resolved": data},
        [raw_path, summary_path],
    )
    start = time.time()
    with _client(ctx.obj["server"]) as client:
        resp = _call(client, "POST", "/v1/sweep", json=data)
    out.mkdir(parents=True, exist_ok=True)
    raw_path.write_text(resp["raw_csv"])
    summary_path.write_text(resp["summary_csv"])
    click.echo(f"wrote {raw_path} and {summary_path} ({time.time() - start:.1f}s)")
    if resp["failures"]:
        click.echo(f"warning: {resp['failures']} trial(s) recorded errors", err=True)
    width = max(len(m) for m in ("method",) + tuple(r["method"] for r in resp["summary"]))
    click.echo(f"{'n':>6} {'method':<{width}} {'VaR':>10} {'viol':>6} {'sqrt_n*lam':>11}")
    for row in resp["summary"]:
        click.echo(
            f"{row['n']:>6} {row['method']:<{width}} {row['var_delta']:>10.4f} "
            f"{row['violation_rate']:>6.3f} {row['mean_sqrt_n_lambda']:>11.4f}"
        )


@main.command()
@click.option("--scale", default=1.0, show_default=True, type=float)
@click.option("--half-width", default=2.5, show_default=True, type=float)
@click.option("--step", default=0.5, show_default=True, type=float)
@click.pass_context
def demo(ctx, scale, half_width, step):
    """Print error-tolerance membership tables for the two-dimensional toy.

    Three nested search subspaces (plane, quadrant, first axis) produce a
    strict inclusion chain of tolerance sets; the tables mark which grid
    errors each set admits.
    """
    with _client(ctx.obj["server"]) as client:
        data = _call(
            client,
            "GET",
            f"/v1/demo?scale={scale}&half_width={half_width}&step={step}",
        )
    ticks = data["ticks"]
    for name in ("plane", "quadrant", "axis"):
        table = data["tables"][name]
        click.echo(f"\nsubspace: {name} (members: {data['counts'][name]})")
        header = "      " + " ".join(f"{t:5.1f}" for t in ticks)
        click.echo(header)
        for i, tx in enumerate(ticks):
            row = " ".join("    #" if table[i][j] else "    ." for j in range(len(ticks)))
            click.echo(f"{tx:5.1f} {row}")
    click.echo(
        f"\ninclusion chain plane <= quadrant <= axis holds: {data['chain_ok']}; "
        f"strictly nested: {data['strictly_nested']}"
    )


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host, port):
    """Run the calibration service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
