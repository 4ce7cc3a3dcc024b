"""Input/output formats: problem files, sample CSVs, sweep configs, and
result records.

Problem files are JSON or TOML with keys ``m``, ``d``, ``objective``,
``constraints`` (list of ``{A, c}`` with row-major A), ``domain``
(``{G, h, nonneg}``), ``dummy_coords``, and optional ``epigraph_var``.
Sample files are CSV with one observation per row and one column per
non-dummy parameter coordinate (optional header); the loader inserts the
dummy coordinates.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .bench import SweepConfig
from .errors import FileFormatError, InputValidationError
from .model import DomainSpec, ProblemSpec, SensitivityMap

__all__ = [
    "problem_from_dict",
    "problem_to_dict",
    "load_problem",
    "parse_samples_csv",
    "load_samples",
    "sweep_config_from_dict",
    "load_sweep_config",
]


def _load_structured(path: Path) -> dict:
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        try:
            return tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise FileFormatError(f"invalid TOML in {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"invalid JSON in {path}: {exc}", line=exc.lineno) from exc


def problem_from_dict(data: dict) -> ProblemSpec:
    try:
        m = int(data["m"])
        d = int(data["d"])
        objective = np.asarray(data["objective"], dtype=float)
        constraints = tuple(
            SensitivityMap(
                A=np.asarray(entry["A"], dtype=float),
                c=np.asarray(entry["c"], dtype=float),
            )
            for entry in data["constraints"]
        )
        dom = data["domain"]
        domain = DomainSpec(
            G=np.asarray(dom.get("G", []), dtype=float).reshape(-1, m),
            h=np.asarray(dom.get("h", []), dtype=float),
            nonneg=tuple(bool(v) for v in dom["nonneg"]),
        )
        dummy = frozenset(int(i) for i in data.get("dummy_coords", []))
        epi = data.get("epigraph_var")
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"malformed problem description: {exc}") from exc
    return ProblemSpec(
        m=m,
        d=d,
        objective=objective,
        constraints=constraints,
        domain=domain,
        dummy_coords=dummy,
        epigraph_var=None if epi is None else int(epi),
    )


def problem_to_dict(problem: ProblemSpec) -> dict:
    return {
        "m": problem.m,
        "d": problem.d,
        "objective": problem.objective.tolist(),
        "constraints": [
            {"A": np.asarray(s.A).tolist(), "c": np.asarray(s.c).tolist()}
            for s in problem.constraints
        ],
        "domain": {
            "G": np.atleast_2d(np.asarray(problem.domain.G, dtype=float))
            .reshape(-1, problem.m)
            .tolist(),
            "h": np.asarray(problem.domain.h, dtype=float).tolist(),
            "nonneg": [bool(v) for v in problem.domain.nonneg],
        },
        "dummy_coords": sorted(problem.dummy_coords),
        "epigraph_var": problem.epigraph_var,
    }


def load_problem(path) -> ProblemSpec:
    """Parse and validate a problem file, reporting the first violated
    invariant."""
    return problem_from_dict(_load_structured(Path(path)))


def parse_samples_csv(text: str, problem: ProblemSpec) -> np.ndarray:
    """Rows of observations with dummy coordinates inserted.

    The file carries one column per non-dummy coordinate, in coordinate
    order; a non-numeric first row is treated as a header.  Malformed rows
    are reported with their line number.
    """
    risky = [j for j in range(problem.d) if j not in problem.dummy_coords]
    rows = []
    lines = text.splitlines()
    start = 0
    if lines:
        first = [c.strip() for c in lines[0].split(",") if c.strip() != ""]
        try:
            [float(c) for c in first]
        except ValueError:
            start = 1  # header row
    for lineno, line in enumerate(lines[start:], start=start + 1):
        if not line.strip():
            continue
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != len(risky):
            raise FileFormatError(
                f"expected {len(risky)} columns, found {len(cells)}", line=lineno
            )
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise FileFormatError(f"non-numeric value ({exc})", line=lineno) from exc
    if not rows:
        raise FileFormatError("no sample rows found")
    risky_arr = np.asarray(rows, dtype=float)
    out = np.ones((risky_arr.shape[0], problem.d))
    out[:, risky] = risky_arr
    return out


def load_samples(path, problem: ProblemSpec) -> np.ndarray:
    return parse_samples_csv(Path(path).read_text(), problem)


_SWEEP_KEYS = {
    "d",
    "delta",
    "n_grid",
    "trials_per_cov",
    "cov_draws",
    "methods",
    "seed",
    "cap",
    "threads",
}


def sweep_config_from_dict(data: dict) -> SweepConfig:
    unknown = set(data) - _SWEEP_KEYS - {"full_scale"}
    if unknown:
        raise FileFormatError(f"unknown sweep config keys: {sorted(unknown)}")
    kwargs = {k: data[k] for k in _SWEEP_KEYS if k in data}
    if "n_grid" in kwargs:
        kwargs["n_grid"] = tuple(int(n) for n in kwargs["n_grid"])
    if "methods" in kwargs:
        kwargs["methods"] = tuple(str(m) for m in kwargs["methods"])
    try:
        config = SweepConfig(**kwargs)
    except (TypeError, InputValidationError) as exc:
        raise FileFormatError(f"invalid sweep config: {exc}") from exc
    if data.get("full_scale"):
        config = config.full_scale()
    return config


def load_sweep_config(path) -> SweepConfig:
    return sweep_config_from_dict(_load_structured(Path(path)))
