"""Problem files (JSON) and entropy reports (CSV or plain text)."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from .classical import check_alpha
from .decomp import SearchBudget
from .engine import EntropyReport, Problem, VerificationResult
from .errors import DynamicsError, InvalidAlpha, ProblemError, StateValidationError
from .refsys import Dynamics, kms_mixture
from .states import AlgebraModel, validate_state

REFERENCE_TAGS = ("full", "invariant", "kms")
BUNDLED = ("qubit_gibbs", "m2m2_gibbs", "degenerate_h", "pure_state")

REPORT_COLUMNS = ("reference", "alpha", "value_bits", "method", "decomposition_size", "converged", "seed")
VERIFY_COLUMNS = ("theorem_id", "passed", "lhs", "rhs", "slack", "status", "reference", "alpha")
VERIFY_MARKER = "# verification"


# ---------------------------------------------------------------------------
# parsing


def _obj(x: Any, path: str) -> dict:
    if not isinstance(x, dict):
        raise ProblemError(path, "expected an object")
    return x


def _real(x: Any, path: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
        raise ProblemError(path, f"expected a finite number, got {x!r}")
    return float(x)


def _int(x: Any, path: str, minimum: int = 0) -> int:
    if isinstance(x, bool) or not isinstance(x, int) or x < minimum:
        raise ProblemError(path, f"expected an integer >= {minimum}, got {x!r}")
    return x


def _complex(x: Any, path: str) -> complex:
    if isinstance(x, list):
        if len(x) != 2:
            raise ProblemError(path, "complex entries are [re, im] pairs")
        return complex(_real(x[0], path), _real(x[1], path))
    return complex(_real(x, path))


def parse_matrix(x: Any, path: str, n: Optional[int] = None) -> np.ndarray:
    """Square complex matrix from nested lists of ``[re, im]`` pairs (plain reals allowed)."""
    if not isinstance(x, list) or not x or not all(isinstance(r, list) for r in x):
        raise ProblemError(path, "expected a non-empty list of rows")
    size = len(x)
    if any(len(r) != size for r in x):
        raise ProblemError(path, "matrix is not square")
    if n is not None and size != n:
        raise ProblemError(path, f"expected a {n}x{n} matrix, got {size}x{size}")
    return np.array([[_complex(v, f"{path}[{i}][{j}]") for j, v in enumerate(r)] for i, r in enumerate(x)])


def _parse_dynamics(d: dict, alg: AlgebraModel) -> Dynamics:
    kind = d.get("kind")
    try:
        if kind == "hamiltonian":
            return Dynamics.hamiltonian_flow(parse_matrix(d.get("hamiltonian"), "dynamics.hamiltonian", alg.total_dim), alg)
        if kind == "group":
            if "generators" in d:
                gens = d["generators"]
                if not isinstance(gens, list) or not gens:
                    raise ProblemError("dynamics.generators", "expected a non-empty list of matrices")
                ms = [parse_matrix(g, f"dynamics.generators[{i}]", alg.total_dim) for i, g in enumerate(gens)]
                return Dynamics.from_generators(ms, alg)
            us = d.get("unitaries")
            if not isinstance(us, list) or not us:
                raise ProblemError("dynamics.unitaries", "expected a non-empty list of matrices")
            ms = [parse_matrix(u, f"dynamics.unitaries[{i}]", alg.total_dim) for i, u in enumerate(us)]
            return Dynamics.finite_group(ms, alg)
    except DynamicsError as e:
        raise ProblemError("dynamics", str(e)) from e
    raise ProblemError("dynamics.kind", f"expected 'hamiltonian' or 'group', got {kind!r}")


def parse_problem(data: Any, name: str = "") -> Problem:
    """Validate a decoded problem file.

    Raises
    ------
    ProblemError
        With ``path`` naming the first offending field.
    """
    data = _obj(data, "<root>")

    alg_d = _obj(data.get("algebra"), "algebra")
    dims = alg_d.get("block_dims")
    if not isinstance(dims, list) or not dims:
        raise ProblemError("algebra.block_dims", "expected a non-empty list of block sizes")
    alg = AlgebraModel(tuple(_int(v, f"algebra.block_dims[{i}]", 1) for i, v in enumerate(dims)))

    dyn = None
    if data.get("dynamics") is not None:
        dyn = _parse_dynamics(_obj(data["dynamics"], "dynamics"), alg)

    beta = None if data.get("beta") is None else _real(data["beta"], "beta")

    state_d = _obj(data.get("state"), "state")
    if "matrix" in state_d:
        m = parse_matrix(state_d["matrix"], "state.matrix", alg.total_dim)
        try:
            rho = validate_state(m, alg)
        except StateValidationError as e:
            raise ProblemError("state.matrix", str(e)) from e
    elif "gibbs_weights" in state_d:
        if dyn is None or dyn.kind != "hamiltonian" or beta is None:
            raise ProblemError("state.gibbs_weights", "needs Hamiltonian dynamics and beta")
        w = state_d["gibbs_weights"]
        if not isinstance(w, list) or len(w) != alg.n_blocks:
            raise ProblemError("state.gibbs_weights", f"expected {alg.n_blocks} block weights")
        ws = [_real(v, f"state.gibbs_weights[{i}]") for i, v in enumerate(w)]
        if min(ws) < 0 or abs(sum(ws) - 1.0) > 1e-12:
            raise ProblemError("state.gibbs_weights", "weights must be nonnegative and sum to 1")
        rho = kms_mixture(dyn, beta, ws)
    else:
        raise ProblemError("state", "needs 'matrix' or 'gibbs_weights'")

    alphas = data.get("alphas")
    if not isinstance(alphas, list) or not alphas:
        raise ProblemError("alphas", "expected a non-empty list")
    parsed_alphas = []
    for i, a in enumerate(alphas):
        try:
            parsed_alphas.append(check_alpha(_real(a, f"alphas[{i}]"), allow_one=True))
        except InvalidAlpha as e:
            raise ProblemError(f"alphas[{i}]", str(e)) from e

    refs = data.get("references", ["full"])
    if not isinstance(refs, list) or not refs:
        raise ProblemError("references", "expected a non-empty list of tags")
    for i, r in enumerate(refs):
        if r not in REFERENCE_TAGS:
            raise ProblemError(f"references[{i}]", f"unknown reference {r!r}")
        if r in ("invariant", "kms") and dyn is None:
            raise ProblemError(f"references[{i}]", f"{r!r} needs dynamics")
        if r == "kms" and (dyn.kind != "hamiltonian" or beta is None):
            raise ProblemError(f"references[{i}]", "'kms' needs Hamiltonian dynamics and beta")

    s = _obj(data.get("search", {}), "search")
    unknown = set(s) - {"restarts", "iterations", "seed", "m_cap"}
    if unknown:
        raise ProblemError("search", f"unknown keys {sorted(unknown)}")
    default = SearchBudget()
    budget = SearchBudget(
        restarts=_int(s.get("restarts", default.restarts), "search.restarts", 1),
        iterations=_int(s.get("iterations", default.iterations), "search.iterations", 1),
        seed=_int(s.get("seed", default.seed), "search.seed", 0),
        m_cap=None if s.get("m_cap") is None else _int(s["m_cap"], "search.m_cap", 1),
    )

    expected = data.get("expected", [])
    if not isinstance(expected, list):
        raise ProblemError("expected", "expected a list")
    exp = []
    for i, e in enumerate(expected):
        e = _obj(e, f"expected[{i}]")
        if e.get("reference") not in refs:
            raise ProblemError(f"expected[{i}].reference", "must be one of the requested references")
        item = {
            "reference": e["reference"],
            "alpha": _real(e.get("alpha"), f"expected[{i}].alpha"),
            "value": _real(e.get("value"), f"expected[{i}].value"),
        }
        if "tol" in e:
            item["tol"] = _real(e["tol"], f"expected[{i}].tol")
        exp.append(item)

    return Problem(
        state=rho,
        alphas=tuple(parsed_alphas),
        dynamics=dyn,
        beta=beta,
        references=tuple(dict.fromkeys(refs)),
        budget=budget,
        expected=tuple(exp),
        name=str(data.get("name", name)),
    )


def resolve_problem_path(source: str) -> Path:
    """A filesystem path, or the name of a bundled example."""
    p = Path(source)
    if p.exists():
        return p
    stem = source[:-5] if source.endswith(".json") else source
    if stem in BUNDLED:
        return Path(str(resources.files("renyi_cstar") / "problems" / f"{stem}.json"))
    raise ProblemError("<file>", f"no such file or bundled example: {source}")


def load_problem(source: str) -> Problem:
    path = resolve_problem_path(source)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ProblemError("<file>", f"invalid JSON: {e}") from e
    except OSError as e:
        raise ProblemError("<file>", str(e)) from e
    return parse_problem(data, name=path.stem)


# ---------------------------------------------------------------------------
# reports


def fmt(x: Optional[float]) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return format(float(x) + 0.0, ".12g")


def _report_row(r: EntropyReport) -> list[str]:
    return [r.reference, fmt(r.alpha), fmt(r.value), r.method, str(r.decomposition_size), str(r.converged).lower(), str(r.seed)]


def _verify_row(v: VerificationResult) -> list[str]:
    return [
        v.theorem_id, str(v.passed).lower(), fmt(v.lhs), fmt(v.rhs), fmt(v.slack),
        v.status, v.reference, "" if v.alpha is None else fmt(v.alpha),
    ]


def sort_reports(reports: Sequence[EntropyReport]) -> list[EntropyReport]:
    return sorted(reports, key=lambda r: (r.reference, r.alpha))


def write_csv(reports: Sequence[EntropyReport], verification: Sequence[VerificationResult] = ()) -> str:
    """CSV report; a ``# verification`` line starts the optional second table."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in sort_reports(reports):
        w.writerow(_report_row(r))
    if verification:
        buf.write(VERIFY_MARKER + "\n")
        w.writerow(VERIFY_COLUMNS)
        for v in verification:
            w.writerow(_verify_row(v))
    return buf.getvalue()


def write_text(reports: Sequence[EntropyReport], verification: Sequence[VerificationResult] = ()) -> str:
    """Aligned plain-text table with the same columns as the CSV."""

    def table(header, rows):
        widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(header)]
        lines = ["  ".join(c.ljust(wd) for c, wd in zip(header, widths)).rstrip()]
        lines += ["  ".join(c.ljust(wd) for c, wd in zip(r, widths)).rstrip() for r in rows]
        return lines

    lines = table(REPORT_COLUMNS, [_report_row(r) for r in sort_reports(reports)])
    if verification:
        lines += ["", VERIFY_MARKER]
        lines += table(VERIFY_COLUMNS, [_verify_row(v) for v in verification])
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ParsedReport:
    rows: tuple[dict, ...]
    verification: tuple[dict, ...]


def _typed_row(row: dict) -> dict:
    out = dict(row)
    out["alpha"] = float(row["alpha"])
    out["value_bits"] = float(row["value_bits"])
    out["decomposition_size"] = int(row["decomposition_size"])
    out["converged"] = row["converged"] == "true"
    out["seed"] = int(row["seed"])
    return out


def _typed_verify(row: dict) -> dict:
    out = dict(row)
    for k in ("lhs", "rhs", "slack"):
        out[k] = float(row[k])
    out["passed"] = row["passed"] == "true"
    out["alpha"] = float(row["alpha"]) if row["alpha"] else None
    return out


def parse_csv(text: str) -> ParsedReport:
    """Inverse of :func:`write_csv`."""
    head, _, tail = text.partition(VERIFY_MARKER + "\n")
    rows = tuple(_typed_row(r) for r in csv.DictReader(io.StringIO(head)))
    ver = tuple(_typed_verify(r) for r in csv.DictReader(io.StringIO(tail))) if tail else ()
    return ParsedReport(rows, ver)
