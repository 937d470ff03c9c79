"""Problem and POVM files, JSON in and out.

Complex numbers travel as two-element [re, im] arrays, matrices as
row-major nested lists.  Bare numbers are accepted on input where a complex
entry is expected and read as purely real.  Output floats use Python's
shortest round-tripping repr, so parsing an emitted file reproduces the
doubles bit for bit.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .core import ConfusionMatrix, CostMatrix, DensityMatrix, Ensemble, Povm, validate
from .errors import InvalidInput, ParseError, ValidationError
from .problems import identity_confusion, minimum_error_costs
from .solvers import SolveResult

_NUMBER = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"


@dataclass(frozen=True)
class SolveOptions:
    tol: float = 1e-9
    max_iter: int = 10000
    seed: int = 0
    assignment_search: bool = False


@dataclass(frozen=True)
class Problem:
    ensemble: Ensemble
    costs: CostMatrix
    confusion: ConfusionMatrix
    options: SolveOptions = field(default_factory=SolveOptions)


def load_json(path: str):
    try:
        with open(path, encoding="utf-8") as handle:
            return json.load(handle)
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"{path} is not valid JSON: {exc.msg}", line=exc.lineno, column=exc.colno
        ) from exc


def _fail(path: str, message: str, residual: float | None = None):
    raise ValidationError(path, message, residual)


def _parse_scalar(node, path: str) -> complex:
    if isinstance(node, bool):
        _fail(path, "expected a number, got a boolean")
    if isinstance(node, (int, float)):
        return complex(float(node), 0.0)
    if (
        isinstance(node, list)
        and len(node) == 2
        and all(isinstance(part, (int, float)) and not isinstance(part, bool) for part in node)
    ):
        return complex(float(node[0]), float(node[1]))
    _fail(path, "expected a real number or an [re, im] pair")


def _parse_complex_matrix(node, rows: int, cols: int, path: str) -> np.ndarray:
    if not isinstance(node, list) or len(node) != rows:
        _fail(path, f"expected a {rows}x{cols} matrix")
    out = np.zeros((rows, cols), dtype=complex)
    for r, row in enumerate(node):
        if not isinstance(row, list) or len(row) != cols:
            _fail(f"{path}[{r}]", f"expected {cols} entries")
        for c, entry in enumerate(row):
            out[r, c] = _parse_scalar(entry, f"{path}[{r}][{c}]")
    return out


def _parse_real_matrix(node, path: str, rows=None, cols=None) -> np.ndarray:
    if not isinstance(node, list) or not node:
        _fail(path, "expected a non-empty matrix")
    width = None
    values = []
    for r, row in enumerate(node):
        if not isinstance(row, list) or not row:
            _fail(f"{path}[{r}]", "expected a non-empty row")
        if width is None:
            width = len(row)
        elif len(row) != width:
            _fail(f"{path}[{r}]", f"expected {width} entries to match the first row")
        values.append(
            [_require_real(entry, f"{path}[{r}][{c}]") for c, entry in enumerate(row)]
        )
    out = np.array(values, dtype=float)
    if rows is not None and out.shape[0] != rows:
        _fail(path, f"expected {rows} rows, got {out.shape[0]}")
    if cols is not None and out.shape[1] != cols:
        _fail(path, f"expected {cols} columns, got {out.shape[1]}")
    return out


def _require_real(entry, path: str) -> float:
    if isinstance(entry, bool) or not isinstance(entry, (int, float)):
        _fail(path, "expected a real number")
    value = float(entry)
    if not math.isfinite(value):
        _fail(path, "entries must be finite")
    return value


def _template_value(text: str, param: str, value: float, path: str) -> float:
    """Evaluate the affine grammar c0 + c1*$param (either piece optional)."""
    marker = "$" + param
    compact = text.replace(" ", "")
    pieces = compact.split(marker)
    if len(pieces) == 1:
        match = re.fullmatch(f"[+-]?{_NUMBER}", compact)
        if match is None:
            _fail(path, f"cannot parse template entry {text!r}")
        return float(compact)
    if len(pieces) > 2 or pieces[1]:
        _fail(path, f"template entry {text!r} must use {marker} at most once, last")
    prefix = pieces[0]
    match = re.fullmatch(
        f"(?P<c0>[+-]?{_NUMBER})?(?P<sign>[+-])?(?:(?P<c1>{_NUMBER})\\*)?", prefix
    )
    if match is None:
        _fail(path, f"template entry {text!r} is not of the form c0 + c1*{marker}")
    base = float(match.group("c0")) if match.group("c0") else 0.0
    slope = float(match.group("c1")) if match.group("c1") else 1.0
    if match.group("sign") == "-":
        slope = -slope
    elif match.group("sign") is None and match.group("c0") and not match.group("c1"):
        # forms like "1$q" without an operator make no sense
        _fail(path, f"template entry {text!r} needs a + or - before the {marker} term")
    return base + slope * value


def _parse_confusion(node, n: int, path: str, param, value) -> np.ndarray:
    if not isinstance(node, list) or len(node) != n:
        _fail(path, f"expected a {n}x{n} matrix")
    out = np.zeros((n, n))
    for r, row in enumerate(node):
        if not isinstance(row, list) or len(row) != n:
            _fail(f"{path}[{r}]", f"expected {n} entries")
        for c, entry in enumerate(row):
            cell = f"{path}[{r}][{c}]"
            if isinstance(entry, str):
                if param is None:
                    _fail(cell, "template entries need a sweep parameter binding")
                out[r, c] = _template_value(entry, param, value, cell)
            else:
                out[r, c] = _require_real(entry, cell)
    return out


def confusion_is_templated(raw: dict, param: str) -> bool:
    node = raw.get("confusion") if isinstance(raw, dict) else None
    if not isinstance(node, list):
        return False
    marker = "$" + param
    return any(
        isinstance(entry, str) and marker in entry
        for row in node
        if isinstance(row, list)
        for entry in row
    )


def _check_options(node, path: str) -> SolveOptions:
    if not isinstance(node, dict):
        _fail(path, "expected an object")
    known = {"tol", "max_iter", "seed", "assignment_search"}
    for key in node:
        if key not in known:
            _fail(f"{path}.{key}", "unknown option")
    tol = node.get("tol", 1e-9)
    if isinstance(tol, bool) or not isinstance(tol, (int, float)) or not tol > 0:
        _fail(f"{path}.tol", "must be a positive number")
    max_iter = node.get("max_iter", 10000)
    if isinstance(max_iter, bool) or not isinstance(max_iter, int) or max_iter < 1:
        _fail(f"{path}.max_iter", "must be a positive integer")
    seed = node.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        _fail(f"{path}.seed", "must be a non-negative integer")
    search = node.get("assignment_search", False)
    if not isinstance(search, bool):
        _fail(f"{path}.assignment_search", "must be a boolean")
    return SolveOptions(
        tol=float(tol), max_iter=max_iter, seed=seed, assignment_search=search
    )


def build_problem(raw, param: str | None = None, value: float | None = None) -> Problem:
    """Turn a decoded problem document into validated domain objects.

    ``param``/``value`` bind the sweep parameter so confusion entries may be
    affine template strings like "1-2*$q".
    """
    if not isinstance(raw, dict):
        _fail("$", "problem document must be a JSON object")
    known = {"dimension", "states", "cost", "confusion", "options"}
    for key in raw:
        if key not in known:
            _fail(f"$.{key}", "unknown field")
    dim = raw.get("dimension")
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        _fail("$.dimension", "must be a positive integer")
    states_node = raw.get("states")
    if not isinstance(states_node, list) or not states_node:
        _fail("$.states", "expected a non-empty list of states")

    priors = []
    densities = []
    for k, entry in enumerate(states_node):
        here = f"$.states[{k}]"
        if not isinstance(entry, dict):
            _fail(here, "expected an object with prior and vector or matrix")
        extra = set(entry) - {"prior", "vector", "matrix"}
        if extra:
            _fail(f"{here}.{sorted(extra)[0]}", "unknown field")
        prior = entry.get("prior")
        if isinstance(prior, bool) or not isinstance(prior, (int, float)):
            _fail(f"{here}.prior", "expected a real number")
        priors.append(float(prior))
        if ("vector" in entry) == ("matrix" in entry):
            _fail(here, "provide exactly one of vector or matrix")
        if "vector" in entry:
            node = entry["vector"]
            if not isinstance(node, list) or len(node) != dim:
                _fail(f"{here}.vector", f"expected {dim} amplitudes")
            amplitudes = np.array(
                [_parse_scalar(x, f"{here}.vector[{i}]") for i, x in enumerate(node)]
            )
            norm = np.linalg.norm(amplitudes)
            if norm < 1e-12:
                _fail(f"{here}.vector", "state vector is numerically zero")
            amplitudes = amplitudes / norm
            densities.append(np.outer(amplitudes, amplitudes.conj()))
        else:
            densities.append(
                _parse_complex_matrix(entry["matrix"], dim, dim, f"{here}.matrix")
            )

    m = len(densities)
    confusion_node = raw.get("confusion")
    cost_node = raw.get("cost")
    if confusion_node is not None:
        if not isinstance(confusion_node, list):
            _fail("$.confusion", "expected a matrix")
        n = len(confusion_node)
    elif cost_node is not None:
        if not isinstance(cost_node, list):
            _fail("$.cost", "expected a matrix")
        n = len(cost_node)
    else:
        n = m

    if cost_node is not None:
        cost_entries = _parse_real_matrix(cost_node, "$.cost", rows=n, cols=m)
        costs = CostMatrix(cost_entries)
    else:
        costs = minimum_error_costs(n, m)
    if confusion_node is not None:
        confusion = ConfusionMatrix(
            _parse_confusion(confusion_node, n, "$.confusion", param, value)
        )
    else:
        confusion = identity_confusion(n)
    options = _check_options(raw.get("options", {}), "$.options")

    ensemble = Ensemble(np.array(priors), tuple(DensityMatrix(d) for d in densities))
    _validate_problem(ensemble, confusion)
    return Problem(ensemble=ensemble, costs=costs, confusion=confusion, options=options)


def _validate_problem(ensemble: Ensemble, confusion: ConfusionMatrix) -> None:
    problems = []
    report = validate(ensemble)
    for violation in report.violations:
        problems.append((_ensemble_path(violation.location), violation))
    for violation in validate(confusion).violations:
        problems.append(("$.confusion", violation))
    if len(problems) == 1:
        path, violation = problems[0]
        raise ValidationError(path, violation.message, violation.residual)
    if problems:
        path, first = problems[0]
        detail = "; ".join(f"{p}: {v.message}" for p, v in problems)
        raise ValidationError(path, "multiple violations: " + detail, first.residual)


def _ensemble_path(location: str) -> str:
    # map core validator locations onto JSON paths into the problem file
    if location == "priors":
        return "$.states[*].prior"
    match = re.match(r"states\[(\d+)\]", location)
    if match:
        return f"$.states[{match.group(1)}].matrix"
    return "$." + location


def parse_problem(path: str, param: str | None = None, value: float | None = None) -> Problem:
    """Read and validate a problem file.  Raises ParseError for malformed
    JSON and ValidationError (with a JSON path) for contract violations."""
    return build_problem(load_json(path), param, value)


def parse_povm_document(raw, dim_hint: int | None = None) -> tuple[Povm, dict]:
    """Accept either a plain POVM file {dimension, operators} or a solve
    result that nests the POVM under "povm".  Returns the POVM plus any
    assignment/inference metadata found alongside it.

    Operator entries are parsed but deliberately not validated: feeding a
    slightly wrong POVM to the certifier is a supported workflow.
    """
    if not isinstance(raw, dict):
        _fail("$", "POVM document must be a JSON object")
    meta = {}
    node = raw
    if "povm" in raw:
        node = raw["povm"]
        if not isinstance(node, dict):
            _fail("$.povm", "expected an object")
        if "assignment" in raw:
            meta["assignment"] = _parse_index_list(raw["assignment"], "$.assignment")
        if "inference_map" in raw:
            meta["inference_map"] = _parse_index_list(
                raw["inference_map"], "$.inference_map"
            )
    dim = node.get("dimension", dim_hint)
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        _fail("$.dimension", "must be a positive integer")
    operators_node = node.get("operators")
    if not isinstance(operators_node, list) or not operators_node:
        _fail("$.operators", "expected a non-empty list of matrices")
    operators = [
        _parse_complex_matrix(op, dim, dim, f"$.operators[{i}]")
        for i, op in enumerate(operators_node)
    ]
    return Povm(operators), meta


def _parse_index_list(node, path: str) -> tuple[int, ...]:
    if not isinstance(node, list) or not all(
        isinstance(x, int) and not isinstance(x, bool) and x >= 0 for x in node
    ):
        _fail(path, "expected a list of non-negative integers")
    return tuple(node)


def parse_povm(path: str, dim_hint: int | None = None) -> tuple[Povm, dict]:
    return parse_povm_document(load_json(path), dim_hint)


def complex_to_json(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def matrix_to_json(matrix: np.ndarray) -> list:
    arr = np.asarray(matrix)
    return [[complex_to_json(complex(arr[r, c])) for c in range(arr.shape[1])]
            for r in range(arr.shape[0])]


def povm_to_json(povm: Povm) -> dict:
    return {
        "dimension": povm.dim,
        "operators": [matrix_to_json(op) for op in povm.operators],
    }


def certificate_to_json(certificate) -> dict:
    return {
        "residuals": {
            "gamma_hermiticity_residual": certificate.gamma_hermiticity_residual,
            "min_eig_gap": certificate.min_eig_gap,
            "stationarity_residual": certificate.stationarity_residual,
        },
        "passed": bool(certificate.passed),
        "tol": certificate.tol,
    }


def result_to_json(result: SolveResult) -> dict:
    payload = {
        "cost": result.cost,
        "povm": povm_to_json(result.povm),
        "strategy_kind": result.strategy_kind,
        "assignment": list(result.assignment),
        "inference_map": list(result.inference_map),
        "certificate": certificate_to_json(result.certificate),
    }
    if result.mirror is not None:
        payload["mirror"] = {
            "theta": result.mirror.theta,
            "a": result.mirror.a,
            "b": result.mirror.b,
        }
    if result.iterations is not None:
        payload["iterations"] = result.iterations
    return payload


def dump_json(payload) -> str:
    return json.dumps(payload, indent=2)
