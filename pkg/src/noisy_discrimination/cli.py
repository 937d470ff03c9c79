"""Command-line front end: solve, sweep, certify, oracle.

All structured output is JSON on stdout (the sweep writes CSV to its
--output file); diagnostics go to stderr.  Exit codes: 0 success or
certificate passed, 1 input problem, 2 convergence failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import (
    ConvergenceFailure,
    InvalidInput,
    NumericalFailure,
    ParseError,
    ValidationError,
)
from .oracles import (
    mirror_grid_oracle,
    projective_grid_oracle,
    random_povm_oracle,
    simulate_noisy_measurement,
)
from .problems import minimum_error_costs
from .serialization import (
    Problem,
    build_problem,
    certificate_to_json,
    confusion_is_templated,
    dump_json,
    load_json,
    parse_povm,
    parse_problem,
    result_to_json,
)
from .solvers import (
    MIRROR_SYMMETRIC,
    SolveResult,
    apply_assignment,
    dispatch_solve,
    evaluate_povm,
    is_mirror_symmetric,
)
from .transform import modified_costs, risk_operators

THREADS_ENV = "NOISY_DISCRIMINATION_THREADS"


def _worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return os.cpu_count() or 1
    try:
        count = int(raw)
    except ValueError as exc:
        raise InvalidInput(f"{THREADS_ENV} must be an integer, got {raw!r}") from exc
    if count < 1:
        raise InvalidInput(f"{THREADS_ENV} must be at least 1")
    return count


class _Parser(argparse.ArgumentParser):
    # bad flags are input errors: exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="noisy-discrimination",
        description="Optimal state discrimination through a noisy detector.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    solve = sub.add_parser("solve", parents=[], help="solve a problem file")
    solve.add_argument("--input", required=True, help="problem JSON file")
    solve.add_argument("--tol", type=float, default=None,
                       help="solver tolerance (default: file options)")
    solve.add_argument("--max-iter", type=int, default=None, dest="max_iter",
                       help="iteration budget (default: file options)")
    solve.add_argument("--assignment-search", action="store_true",
                       dest="assignment_search",
                       help="also search outcome relabelings")
    solve.set_defaults(func=run_solve)

    sweep = sub.add_parser("sweep", help="sweep a confusion template parameter")
    sweep.add_argument("--input", required=True, help="problem JSON with $-templates")
    sweep.add_argument("--param", default="q", help="template parameter name")
    sweep.add_argument("--from", dest="start", type=float, required=True)
    sweep.add_argument("--to", dest="stop", type=float, required=True)
    sweep.add_argument("--steps", type=int, required=True)
    sweep.add_argument("--output", required=True, help="CSV destination")
    sweep.add_argument("--plot", action="store_true",
                       help="also render a figure next to the CSV")
    sweep.set_defaults(func=run_sweep)

    certify = sub.add_parser("certify", help="check a POVM for optimality")
    certify.add_argument("--input", required=True, help="problem JSON file")
    certify.add_argument("--povm", required=True,
                         help="POVM JSON (or a solve result)")
    certify.set_defaults(func=run_certify)

    oracle = sub.add_parser("oracle", help="independent brute-force cross-checks")
    oracle.add_argument("--input", required=True, help="problem JSON file")
    oracle.add_argument("--mode", required=True,
                        choices=["grid", "random", "simulate"])
    oracle.add_argument("--resolution", type=float, default=1e-3,
                        help="grid spacing in radians (grid mode)")
    oracle.add_argument("--samples", type=int, default=100000,
                        help="POVM samples or simulation trials")
    oracle.add_argument("--seed", type=int, default=None,
                        help="RNG seed (default: file options)")
    oracle.set_defaults(func=run_oracle)
    return parser


def run_solve(args) -> int:
    problem = parse_problem(args.input)
    tol = args.tol if args.tol is not None else problem.options.tol
    max_iter = args.max_iter if args.max_iter is not None else problem.options.max_iter
    search = args.assignment_search or problem.options.assignment_search
    result = dispatch_solve(
        problem.ensemble,
        problem.costs,
        problem.confusion,
        tol=tol,
        max_iter=max_iter,
        search_assignments=search,
    )
    print(dump_json(result_to_json(result)))
    return 0


def _sweep_row(problem: Problem, value: float, result: SolveResult) -> dict:
    minimum_error = np.array_equal(
        problem.costs.entries,
        minimum_error_costs(problem.costs.n_outcomes, problem.costs.n_states).entries,
    )
    row = {
        "q": value,
        "cost": result.cost,
        "error_prob": 1.0 + result.cost if minimum_error else None,
        "a": None,
        "theta": None,
        "strategy_kind": result.strategy_kind,
    }
    if result.strategy_kind == MIRROR_SYMMETRIC and result.mirror is not None:
        row["a"] = result.mirror.a
        row["theta"] = result.mirror.theta
    return row


def run_sweep(args) -> int:
    raw = load_json(args.input)
    if args.steps < 1:
        raise InvalidInput("--steps must be at least 1")
    if not confusion_is_templated(raw, args.param):
        raise InvalidInput(
            f"the confusion matrix has no ${args.param} template entries; "
            "nothing to sweep"
        )
    values = np.linspace(args.start, args.stop, args.steps)

    def solve_one(value: float) -> dict:
        problem = build_problem(raw, args.param, value)
        result = dispatch_solve(
            problem.ensemble,
            problem.costs,
            problem.confusion,
            tol=problem.options.tol,
            max_iter=problem.options.max_iter,
            search_assignments=problem.options.assignment_search,
        )
        return _sweep_row(problem, value, result)

    workers = min(_worker_count(), len(values))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(solve_one, (float(v) for v in values)))
    else:
        rows = [solve_one(float(v)) for v in values]

    with open(args.output, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["q", "cost", "error_prob", "a", "theta", "strategy_kind"])
        for row in rows:
            writer.writerow([
                _cell(row["q"]),
                _cell(row["cost"]),
                _cell(row["error_prob"]),
                _cell(row["a"]),
                _cell(row["theta"]),
                row["strategy_kind"],
            ])
    print(f"wrote {len(rows)} rows to {args.output}", file=sys.stderr)
    if args.plot:
        from .plotting import render_sweep_figure

        figure = render_sweep_figure(rows, args.output)
        print(f"wrote figure to {figure}", file=sys.stderr)
    return 0


def _cell(value) -> str:
    return "" if value is None else repr(float(value))


def run_certify(args) -> int:
    problem = parse_problem(args.input)
    povm, meta = parse_povm(args.povm)
    costs, confusion = problem.costs, problem.confusion
    if meta:
        costs, confusion = apply_assignment(
            costs,
            confusion,
            meta.get("assignment", tuple(range(confusion.size))),
            meta.get("inference_map", tuple(range(costs.n_outcomes))),
        )
    result = evaluate_povm(povm, problem.ensemble, costs, confusion)
    payload = certificate_to_json(result.certificate)
    payload["cost"] = result.cost
    print(dump_json(payload))
    return 0 if result.certificate.passed else 1


def run_oracle(args) -> int:
    problem = parse_problem(args.input)
    seed = args.seed if args.seed is not None else problem.options.seed
    ensemble, costs, q = problem.ensemble, problem.costs, problem.confusion
    if args.mode == "grid":
        if ensemble.dim == 2 and costs.n_outcomes == 2:
            report = projective_grid_oracle(ensemble, costs, q, args.resolution)
        elif is_mirror_symmetric(ensemble) and costs.n_outcomes == 3 and q.size == 3:
            steps = max(2, int(math.ceil((math.pi / 4) / args.resolution)) + 1)
            report = mirror_grid_oracle(ensemble, costs, q, steps)
        else:
            raise InvalidInput(
                "grid mode only sweeps qubit problems (two-outcome axes or the "
                "mirror-symmetric triple); use --mode random instead"
            )
        payload = {
            "best_cost": report.best_cost,
            "best_strategy_description": report.best_strategy_description,
            "grid_resolution": report.grid_resolution,
            "samples_or_points": report.samples_or_points,
        }
    elif args.mode == "random":
        if args.samples < 1:
            raise InvalidInput("--samples must be at least 1")
        w = risk_operators(modified_costs(costs, q), ensemble, "modified")
        report = random_povm_oracle(w, args.samples, seed)
        payload = {
            "best_cost": report.best_cost,
            "best_strategy_description": report.best_strategy_description,
            "grid_resolution": report.grid_resolution,
            "samples_or_points": report.samples_or_points,
        }
    else:
        if args.samples < 1:
            raise InvalidInput("--samples must be at least 1")
        result = dispatch_solve(
            ensemble,
            costs,
            q,
            tol=problem.options.tol,
            max_iter=problem.options.max_iter,
            search_assignments=problem.options.assignment_search,
        )
        sim_costs, sim_q = apply_assignment(
            costs, q, result.assignment, result.inference_map
        )
        estimate = simulate_noisy_measurement(
            ensemble, result.povm, sim_costs, sim_q, args.samples, seed
        )
        payload = {
            "mean_cost": estimate.mean_cost,
            "standard_error": estimate.standard_error,
            "trials": estimate.trials,
            "seed": estimate.seed,
        }
    print(dump_json(payload))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 1
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1
    except InvalidInput as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 1
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    except ConvergenceFailure as exc:
        if isinstance(exc.best, SolveResult):
            print(dump_json(result_to_json(exc.best)))
        print(f"convergence failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
