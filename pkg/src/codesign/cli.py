"""Command-line front end: ``optimize``, ``validate`` and ``info``.

Exit codes: 0 success (Optimal or Feasible), 2 infeasible, 3 input error,
4 iteration limit. Diagnostics go to standard error; summaries, reports and
``info`` output go to standard output.
"""

import argparse
import json
import sys

import numpy as np

from .errors import CodesignError, InfeasibleTorque
from .serialization import export_result, load_motor_library, load_result, load_robot, load_task
from .solver import FEASIBLE, INFEASIBLE, ITERATION_LIMIT, OPTIMAL, SolverOptions, co_optimize
from .transcription import FAMILIES, DecisionLayout, ObjectiveSpec, TranscriptionOptions, build_nlp

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_INPUT = 3
EXIT_LIMIT = 4
EXIT_CODES = {OPTIMAL: EXIT_OK, FEASIBLE: EXIT_OK, INFEASIBLE: EXIT_INFEASIBLE, ITERATION_LIMIT: EXIT_LIMIT}


class InputError(CodesignError):
    """Bad command-line input detected after parsing."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _problem_inputs(args):
    model = load_robot(args.robot)
    task = load_task(args.task)
    library = load_motor_library(args.motors) if args.motors else None
    return model, task, library


def _build(args, model, task, library, K=None, T=None, freeze=False):
    objective = task.objective
    alpha = getattr(args, "alpha", None)
    beta = getattr(args, "beta", None)
    if alpha is not None or beta is not None:
        objective = ObjectiveSpec(
            alpha=objective.alpha if alpha is None else alpha,
            beta=objective.beta if beta is None else beta,
            mode=objective.mode,
        )
    return build_nlp(
        model,
        task,
        library=library,
        objective=objective,
        K=K,
        T=T,
        options=TranscriptionOptions(freeze_parameters=freeze),
    )


def _positive(kind):
    def parse(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid value {text!r}") from None
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v

    return parse


def _non_negative(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid value {text!r}") from None
    if not (np.isfinite(v) and v >= 0):
        raise argparse.ArgumentTypeError(f"must be finite and non-negative, got {text}")
    return v


def cmd_optimize(args):
    model, task, library = _problem_inputs(args)
    if args.knots is not None and args.knots < 2:
        raise InputError("--knots must be at least 2")
    problem = _build(args, model, task, library, K=args.knots, T=args.time, freeze=args.freeze_parameters)
    opts = SolverOptions(
        seed=args.seed,
        restarts=args.restarts,
        max_iterations=args.max_iterations,
        hessian=args.hessian,
        log=sys.stderr if args.verbose else None,
    )
    result = co_optimize(problem, opts=opts)
    doc = export_result(problem, result, args.out, opts=opts, csv_path=args.csv)
    motor = doc["motor"]["selected"] or "-"
    print(
        f"status={result.status} objective={result.objective:.9g} motor={motor} "
        f"max_violation={result.max_violation:.3e} out={args.out}"
    )
    return EXIT_CODES[result.status]


def family_report(problem, x, slack_max):
    """Max violation per family; complementarity slacks are held to ``slack_max``."""
    fams = problem.family_violations(x)
    idx = problem.layout.all_of("slack")
    if len(idx):
        fams["contact"] = max(fams["contact"], float(np.maximum(x[idx] - slack_max, 0.0).max()))
    return fams


def cmd_validate(args):
    doc = load_result(args.result)
    model, task, library = _problem_inputs(args)
    try:
        K, T = int(doc["layout"]["K"]), float(doc["layout"]["T"])
        obj = doc["objective"]
        schedule = doc["solver"]["options"].get("slack_schedule") or SolverOptions().slack_schedule
    except (KeyError, TypeError, ValueError):
        raise InputError("result document lacks layout or solver fields") from None
    args.alpha, args.beta = obj.get("alpha"), obj.get("beta")
    x = doc["decision_vector"]
    dims = tuple(doc["layout"].get(k) for k in ("n", "m", "l", "p"))
    if dims != (model.n, model.m, model.l, model.p):
        expected = DecisionLayout.formula(K, model.n, model.m, model.l, model.p)
        raise InputError(f"result has {x.size} decision variables, the problem has {expected}")
    problem = _build(args, model, task, library, K=K, T=T)
    if x.shape != (problem.n_vars,):
        raise InputError(f"result has {x.size} decision variables, the problem has {problem.n_vars}")
    fams = family_report(problem, x, float(schedule[-1]))
    ok = True
    for fam in FAMILIES:
        passed = fams[fam] <= args.tol
        ok &= passed
        print(f"{fam:<11s} {fams[fam]:.3e} {'pass' if passed else 'FAIL'}")
    print(f"overall {'pass' if ok else 'FAIL'} (tol {args.tol:g})")
    return EXIT_OK if ok else EXIT_INFEASIBLE


def cmd_info(args):
    model, task, library = _problem_inputs(args)
    problem = _build(args, model, task, library, K=args.knots, T=args.time)
    L = problem.layout
    info = {
        "robot": model.name,
        "task": task.name,
        "layout": {"K": L.K, "n": L.n, "m": L.m, "l": L.l, "p": L.p, "n_vars": L.total},
        "formula_count": L.formula(L.K, L.n, L.m, L.l, L.p),
        "n_constraints": problem.n_constraints,
        "tallies": problem.tallies(),
        "sparsity": problem.sparsity(),
        "blocks": {b.name: b.n_rows for b in problem.blocks},
    }
    print(json.dumps(info, indent=2, sort_keys=True))
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="codesign", description="Co-optimize robot designs and trajectories.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def inputs(p):
        p.add_argument("robot", help="robot description (JSON)")
        p.add_argument("task", help="task description (JSON)")
        p.add_argument("motors", nargs="?", default=None, help="motor library (JSON)")

    p = sub.add_parser("optimize", help="run the two-phase co-optimization")
    inputs(p)
    p.add_argument("--knots", type=int, help="number of knot points (overrides the task)")
    p.add_argument("--time", type=_positive(float), help="maximum duration in s (overrides the task)")
    p.add_argument("--alpha", type=_non_negative, help="actuation weight (overrides the task)")
    p.add_argument("--beta", type=_non_negative, help="regularization weight (overrides the task)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=10, help="extra phase-one attempts from new random draws")
    p.add_argument("--max-iterations", type=_positive(int), default=2000, help="iteration budget per solve")
    p.add_argument("--hessian", choices=("exact", "gauss-newton"), default="exact")
    p.add_argument("--freeze-parameters", action="store_true", help="hold design parameters at their initial values")
    p.add_argument("--out", default="result.json", help="result document path")
    p.add_argument("--csv", help="also write the per-knot trajectory here")
    p.add_argument("-v", "--verbose", action="store_true", help="log solver iterations to standard error")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("validate", help="audit a result against its problem")
    p.add_argument("result", help="result document (JSON)")
    inputs(p)
    p.add_argument("--tol", type=_positive(float), default=1e-6)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("info", help="print layout counts, constraint tallies and sparsity")
    inputs(p)
    p.add_argument("--knots", type=int)
    p.add_argument("--time", type=_positive(float))
    p.set_defaults(func=cmd_info)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "restarts", 0) < 0:
        print("codesign: error: --restarts must be non-negative", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except InfeasibleTorque as exc:
        print(f"codesign: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (CodesignError, ValueError) as exc:
        print(f"codesign: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"codesign: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
