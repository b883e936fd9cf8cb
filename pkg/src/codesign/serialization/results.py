"""Result export: a self-describing JSON document plus a per-knot CSV."""

import csv
import io
import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ..errors import InfeasibleTorque, SchemaError
from ..transcription import LAMBDA_NAMES, objective_breakdown
from ..transcription.motors import motor_bound_curves

#: keys whose values legitimately change between otherwise identical runs
NONDETERMINISTIC_KEYS = ("wall_time",)


def _floats(a):
    return np.asarray(a, dtype=float).tolist()


def _solver_options(opts):
    if opts is None:
        return {}
    d = asdict(opts)
    d.pop("log", None)
    d["slack_schedule"] = list(d["slack_schedule"])
    return d


def result_document(problem, result, opts=None):
    """Everything needed to reproduce and audit a solve, as plain JSON types."""
    L = problem.layout
    meta = problem.meta
    model = meta["model"]
    task = meta["task"]
    library = meta.get("library")
    x = np.asarray(result.x, dtype=float)
    parts = L.unpack(x)
    params = [
        {"name": p.name, "value": float(v), "unit": p.unit, "lower": p.lower, "upper": p.upper, "initial": p.initial}
        for p, v in zip(model.parameters, parts["rho"])
    ]
    motor = {"xi": parts["xi"], "selected": None, "bounds": None}
    if library is not None:
        try:
            motor["selected"] = library.select(parts["xi"]).name
            motor["bounds"] = dict(zip(("mass", "x", "y", "z"), motor_bound_curves(parts["xi"], library)))
        except InfeasibleTorque:
            pass
    obj = meta["objective"]
    doc = {
        "status": result.status,
        "robot": model.name,
        "task": task.name,
        "objective": {**objective_breakdown(problem, x), "alpha": obj.alpha, "beta": obj.beta, "mode": obj.mode},
        "parameters": params,
        "motor": motor,
        "trajectory": {
            "t": _floats(L.times(x)),
            "q": _floats(parts["q"]),
            "qd": _floats(parts["qd"]),
            "u": _floats(parts["u"]),
            "lambda": _floats(parts["lam"]),
            "slack": _floats(parts["slack"]),
            "dt": _floats(parts["dt"]),
        },
        "residuals": {
            "families": {k: float(v) for k, v in result.violations.items()},
            "max_violation": float(result.max_violation),
            "kkt": {k: float(v) for k, v in (result.kkt or {}).items()},
        },
        "solver": {
            "iterations": int(result.iterations),
            "wall_time": float(result.wall_time),
            "options": _solver_options(opts),
            "info": _jsonable(result.info),
        },
        "layout": {
            "K": L.K,
            "T": float(meta["T"]),
            "n": L.n,
            "m": L.m,
            "l": L.l,
            "p": L.p,
            "n_vars": L.total,
            "n_constraints": problem.n_constraints,
            "indices": {k: [int(i) for i in v] for k, v in L.ranges().items()},
            "tallies": problem.tallies(),
        },
        "names": {
            "dofs": list(model.dof_names),
            "actuators": [a.name for a in model.actuators],
            "contacts": [c.name for c in model.contacts],
            "parameters": [p.name for p in model.parameters],
            "lambda": list(LAMBDA_NAMES),
        },
        "decision_vector": _floats(x),
    }
    return doc


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def dumps_result(doc):
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=True) + "\n"


def export_result(problem, result, path, opts=None, csv_path=None):
    """Write the JSON result (and optionally the trajectory CSV); returns the document."""
    doc = result_document(problem, result, opts)
    Path(path).write_text(dumps_result(doc))
    if csv_path is not None:
        Path(csv_path).write_text(trajectory_csv(problem, result.x))
    return doc


def trajectory_csv(problem, x):
    """One row per knot: ``t, q0.., qd0.., u0.., lam0..`` with round-trip precision."""
    L = problem.layout
    parts = L.unpack(x)
    t = L.times(x)
    header = (
        ["t"]
        + [f"q{i}" for i in range(L.n)]
        + [f"qd{i}" for i in range(L.n)]
        + [f"u{i}" for i in range(L.m)]
        + [f"lam{i}" for i in range(6 * L.l)]
    )
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for k in range(L.K):
        row = np.concatenate([[t[k]], parts["q"][k], parts["qd"][k], parts["u"][k], parts["lam"][k].reshape(-1)])
        w.writerow(["%.17g" % v for v in row])
    return buf.getvalue()


def load_result(path):
    """Read an exported result; ``decision_vector`` comes back as an array."""
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise SchemaError(f"cannot read file: {exc.strerror}", str(path)) from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc.msg} (line {exc.lineno})", str(path)) from None
    if not isinstance(doc, dict) or "decision_vector" not in doc:
        raise SchemaError("not a result document", str(path))
    doc["decision_vector"] = np.asarray(doc["decision_vector"], dtype=float)
    return doc


def strip_nondeterministic(doc):
    """Copy of a result document without timing fields, for reproducibility checks."""
    if isinstance(doc, dict):
        return {k: strip_nondeterministic(v) for k, v in doc.items() if k not in NONDETERMINISTIC_KEYS}
    if isinstance(doc, list):
        return [strip_nondeterministic(v) for v in doc]
    return doc
