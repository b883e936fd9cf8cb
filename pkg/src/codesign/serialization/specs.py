"""JSON schemas for robots, tasks and motor libraries."""

import json
import math
import numbers
from pathlib import Path

from ..dynamics import (
    Actuator,
    ContactPoint,
    Coupling,
    Joint,
    Link,
    Parameter,
    ParameterConstraint,
    RobotModel,
    Terrain,
)
from ..errors import MissingBounds, SchemaError, UnitError
from ..transcription.motors import MotorLibrary, MotorSpec
from ..transcription.task import Keyframe, ObjectiveSpec, TaskConstraint, TaskSpec

UNITS = ("m", "kg", "N·m", "s", "rad", "rad/s", "V", "N")
_ALIASES = {"N*m": "N·m", "N.m": "N·m", "Nm": "N·m"}
#: quantity kind -> the unit every number of that kind is expressed in
CANONICAL = {
    "length": "m",
    "mass": "kg",
    "torque": "N·m",
    "force": "N",
    "time": "s",
    "angle": "rad",
    "angular_velocity": "rad/s",
    "voltage": "V",
}
MOTOR_FIELDS = {
    "x": "m",
    "y": "m",
    "z": "m",
    "mass": "kg",
    "torque": "N·m",
    "voltage": "V",
    "speed": "rad/s",
}


def normalize_unit(unit, path=""):
    if not isinstance(unit, str):
        raise UnitError(f"unit must be a string, got {unit!r}", path)
    unit = _ALIASES.get(unit.strip(), unit.strip())
    if unit not in UNITS:
        raise UnitError(f"unknown unit {unit!r}; expected one of {list(UNITS)}", path)
    return unit


def read_json(source):
    """Parse a path, a JSON string or an already-decoded object."""
    if isinstance(source, (dict, list)):
        return source
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith(("{", "["))):
        path = Path(source)
        try:
            text = path.read_text()
        except OSError as exc:
            raise SchemaError(f"cannot read file: {exc.strerror}", str(path)) from None
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc.msg} (line {exc.lineno})", str(path)) from None
    try:
        return json.loads(source)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc.msg} (line {exc.lineno})") from None


def _req(d, key, path):
    if not isinstance(d, dict):
        raise SchemaError("expected an object", path)
    if key not in d:
        raise SchemaError(f"missing field {key!r}", path)
    return d[key]


def _num(v, path, positive=False):
    if isinstance(v, bool) or not isinstance(v, numbers.Real) or not math.isfinite(v):
        raise SchemaError(f"expected a finite number, got {v!r}", path)
    if positive and v <= 0:
        raise SchemaError("expected a positive number", path)
    return float(v)


def _list(v, path):
    if not isinstance(v, list):
        raise SchemaError("expected an array", path)
    return v


def _wrap(fn, path):
    """Run a constructor, prefixing schema errors with ``path``."""
    try:
        return fn()
    except SchemaError as exc:
        if exc.path:
            raise
        raise type(exc)(str(exc), path) from None
    except (TypeError, ValueError) as exc:
        raise SchemaError(str(exc), path) from None


def _check_units(block, path):
    if block is None:
        return
    if not isinstance(block, dict):
        raise SchemaError("expected an object", path)
    for kind, unit in block.items():
        if kind not in CANONICAL:
            raise UnitError(f"unknown quantity kind {kind!r}", f"{path}.{kind}")
        unit = normalize_unit(unit, f"{path}.{kind}")
        if unit != CANONICAL[kind]:
            raise UnitError(f"{kind} must be given in {CANONICAL[kind]}, got {unit}", f"{path}.{kind}")


# -- robot ---------------------------------------------------------------------------
def parse_robot_spec(document):
    """Build a validated :class:`RobotModel` from a JSON robot description."""
    doc = read_json(document)
    if not isinstance(doc, dict):
        raise SchemaError("robot spec must be an object", "$")
    _check_units(doc.get("units"), "units")
    params = []
    for i, p in enumerate(_list(doc.get("parameters", []), "parameters")):
        path = f"parameters[{i}]"
        name = _req(p, "name", path)
        missing = [k for k in ("lower", "upper") if k not in p]
        if missing:
            raise MissingBounds(f"parameter {name!r} lacks {' and '.join(missing)} bound", path)
        lo, hi = _num(p["lower"], f"{path}.lower"), _num(p["upper"], f"{path}.upper")
        init = _num(p.get("initial", 0.5 * (lo + hi)), f"{path}.initial")
        unit = normalize_unit(p["unit"], f"{path}.unit") if "unit" in p else ""
        if lo > hi:
            raise SchemaError("lower bound exceeds upper bound", path)
        params.append(Parameter(name, lo, hi, init, unit))

    links = []
    for i, ld in enumerate(_list(_req(doc, "links", "$"), "links")):
        path = f"links[{i}]"
        name = _req(ld, "name", path)
        links.append(
            _wrap(
                lambda ld=ld, name=name: Link(
                    name=name,
                    mass=ld.get("mass", 0.0),
                    com=ld.get("com"),
                    box=ld.get("box"),
                    box_center=ld.get("box_center"),
                    inertia=ld.get("inertia"),
                ),
                path,
            )
        )
    joints = []
    for i, jd in enumerate(_list(doc.get("joints", []), "joints")):
        path = f"joints[{i}]"
        kw = {k: jd[k] for k in ("parent", "origin", "rpy", "axis") if k in jd}
        joints.append(
            _wrap(
                lambda jd=jd, kw=kw, path=path: Joint(
                    name=_req(jd, "name", path), type=_req(jd, "type", path), child=_req(jd, "child", path), **kw
                ),
                path,
            )
        )
    actuators = []
    for i, ad in enumerate(_list(doc.get("actuators", []), "actuators")):
        path = f"actuators[{i}]"
        kw = {k: ad[k] for k in ("joint", "link", "position", "direction", "torque_coeff") if k in ad}
        actuators.append(
            _wrap(
                lambda ad=ad, kw=kw, path=path: Actuator(
                    name=_req(ad, "name", path),
                    kind=ad.get("kind", "joint"),
                    limit=_num(_req(ad, "limit", path), f"{path}.limit", positive=True),
                    **kw,
                ),
                path,
            )
        )
    contacts = []
    for i, cd in enumerate(_list(doc.get("contacts", []), "contacts")):
        path = f"contacts[{i}]"
        contacts.append(
            _wrap(
                lambda cd=cd, path=path: ContactPoint(
                    name=_req(cd, "name", path), link=_req(cd, "link", path), position=cd.get("position")
                ),
                path,
            )
        )
    couplings = []
    for i, cd in enumerate(_list(doc.get("couplings", []), "couplings")):
        path = f"couplings[{i}]"
        couplings.append(
            _wrap(
                lambda cd=cd, path=path: Coupling(
                    parameter=_req(cd, "parameter", path),
                    multiplier=_num(_req(cd, "multiplier", path), f"{path}.multiplier"),
                    offset=_num(cd.get("offset", 0.0), f"{path}.offset"),
                    bound=cd.get("bound", "mass"),
                ),
                path,
            )
        )
    pcs = []
    for i, pd in enumerate(_list(doc.get("parameter_constraints", []), "parameter_constraints")):
        path = f"parameter_constraints[{i}]"
        pcs.append(
            _wrap(
                lambda pd=pd, path=path: ParameterConstraint(
                    expr=_req(pd, "expr", path),
                    lower=_num(pd.get("lower", -math.inf), f"{path}.lower") if "lower" in pd else -math.inf,
                    upper=_num(pd.get("upper", math.inf), f"{path}.upper") if "upper" in pd else math.inf,
                ),
                path,
            )
        )
    return _wrap(
        lambda: RobotModel(
            name=doc.get("name", "robot"),
            links=links,
            joints=joints,
            actuators=actuators,
            contacts=contacts,
            parameters=params,
            couplings=couplings,
            parameter_constraints=pcs,
            structural_mass=_num(doc.get("structural_mass", 0.0), "structural_mass"),
            ground_clearance=doc.get("ground_clearance"),
        ),
        "$",
    )


def robot_to_json(model):
    """Inverse of :func:`parse_robot_spec` on semantic content."""

    def q3(vals):
        return [v.to_json() for v in vals]

    links = []
    for link in model.links:
        d = {"name": link.name, "mass": link.mass.to_json(), "com": q3(link.com)}
        if link.box is not None:
            d["box"] = q3(link.box)
        if link.box_center is not None:
            d["box_center"] = q3(link.box_center)
        if link.inertia is not None:
            d["inertia"] = [q3(r) for r in link.inertia]
        links.append(d)
    joints = []
    for j in model.joints:
        d = {"name": j.name, "type": j.type, "child": j.child, "origin": q3(j.origin), "rpy": list(j.rpy), "axis": list(j.axis)}
        if j.parent is not None:
            d["parent"] = j.parent
        joints.append(d)
    actuators = []
    for a in model.actuators:
        d = {"name": a.name, "kind": a.kind, "limit": a.limit}
        if a.kind == "joint":
            d["joint"] = a.joint
        else:
            d.update(link=a.link, position=q3(a.position), direction=list(a.direction), torque_coeff=a.torque_coeff)
        actuators.append(d)
    return {
        "name": model.name,
        "units": dict(CANONICAL),
        "parameters": [
            {"name": p.name, "lower": p.lower, "upper": p.upper, "initial": p.initial, **({"unit": p.unit} if p.unit else {})}
            for p in model.parameters
        ],
        "links": links,
        "joints": joints,
        "actuators": actuators,
        "contacts": [{"name": c.name, "link": c.link, "position": q3(c.position)} for c in model.contacts],
        "couplings": [
            {"parameter": c.parameter, "multiplier": c.multiplier, "offset": c.offset, "bound": c.bound}
            for c in model.couplings
        ],
        "parameter_constraints": [
            {"expr": pc.expr.to_json(), **({"lower": pc.lower} if math.isfinite(pc.lower) else {}),
             **({"upper": pc.upper} if math.isfinite(pc.upper) else {})}
            for pc in model.parameter_constraints
        ],
        "structural_mass": model.structural_mass,
        "ground_clearance": model.ground_clearance,
    }


# -- motors ------------------------------------------------------------------------------
def parse_motor_library(document):
    """Sorted, monotonicity-checked :class:`MotorLibrary` from JSON.

    Accepts ``{"motors": [...]}`` or a bare array. Each numeric field is either
    ``{"value": v, "unit": u}`` or a plain number in the field's canonical unit.
    """
    doc = read_json(document)
    motors = doc.get("motors") if isinstance(doc, dict) else doc
    motors = _list(motors, "motors")
    if not motors:
        raise SchemaError("library needs at least one motor", "motors")
    out = []
    for i, md in enumerate(motors):
        path = f"motors[{i}]"
        kw = {"name": _req(md, "name", path)}
        for f, unit in MOTOR_FIELDS.items():
            if f not in md:
                if f in ("voltage", "speed"):
                    continue
                raise SchemaError(f"missing field {f!r}", path)
            v = md[f]
            fpath = f"{path}.{f}"
            if isinstance(v, dict):
                got = normalize_unit(_req(v, "unit", fpath), f"{fpath}.unit")
                if got != unit:
                    raise UnitError(f"expected unit {unit}, got {got}", f"{fpath}.unit")
                v = _req(v, "value", fpath)
            kw[f] = _num(v, fpath, positive=True)
        out.append(_wrap(lambda kw=kw: MotorSpec(**kw), path))
    return _wrap(lambda: MotorLibrary(out), "motors")


def motor_library_to_json(library):
    return {
        "motors": [
            {"name": mt.name, **{f: {"value": getattr(mt, f), "unit": u} for f, u in MOTOR_FIELDS.items()}}
            for mt in library
        ]
    }


# -- tasks ---------------------------------------------------------------------------------
def _knots(v, path):
    """1-based knot references to the internal 0-based form."""
    if v in ("all",):
        return "all"
    if v == "first":
        return (0,)
    if v == "last":
        return (-1,)
    vals = v if isinstance(v, list) else [v]
    out = []
    for j, k in enumerate(vals):
        if k == "first":
            out.append(0)
        elif k == "last":
            out.append(-1)
        elif isinstance(k, int) and not isinstance(k, bool) and k >= 1:
            out.append(k - 1)
        else:
            raise SchemaError(f"knot references are 1-based integers, 'first', 'last' or 'all'; got {k!r}", f"{path}[{j}]")
    return tuple(out)


def parse_task_spec(document):
    doc = read_json(document)
    if not isinstance(doc, dict):
        raise SchemaError("task spec must be an object", "$")
    _check_units(doc.get("units"), "units")
    K = int(_num(doc.get("knots", 16), "knots"))
    frames = []
    for i, kd in enumerate(_list(_req(doc, "keyframes", "$"), "keyframes")):
        path = f"keyframes[{i}]"
        knot = _knots(_req(kd, "knot", path), f"{path}.knot")
        if knot == "all" or len(knot) != 1:
            raise SchemaError("a keyframe names a single knot", f"{path}.knot")
        k = knot[0] + K if knot[0] < 0 else knot[0]
        q = [_num(v, f"{path}.q[{j}]") for j, v in enumerate(_list(_req(kd, "q", path), f"{path}.q"))]
        frames.append(Keyframe(k, q))
    constraints = []
    for i, cd in enumerate(_list(doc.get("constraints", []), "constraints")):
        path = f"constraints[{i}]"
        kw = {k: cd[k] for k in ("dofs", "values", "lower", "upper", "link", "point", "target") if k in cd}
        if _req(cd, "kind", path) == "com_height":
            for k in ("lower", "upper"):
                if k in kw and not isinstance(kw[k], list):
                    kw[k] = [kw[k]]
        constraints.append(
            _wrap(lambda cd=cd, kw=kw, path=path: TaskConstraint(kind=cd["kind"], knots=_knots(_req(cd, "knots", path), f"{path}.knots"), **kw), path)
        )
    td = doc.get("terrain", {"kind": "flat"})
    terrain = _wrap(
        lambda: Terrain(
            kind=td.get("kind", "flat"),
            mu=_num(td.get("mu", 1.0), "terrain.mu"),
            heights=td.get("heights"),
            origin=tuple(td.get("origin", (0.0, 0.0))),
            cell=tuple(td.get("cell", (1.0, 1.0))),
        ),
        "terrain",
    )
    od = doc.get("objective", {})
    objective = _wrap(
        lambda: ObjectiveSpec(alpha=od.get("alpha", 1.0), beta=od.get("beta", 0.0), mode=od.get("mode", "actuation")),
        "objective",
    )
    return _wrap(
        lambda: TaskSpec(
            keyframes=frames,
            constraints=constraints,
            terrain=terrain,
            duration_max=_num(doc.get("duration_max", 4.0), "duration_max", positive=True),
            knots=K,
            objective=objective,
            name=doc.get("name", "task"),
        ),
        "$",
    )
