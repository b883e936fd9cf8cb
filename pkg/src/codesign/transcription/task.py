"""Task descriptions: keyframes, kinematic task constraints and objectives."""

import math
from dataclasses import dataclass, field

from ..dynamics import Terrain
from ..dynamics.params import quantities
from ..errors import SchemaError

TASK_KINDS = ("config", "point", "velocity", "com_height")
OBJECTIVE_MODES = ("actuation", "time")


def _opt_tuple(values, what):
    if values is None:
        return None
    out = tuple(None if v is None else float(v) for v in values)
    if any(v is not None and not math.isfinite(v) for v in out):
        raise SchemaError(f"{what}: targets must be finite")
    return out


@dataclass(frozen=True)
class TaskConstraint:
    """A kinematic requirement at one or more knots.

    ``knots`` holds 0-based knot indices (negative values count from the end)
    or the string ``"all"``.

    * ``config``: ``q[dofs] == values`` or ``lower <= q[dofs] <= upper``
    * ``velocity``: ``qd[dofs] == values`` (or a window)
    * ``point``: world position of ``point`` on ``link`` equals ``target``
      (``None`` entries are free) or lies in the box ``[lower, upper]``;
      ``point`` entries may be parameter formulas
    * ``com_height``: ``lower <= z_com <= upper``

    ``dofs`` entries may be indices or dof names; ``None`` selects every dof.
    """

    kind: str
    knots: object
    dofs: tuple = None
    values: tuple = None
    lower: tuple = None
    upper: tuple = None
    link: str = None
    point: tuple = (0.0, 0.0, 0.0)
    target: tuple = None

    def __post_init__(self):
        if self.kind not in TASK_KINDS:
            raise SchemaError(f"unknown task constraint kind {self.kind!r}")
        if self.knots != "all":
            knots = tuple(int(k) for k in (self.knots if hasattr(self.knots, "__iter__") else [self.knots]))
            if not knots:
                raise SchemaError("task constraint needs at least one knot")
            object.__setattr__(self, "knots", knots)
        if self.dofs is not None:
            object.__setattr__(self, "dofs", tuple(self.dofs))
        for name in ("values", "lower", "upper", "target"):
            object.__setattr__(self, name, _opt_tuple(getattr(self, name), f"{self.kind} {name}"))
        if len(tuple(self.point)) != 3:
            raise SchemaError("point needs 3 entries")
        object.__setattr__(self, "point", quantities(tuple(self.point)))
        if self.kind == "point":
            if self.link is None:
                raise SchemaError("point constraint needs a link")
            if self.target is None and self.lower is None and self.upper is None:
                raise SchemaError("point constraint needs a target or a box")
        elif self.kind == "com_height":
            if self.lower is None and self.upper is None:
                raise SchemaError("com_height needs lower and/or upper")
        elif self.values is None and self.lower is None and self.upper is None:
            raise SchemaError(f"{self.kind} constraint needs values or a window")

    def resolve_knots(self, K):
        if self.knots == "all":
            return list(range(K))
        out = []
        for k in self.knots:
            kk = k + K if k < 0 else k
            if not 0 <= kk < K:
                raise SchemaError(f"knot {k} outside [0, {K})")
            out.append(kk)
        return sorted(set(out))


@dataclass(frozen=True)
class ObjectiveSpec:
    """``alpha * xi + beta * 0.5 * ||rho - rho0||^2`` or, in time mode, ``sum(dt)``."""

    alpha: float = 1.0
    beta: float = 0.0
    mode: str = "actuation"

    def __post_init__(self):
        if self.mode not in OBJECTIVE_MODES:
            raise SchemaError(f"objective mode must be one of {OBJECTIVE_MODES}")
        for name in ("alpha", "beta"):
            v = float(getattr(self, name))
            if not (math.isfinite(v) and v >= 0):
                raise SchemaError(f"objective {name} must be finite and non-negative")
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class Keyframe:
    knot: int
    q: tuple

    def __post_init__(self):
        object.__setattr__(self, "q", tuple(float(v) for v in self.q))


@dataclass(frozen=True)
class TaskSpec:
    keyframes: tuple
    constraints: tuple = ()
    terrain: Terrain = field(default_factory=Terrain)
    duration_max: float = 4.0
    knots: int = 16
    objective: ObjectiveSpec = field(default_factory=ObjectiveSpec)
    name: str = "task"

    def __post_init__(self):
        object.__setattr__(self, "keyframes", tuple(self.keyframes))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if not (self.duration_max > 0 and math.isfinite(self.duration_max)):
            raise SchemaError("duration_max must be positive")
        if int(self.knots) < 2:
            raise SchemaError("knots must be at least 2")
