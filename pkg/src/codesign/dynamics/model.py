"""Parameterized kinematic-tree robot models."""

from dataclasses import dataclass, field

from ..errors import CycleError, SchemaError
from .params import Parameter, Quantity, quantities
from .spatial import EYE3, rpy_matrix

JOINT_DOFS = {
    "revolute": 1,
    "prismatic": 1,
    "floating": 6,
    "planar": 3,
}
_EX, _EY, _EZ = (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)
# floating base: translation then intrinsic roll-pitch-yaw, R = Rx(roll) Ry(pitch) Rz(yaw)
_EXPANSION = {
    "floating": (("P", _EX, "x"), ("P", _EY, "y"), ("P", _EZ, "z"),
                 ("R", _EX, "roll"), ("R", _EY, "pitch"), ("R", _EZ, "yaw")),
    "planar": (("P", _EX, "x"), ("P", _EZ, "z"), ("R", _EY, "pitch")),
}
BOUND_KINDS = ("mass", "x", "y", "z")


def _vec3(values, what):
    if values is None:
        return quantities((0.0, 0.0, 0.0))
    values = tuple(values)
    if len(values) != 3:
        raise SchemaError(f"{what} needs 3 entries, got {len(values)}")
    return quantities(values)


def _unit_axis(axis):
    axis = tuple(float(a) for a in axis)
    if len(axis) != 3:
        raise SchemaError("axis needs 3 entries")
    norm = sum(a * a for a in axis) ** 0.5
    if norm == 0.0:
        raise SchemaError("axis must be non-zero")
    return tuple(a / norm for a in axis)


@dataclass(frozen=True)
class Link:
    """A rigid link.

    ``box`` gives the (x, y, z) extents of the link's rectangular prism; with
    ``inertia=None`` the uniform-density box tensor about the COM is used,
    otherwise ``inertia`` is a fixed 3x3 COM tensor.
    """

    name: str
    mass: Quantity = Quantity(0.0)
    com: tuple = field(default_factory=lambda: quantities((0.0, 0.0, 0.0)))
    box: tuple = None
    box_center: tuple = None
    inertia: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "mass", Quantity(self.mass))
        object.__setattr__(self, "com", _vec3(self.com, f"link {self.name} com"))
        if self.box is not None:
            object.__setattr__(self, "box", _vec3(self.box, f"link {self.name} box"))
        if self.box_center is not None:
            object.__setattr__(self, "box_center", _vec3(self.box_center, f"link {self.name} box_center"))
        if self.inertia is not None:
            rows = tuple(self.inertia)
            if len(rows) != 3 or any(len(r) != 3 for r in rows):
                raise SchemaError(f"link {self.name}: inertia must be 3x3")
            object.__setattr__(self, "inertia", tuple(quantities(r) for r in rows))

    def quantities(self):
        out = [self.mass, *self.com]
        for group in (self.box, self.box_center):
            if group is not None:
                out.extend(group)
        if self.inertia is not None:
            for row in self.inertia:
                out.extend(row)
        return out


@dataclass(frozen=True)
class Joint:
    name: str
    type: str
    child: str
    parent: str = None
    origin: tuple = None
    rpy: tuple = (0.0, 0.0, 0.0)
    axis: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if self.type not in JOINT_DOFS:
            raise SchemaError(f"joint {self.name}: unknown type {self.type!r}")
        object.__setattr__(self, "origin", _vec3(self.origin, f"joint {self.name} origin"))
        object.__setattr__(self, "rpy", tuple(float(a) for a in self.rpy))
        object.__setattr__(self, "axis", _unit_axis(self.axis))


@dataclass(frozen=True)
class Actuator:
    """A joint-torque actuator on a 1-DOF joint, or a point thruster on a link.

    A thruster pushes with force ``u`` along its local ``direction`` at local
    ``position``; ``torque_coeff`` adds a reaction moment ``torque_coeff*u``
    about the same direction.
    """

    name: str
    kind: str
    limit: float
    joint: str = None
    link: str = None
    position: tuple = None
    direction: tuple = (0.0, 0.0, 1.0)
    torque_coeff: float = 0.0

    def __post_init__(self):
        if self.kind not in ("joint", "thruster"):
            raise SchemaError(f"actuator {self.name}: unknown kind {self.kind!r}")
        if not self.limit > 0:
            raise SchemaError(f"actuator {self.name}: limit must be positive")
        object.__setattr__(self, "limit", float(self.limit))
        object.__setattr__(self, "position", _vec3(self.position, f"actuator {self.name} position"))
        object.__setattr__(self, "direction", _unit_axis(self.direction))
        object.__setattr__(self, "torque_coeff", float(self.torque_coeff))


@dataclass(frozen=True)
class ContactPoint:
    name: str
    link: str
    position: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "position", _vec3(self.position, f"contact {self.name} position"))


@dataclass(frozen=True)
class Coupling:
    """``parameter >= multiplier * motor_bound(xi) + offset`` for one bound curve."""

    parameter: str
    multiplier: float
    offset: float = 0.0
    bound: str = "mass"

    def __post_init__(self):
        if self.bound not in BOUND_KINDS:
            raise SchemaError(f"coupling on {self.parameter}: bound must be one of {BOUND_KINDS}")


@dataclass(frozen=True)
class ParameterConstraint:
    """Auxiliary relation ``lower <= expr(rho) <= upper`` between parameters."""

    expr: Quantity
    lower: float = float("-inf")
    upper: float = float("inf")

    def __post_init__(self):
        object.__setattr__(self, "expr", Quantity(self.expr))


@dataclass(frozen=True)
class Dof:
    """One single-axis joint of the expanded tree (multi-DOF joints become chains)."""

    index: int
    parent: int
    kind: str
    axis: tuple
    origin: tuple
    rotation: tuple
    joint: int
    link: int
    name: str


class RobotModel:
    """A parameterized kinematic tree.

    Links are reordered root first. ``dofs`` is the expanded list of single-axis
    joints, parents before children, and defines the ordering of ``q``.
    """

    def __init__(
        self,
        name,
        links,
        joints,
        actuators=(),
        contacts=(),
        parameters=(),
        couplings=(),
        parameter_constraints=(),
        structural_mass=0.0,
        ground_clearance=None,
    ):
        self.name = name
        self.parameters = tuple(parameters)
        self.couplings = tuple(couplings)
        self.parameter_constraints = tuple(parameter_constraints)
        self.structural_mass = float(structural_mass)
        self.actuators = tuple(actuators)
        self.contacts = tuple(contacts)

        pnames = [p.name for p in self.parameters]
        dupes = {n for n in pnames if pnames.count(n) > 1}
        if dupes:
            raise SchemaError(f"parameters declared more than once: {sorted(dupes)}")
        for p in self.parameters:
            if not p.lower <= p.initial <= p.upper:
                raise SchemaError(f"parameter {p.name}: initial value outside [lower, upper]")
        self.param_index = {n: i for i, n in enumerate(pnames)}

        links = tuple(links)
        joints = tuple(joints)
        by_name = {}
        for link in links:
            if link.name in by_name:
                raise SchemaError(f"duplicate link {link.name!r}")
            by_name[link.name] = link
        parent_joint = {}
        for j in joints:
            if j.child not in by_name:
                raise SchemaError(f"joint {j.name}: unknown child link {j.child!r}")
            if j.parent is not None and j.parent not in by_name:
                raise SchemaError(f"joint {j.name}: unknown parent link {j.parent!r}")
            if j.child in parent_joint:
                raise SchemaError(f"link {j.child!r} has more than one parent joint")
            parent_joint[j.child] = j
        roots = [
            link.name
            for link in links
            if link.name not in parent_joint or parent_joint[link.name].parent is None
        ]
        if len(roots) != 1:
            # either a disconnected forest or a loop with no entry point
            if not roots:
                raise CycleError("kinematic graph has no root (cycle)")
            raise SchemaError(f"expected exactly one root link, found {roots}")

        # root-first ordering; links unreachable from the root sit on a cycle
        children = {}
        for j in joints:
            if j.parent is not None:
                children.setdefault(j.parent, []).append(j)
        order = [roots[0]]
        joint_order = [parent_joint[roots[0]]] if roots[0] in parent_joint else []
        i = 0
        while i < len(order):
            for j in children.get(order[i], ()):
                order.append(j.child)
                joint_order.append(j)
            i += 1
        if len(order) != len(links):
            missing = sorted(set(by_name) - set(order))
            raise CycleError(f"links not reachable from root (cycle): {missing}")
        self.links = tuple(by_name[n] for n in order)
        self.joints = tuple(joint_order)
        self.link_index = {link.name: i for i, link in enumerate(self.links)}
        self.joint_index = {j.name: i for i, j in enumerate(self.joints)}
        self.root = self.links[0]

        # expand joints into single-axis dofs
        dofs = []
        link_dof = {self.root.name: -1}
        joint_dofs = []
        for ji, j in enumerate(self.joints):
            parent = -1 if j.parent is None else link_dof[j.parent]
            steps = _EXPANSION.get(j.type, (("R" if j.type == "revolute" else "P", j.axis, None),))
            first = []
            for k, (kind, axis, suffix) in enumerate(steps):
                idx = len(dofs)
                dofs.append(
                    Dof(
                        index=idx,
                        parent=parent,
                        kind=kind,
                        axis=axis,
                        origin=j.origin if k == 0 else quantities((0, 0, 0)),
                        rotation=rpy_matrix(j.rpy) if k == 0 else EYE3,
                        joint=ji,
                        link=self.link_index[j.child] if k == len(steps) - 1 else -1,
                        name=j.name if suffix is None else f"{j.name}.{suffix}",
                    )
                )
                first.append(idx)
                parent = idx
            link_dof[j.child] = parent
            joint_dofs.append(tuple(first))
        self.dofs = tuple(dofs)
        self.joint_dofs = tuple(joint_dofs)
        self.link_dof = tuple(link_dof[link.name] for link in self.links)

        for a in self.actuators:
            if a.kind == "joint":
                if a.joint not in self.joint_index:
                    raise SchemaError(f"actuator {a.name}: unknown joint {a.joint!r}")
                if len(self.joint_dofs[self.joint_index[a.joint]]) != 1:
                    raise SchemaError(f"actuator {a.name}: joint torques need a 1-DOF joint")
            elif a.link not in self.link_index:
                raise SchemaError(f"actuator {a.name}: unknown link {a.link!r}")
        for c in self.contacts:
            if c.link not in self.link_index:
                raise SchemaError(f"contact {c.name}: unknown link {c.link!r}")
        for cpl in self.couplings:
            if cpl.parameter not in self.param_index:
                raise SchemaError(f"coupling references unknown parameter {cpl.parameter!r}")

        used = set()
        for link in self.links:
            for q in link.quantities():
                used |= q.names
        for j in self.joints:
            for q in j.origin:
                used |= q.names
        for a in self.actuators:
            for q in a.position:
                used |= q.names
        for c in self.contacts:
            for q in c.position:
                used |= q.names
        for pc in self.parameter_constraints:
            used |= pc.expr.names
        unknown = used - set(pnames)
        if unknown:
            raise SchemaError(f"undeclared parameters referenced: {sorted(unknown)}")

        self.actuated_joints = frozenset(a.joint for a in self.actuators if a.kind == "joint")
        self.ground_clearance = bool(self.contacts) if ground_clearance is None else bool(ground_clearance)

    # -- sizes ---------------------------------------------------------------
    @property
    def n(self):
        return len(self.dofs)

    @property
    def m(self):
        return len(self.actuators)

    @property
    def l(self):  # noqa: E743
        return len(self.contacts)

    @property
    def p(self):
        return len(self.parameters)

    @property
    def rho0(self):
        return [p.initial for p in self.parameters]

    @property
    def dof_names(self):
        return [d.name for d in self.dofs]

    def param_env(self, rho):
        rho = list(rho)
        if len(rho) != self.p:
            raise ValueError(f"expected {self.p} parameters, got {len(rho)}")
        return {p.name: v for p, v in zip(self.parameters, rho)}

    def actuator_limits(self):
        return [a.limit for a in self.actuators]

    def total_mass(self, rho):
        env = self.param_env(rho)
        total = 0.0
        for link in self.links:
            total = total + link.mass.resolve(env)
        return total

    def __repr__(self):
        return f"RobotModel({self.name!r}, n={self.n}, m={self.m}, l={self.l}, p={self.p})"
