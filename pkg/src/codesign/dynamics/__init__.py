"""Parameterized rigid-body kinematics and dynamics."""

from .contact import (
    ContactState,
    Terrain,
    contact_force,
    contact_kinematics,
    contact_points_world,
    forward_dynamics,
    generalized_forces,
)
from .model import (
    Actuator,
    ContactPoint,
    Coupling,
    Joint,
    Link,
    ParameterConstraint,
    RobotModel,
)
from .params import Parameter, Quantity
from .rbd import (
    GRAVITY,
    bias_forces,
    box_inertia,
    forward_kinematics,
    inverse_dynamics,
    ltdl,
    ltdl_solve,
    mass_matrix,
    point_jacobian,
)

__all__ = [
    "Actuator",
    "ContactPoint",
    "ContactState",
    "Coupling",
    "GRAVITY",
    "Joint",
    "Link",
    "Parameter",
    "ParameterConstraint",
    "Quantity",
    "RobotModel",
    "Terrain",
    "bias_forces",
    "box_inertia",
    "contact_force",
    "contact_kinematics",
    "contact_points_world",
    "forward_dynamics",
    "forward_kinematics",
    "generalized_forces",
    "inverse_dynamics",
    "ltdl",
    "ltdl_solve",
    "mass_matrix",
    "point_jacobian",
]
