"""Motor libraries and the conservative torque-to-size bound curves."""

import math
from dataclasses import dataclass

import numpy as np

from ..diff import Expr, sabs
from ..errors import InfeasibleTorque, MonotonicityError, SchemaError

#: slope factor applied to the largest motor's values at its rated torque
LAST_SEGMENT_FACTOR = 1.05
BOUND_FIELDS = {"mass": "mass", "x": "x", "y": "y", "z": "z"}


@dataclass(frozen=True)
class MotorSpec:
    name: str
    x: float
    y: float
    z: float
    mass: float
    torque: float
    voltage: float = 12.0
    speed: float = 2.0 * math.pi

    def __post_init__(self):
        for f in ("x", "y", "z", "mass", "torque", "voltage", "speed"):
            v = getattr(self, f)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise SchemaError(f"motor {self.name}: {f} must be a positive number")
            object.__setattr__(self, f, float(v))


class MotorLibrary:
    """Motors sorted by rated torque, with sizes non-decreasing in torque."""

    def __init__(self, motors):
        motors = sorted(motors, key=lambda mt: mt.torque)
        if not motors:
            raise SchemaError("motor library is empty")
        names = [mt.name for mt in motors]
        if len(set(names)) != len(names):
            raise SchemaError("motor names must be unique")
        for a, b in zip(motors, motors[1:]):
            if a.torque == b.torque:
                raise MonotonicityError(f"motors {a.name} and {b.name} share a torque rating")
            for f in BOUND_FIELDS.values():
                if getattr(b, f) < getattr(a, f):
                    raise MonotonicityError(
                        f"{f} decreases from {a.name} ({getattr(a, f)}) to {b.name} ({getattr(b, f)})"
                    )
        self.motors = tuple(motors)

    def __len__(self):
        return len(self.motors)

    def __iter__(self):
        return iter(self.motors)

    @property
    def names(self):
        return [mt.name for mt in self.motors]

    @property
    def torques(self):
        return [mt.torque for mt in self.motors]

    @property
    def max_torque(self):
        return self.motors[-1].torque

    def knots(self, bound):
        """Breakpoints ``(tau, value)`` of the bound curve for ``bound``."""
        f = BOUND_FIELDS[bound]
        vals = [getattr(mt, f) for mt in self.motors]
        taus = [0.0] + self.torques
        ys = vals + [LAST_SEGMENT_FACTOR * vals[-1]]
        return np.asarray(taus), np.asarray(ys)

    def curve(self, bound, xi):
        """Bound value at torque ``xi``; a float for numbers, an Expr for Exprs.

        The symbolic form is ``c0 + s1*xi + sum_i (s_{i+1} - s_i) * relu(xi - tau_i)``
        with ``relu(t) = (t + sabs(t)) / 2``, which never falls below the exact
        piecewise-linear curve.
        """
        taus, ys = self.knots(bound)
        if isinstance(xi, Expr):
            slopes = np.diff(ys) / np.diff(taus)
            out = float(ys[0]) + float(slopes[0]) * xi
            for i in range(1, len(slopes)):
                ds = float(slopes[i] - slopes[i - 1])
                if ds != 0.0:
                    t = xi - float(taus[i])
                    out = out + ds * 0.5 * (t + sabs(t))
            return out
        xi = float(xi)
        if xi > self.max_torque:
            raise InfeasibleTorque(f"torque {xi} exceeds the largest motor rating {self.max_torque}")
        if xi < 0:
            raise ValueError("torque must be non-negative")
        return float(np.interp(xi, taus, ys))

    def select(self, xi):
        """Smallest motor whose rated torque is at least ``xi``."""
        for mt in self.motors:
            if xi <= mt.torque:
                return mt
        raise InfeasibleTorque(f"torque {xi} exceeds the largest motor rating {self.max_torque}")


def motor_bound_curves(xi, library):
    """Conservative ``(mass, x, y, z)`` lower bounds for a motor delivering ``xi``."""
    return tuple(library.curve(b, xi) for b in ("mass", "x", "y", "z"))


def select_motor(xi, library):
    return library.select(xi)


def dynamixel_library():
    """The bundled three-motor Dynamixel library."""
    from ..serialization import load_motor_library  # local import: avoids a cycle

    return load_motor_library(_data_path("dynamixel.json"))


def _data_path(name):
    from importlib import resources

    return resources.files("codesign") / "data" / name
