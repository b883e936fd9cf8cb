"""Terrain, contact kinematics and forward dynamics with external forces."""

import math
from dataclasses import dataclass, field

import numpy as np

from ..diff import Expr, constant_value
from ..errors import SchemaError, SingularMassMatrix
from . import spatial as sp
from .rbd import (
    GRAVITY,
    _crba,
    _fk,
    _rnea,
    dof_transforms,
    ltdl,
    ltdl_solve,
    point_jacobian,
)

NORMAL = (0.0, 0.0, 1.0)


@dataclass(frozen=True)
class Terrain:
    """Flat ground at height 0 or a piecewise-constant height grid.

    A grid has ``heights[i][j]`` over the cell
    ``[x0 + i*dx, x0 + (i+1)*dx) x [y0 + j*dy, y0 + (j+1)*dy)``; the outermost
    cells extend to infinity so the grid tiles the whole plane. A point on a
    cell boundary belongs to the lower-index cell.
    """

    kind: str = "flat"
    mu: float = 1.0
    heights: tuple = None
    origin: tuple = (0.0, 0.0)
    cell: tuple = (1.0, 1.0)
    ex: tuple = (1.0, 0.0, 0.0)
    ey: tuple = (0.0, 1.0, 0.0)

    def __post_init__(self):
        if self.kind not in ("flat", "grid"):
            raise SchemaError(f"unknown terrain kind {self.kind!r}")
        if not (math.isfinite(self.mu) and self.mu >= 0.0):
            raise SchemaError("friction coefficient must be finite and non-negative")
        if self.kind == "grid":
            h = np.asarray(self.heights, dtype=float)
            if h.ndim != 2 or h.size == 0 or not np.isfinite(h).all():
                raise SchemaError("grid terrain needs a non-empty 2-D array of finite heights")
            if not (self.cell[0] > 0 and self.cell[1] > 0):
                raise SchemaError("grid cell sizes must be positive")
            object.__setattr__(self, "heights", tuple(tuple(r) for r in h.tolist()))

    @property
    def n_cells(self):
        return 1 if self.kind == "flat" else len(self.heights) * len(self.heights[0])

    def cell_index(self, x, y):
        if self.kind == "flat":
            return (0, 0)
        return (
            _axis_cell(x, self.origin[0], self.cell[0], len(self.heights)),
            _axis_cell(y, self.origin[1], self.cell[1], len(self.heights[0])),
        )

    def height(self, x, y):
        if self.kind == "flat":
            return 0.0
        i, j = self.cell_index(x, y)
        return self.heights[i][j]


def _axis_cell(x, x0, dx, count):
    i = math.ceil((float(x) - x0) / dx) - 1
    return min(max(i, 0), count - 1)


@dataclass
class ContactState:
    """Signed distance, tangential velocity and translational Jacobian of one contact."""

    phi: object
    psi: tuple
    jacobian: list
    position: tuple = field(default=None)


def _numeric_xy(p):
    x, y = constant_value(p[0]), constant_value(p[1])
    return x, y


def contact_points_world(model, kin, env):
    out = []
    for c in model.contacts:
        li = model.link_index[c.link]
        local = tuple(v.resolve(env) for v in c.position)
        out.append(kin.point(li, local))
    return out


def contact_kinematics(model, terrain, q, qd, rho, cells=None):
    """Per-contact :class:`ContactState`.

    ``cells`` optionally fixes the grid cell of each contact (needed when the
    contact position is symbolic); by default the cell is looked up from the
    numeric horizontal position.
    """
    env = model.param_env(rho)
    kin = _fk(model, q, env)
    return _contacts(model, terrain, kin, qd, env, cells)


def _contacts(model, terrain, kin, qd, env, cells=None):
    out = []
    for ci, (c, p) in enumerate(zip(model.contacts, contact_points_world(model, kin, env))):
        li = model.link_index[c.link]
        lin, _ = point_jacobian(model, kin, li, p)
        if terrain.kind == "flat":
            h = 0.0
        else:
            if cells is not None:
                i, j = cells[ci]
            else:
                x, y = _numeric_xy(p)
                if x is None or y is None:
                    raise ValueError("grid terrain with symbolic contact positions needs fixed cells")
                i, j = terrain.cell_index(x, y)
            h = terrain.heights[i][j]
        v = tuple(_row_dot(lin[r], qd) for r in range(3))
        out.append(
            ContactState(
                phi=p[2] - h,
                psi=(sp.dot(v, terrain.ex), sp.dot(v, terrain.ey)),
                jacobian=lin,
                position=p,
            )
        )
    return out


def _row_dot(row, x):
    total = 0.0
    for a, b in zip(row, x):
        if constant_value(a) == 0.0:
            continue
        total = total + a * b
    return total


def contact_force(lam6, terrain):
    """World force from ``[lz, lx+, lx-, ly+, ly-, gamma]``."""
    lz, lxp, lxm, lyp, lym = lam6[:5]
    fx, fy = lxp - lxm, lyp - lym
    return sp.vadd(sp.vscale(lz, NORMAL), sp.vadd(sp.vscale(fx, terrain.ex), sp.vscale(fy, terrain.ey)))


def _add_jt(tau, lin, force):
    """tau += lin^T force."""
    for k in range(len(tau)):
        acc = 0.0
        for r in range(3):
            if constant_value(lin[r][k]) == 0.0 or constant_value(force[r]) == 0.0:
                continue
            acc = acc + lin[r][k] * force[r]
        if constant_value(acc) != 0.0:
            tau[k] = tau[k] + acc


def generalized_forces(model, kin, env, u, lam=(), terrain=None):
    """B(q) u + J(q)^T F(lambda) as an n-vector."""
    tau = [0.0] * model.n
    for a, ua in zip(model.actuators, u):
        if a.kind == "joint":
            k = model.joint_dofs[model.joint_index[a.joint]][0]
            tau[k] = tau[k] + ua
            continue
        li = model.link_index[a.link]
        R = kin.link_rotation[li]
        d_world = sp.matvec(R, a.direction)
        p = kin.point(li, tuple(v.resolve(env) for v in a.position))
        lin, ang = point_jacobian(model, kin, li, p)
        _add_jt(tau, lin, sp.vscale(ua, d_world))
        if a.torque_coeff != 0.0:
            _add_jt(tau, ang, sp.vscale(a.torque_coeff * ua, d_world))
    if model.contacts:
        if terrain is None:
            terrain = Terrain()
        for ci, c in enumerate(model.contacts):
            li = model.link_index[c.link]
            p = kin.point(li, tuple(v.resolve(env) for v in c.position))
            lin, _ = point_jacobian(model, kin, li, p)
            _add_jt(tau, lin, contact_force(lam[6 * ci : 6 * ci + 6], terrain))
    return tau


def forward_dynamics(model, q, qd, u, lam, rho, terrain=None, gravity=GRAVITY):
    """``(qd, qdd)`` with ``H qdd = B u + J^T F(lambda) - (C qd + g)``."""
    env = model.param_env(rho)
    X = dof_transforms(model, q, env)
    kin = _fk(model, q, env)
    H = _crba(model, q, env, X)
    bias = _rnea(model, qd, [0.0] * model.n, env, X, gravity)
    tau = generalized_forces(model, kin, env, u, lam, terrain)
    rhs = [t - b for t, b in zip(tau, bias)]
    L, D = ltdl(model, H)
    qdd = ltdl_solve(model, L, D, rhs)
    if not any(isinstance(v, Expr) for v in qdd):
        if not all(math.isfinite(v) for v in qdd):
            raise SingularMassMatrix("non-finite forward-dynamics solve")
    return list(qd), qdd
