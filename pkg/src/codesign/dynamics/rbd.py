"""Kinematics and rigid-body dynamics over an expanded single-axis tree.

All functions accept plain floats or Exprs for ``q``, ``qd``, ``u``, ``lam``
and ``rho``; constant zeros are pruned as the expressions are built, so the
same code is the fast numeric path and the symbolic path.
"""

import math
from dataclasses import dataclass

from ..diff import Expr, constant_value
from ..errors import SingularMassMatrix
from . import spatial as sp

GRAVITY = 9.81


def box_inertia(m, L, w, d):
    """Uniform-density rectangular prism tensor about its centre.

    ``L``, ``w`` and ``d`` are the extents along the local x, y and z axes.
    """
    return sp.diag(
        (
            m * (w * w + d * d) / 12.0,
            m * (L * L + d * d) / 12.0,
            m * (L * L + w * w) / 12.0,
        )
    )


def _resolve3(qs, env):
    return tuple(q.resolve(env) for q in qs)


def link_inertia(link, env):
    """Spatial inertia ``(m, h, I_origin)`` of a link in its own frame."""
    mass = link.mass.resolve(env)
    com = _resolve3(link.com, env)
    if link.inertia is not None:
        Ic = tuple(_resolve3(row, env) for row in link.inertia)
    elif link.box is not None:
        Ic = box_inertia(mass, *_resolve3(link.box, env))
    else:
        Ic = sp.ZERO33
    return sp.inertia_about_origin(mass, com, Ic)


def dof_transforms(model, q, env):
    """Per-dof Plucker transform (E, r) from the parent frame to the dof frame."""
    out = []
    for d in model.dofs:
        origin = _resolve3(d.origin, env)
        if d.kind == "R":
            Rj = sp.matmul(d.rotation, sp.rotation(d.axis, q[d.index]))
            r = origin
        else:
            Rj = d.rotation
            r = sp.vadd(origin, sp.vscale(q[d.index], sp.matvec(d.rotation, d.axis)))
        out.append((sp.transpose(Rj), r))
    return out


@dataclass
class Kinematics:
    """World poses: rotation (body to world) and origin of every dof frame and link."""

    dof_rotation: list
    dof_origin: list
    link_rotation: list
    link_origin: list

    def point(self, link_index, local):
        R, p = self.link_rotation[link_index], self.link_origin[link_index]
        return sp.vadd(p, sp.matvec(R, local))


def forward_kinematics(model, q, rho):
    env = model.param_env(rho)
    return _fk(model, q, env)


def _fk(model, q, env):
    rots, origins = [], []
    for d, (E, r) in zip(model.dofs, dof_transforms(model, q, env)):
        if d.parent < 0:
            R0, p0 = sp.EYE3, sp.ZERO3
        else:
            R0, p0 = rots[d.parent], origins[d.parent]
        rots.append(sp.matmul(R0, sp.transpose(E)))
        origins.append(sp.vadd(p0, sp.matvec(R0, r)))
    link_rot, link_org = [], []
    for li in range(len(model.links)):
        k = model.link_dof[li]
        link_rot.append(sp.EYE3 if k < 0 else rots[k])
        link_org.append(sp.ZERO3 if k < 0 else origins[k])
    return Kinematics(rots, origins, link_rot, link_org)


def ancestors(model, dof):
    """Dof indices from ``dof`` up to the root, inclusive."""
    out = []
    while dof >= 0:
        out.append(dof)
        dof = model.dofs[dof].parent
    return out


def point_jacobian(model, kin, link_index, point_world):
    """Linear (3 x n) and angular (3 x n) world Jacobians of a point on a link."""
    n = model.n
    lin = [[0.0] * n for _ in range(3)]
    ang = [[0.0] * n for _ in range(3)]
    for k in ancestors(model, model.link_dof[link_index]):
        d = model.dofs[k]
        a = sp.matvec(kin.dof_rotation[k], d.axis)
        if d.kind == "R":
            col = sp.cross(a, sp.vsub(point_world, kin.dof_origin[k]))
            for i in range(3):
                ang[i][k] = a[i]
        else:
            col = a
        for i in range(3):
            lin[i][k] = col[i]
    return lin, ang


def dof_inertias(model, env):
    zero = (0.0, sp.ZERO3, sp.ZERO33)
    out = [zero] * model.n
    for li, link in enumerate(model.links):
        k = model.link_dof[li]
        if k >= 0:
            out[k] = link_inertia(link, env)
    return out


def _motion_subspace(d):
    return (d.axis, sp.ZERO3) if d.kind == "R" else (sp.ZERO3, d.axis)


def _project(d, f):
    """S^T f for a single-axis dof."""
    return sp.dot(d.axis, f[0] if d.kind == "R" else f[1])


def mass_matrix(model, q, rho):
    """Joint-space inertia matrix by the composite-rigid-body algorithm."""
    env = model.param_env(rho)
    return _crba(model, q, env, dof_transforms(model, q, env))


def _crba(model, q, env, X):
    n = model.n
    Ic = list(dof_inertias(model, env))
    for i in range(n - 1, -1, -1):
        p = model.dofs[i].parent
        if p >= 0:
            Ic[p] = sp.inertia_add(Ic[p], sp.inertia_to_parent(X[i], Ic[i]))
    H = [[0.0] * n for _ in range(n)]
    for i in range(n):
        d = model.dofs[i]
        F = sp.inertia_apply(Ic[i], _motion_subspace(d))
        H[i][i] = _project(d, F)
        j = i
        while model.dofs[j].parent >= 0:
            F = sp.xform_force_to_parent(X[j], F)
            j = model.dofs[j].parent
            H[i][j] = H[j][i] = _project(model.dofs[j], F)
    return H


def inverse_dynamics(model, q, qd, qdd, rho, gravity=GRAVITY):
    """Generalized forces H(q) qdd + C(q, qd) qd + g(q) by recursive Newton-Euler."""
    env = model.param_env(rho)
    return _rnea(model, qd, qdd, env, dof_transforms(model, q, env), gravity)


def _rnea(model, qd, qdd, env, X, gravity):
    inert = dof_inertias(model, env)
    a_world = (sp.ZERO3, (0.0, 0.0, gravity))
    v_world = (sp.ZERO3, sp.ZERO3)
    vs, fs = [], []
    for i, d in enumerate(model.dofs):
        S = _motion_subspace(d)
        vj = (sp.vscale(qd[i], S[0]), sp.vscale(qd[i], S[1]))
        if d.parent < 0:
            vp, ap = v_world, a_world
        else:
            vp, ap = vs[d.parent], fs[d.parent][1]
        v = sp.xform_motion(X[i], vp)
        v = (sp.vadd(v[0], vj[0]), sp.vadd(v[1], vj[1]))
        a = sp.xform_motion(X[i], ap)
        a = (
            sp.vadd(a[0], sp.vscale(qdd[i], S[0])),
            sp.vadd(a[1], sp.vscale(qdd[i], S[1])),
        )
        c = sp.cross_motion(v, vj)
        a = (sp.vadd(a[0], c[0]), sp.vadd(a[1], c[1]))
        f = sp.inertia_apply(inert[i], a)
        g = sp.cross_force(v, sp.inertia_apply(inert[i], v))
        f = (sp.vadd(f[0], g[0]), sp.vadd(f[1], g[1]))
        vs.append(v)
        fs.append([f, a])
    forces = [entry[0] for entry in fs]
    tau = [0.0] * model.n
    for i in range(model.n - 1, -1, -1):
        d = model.dofs[i]
        tau[i] = _project(d, forces[i])
        if d.parent >= 0:
            back = sp.xform_force_to_parent(X[i], forces[i])
            fp = forces[d.parent]
            forces[d.parent] = (sp.vadd(fp[0], back[0]), sp.vadd(fp[1], back[1]))
    return tau


def bias_forces(model, q, qd, rho, gravity=GRAVITY):
    """C(q, qd) qd + g(q): inverse dynamics at zero acceleration."""
    return inverse_dynamics(model, q, qd, [0.0] * model.n, rho, gravity)


def ltdl(model, H):
    """Sparsity-preserving factorization H = L^T D L over the tree.

    Returns ``(L, D)`` with ``L[k][i]`` defined for ancestors ``i`` of ``k``.
    Numeric pivots that are not strictly positive raise SingularMassMatrix.
    """
    n = model.n
    A = [row[:] for row in H]
    for k in range(n - 1, -1, -1):
        pivot = A[k][k]
        cv = constant_value(pivot)
        if cv is not None and not (cv > 0.0 and math.isfinite(cv)):
            raise SingularMassMatrix(f"non-positive pivot {cv} at dof {k}")
        i = model.dofs[k].parent
        while i >= 0:
            a = A[k][i] / pivot
            j = i
            while j >= 0:
                A[i][j] = A[i][j] - a * A[k][j]
                j = model.dofs[j].parent
            A[k][i] = a
            i = model.dofs[i].parent
    D = [A[k][k] for k in range(n)]
    return A, D


def ltdl_solve(model, L, D, b):
    """Solve (L^T D L) x = b given the output of :func:`ltdl`."""
    n = model.n
    x = list(b)
    for i in range(n - 1, -1, -1):
        j = model.dofs[i].parent
        while j >= 0:
            x[j] = x[j] - L[i][j] * x[i]
            j = model.dofs[j].parent
    for i in range(n):
        x[i] = x[i] / D[i]
    for i in range(n):
        j = model.dofs[i].parent
        while j >= 0:
            x[i] = x[i] - L[i][j] * x[j]
            j = model.dofs[j].parent
    return x


def is_symbolic(*groups):
    return any(isinstance(v, Expr) for g in groups for v in g)
