"""Assembly of the full co-design NLP from a robot, a task and a motor library."""

import itertools
from dataclasses import dataclass

import numpy as np

from ..diff import var
from ..dynamics import GRAVITY, Terrain, contact_kinematics, forward_dynamics
from ..dynamics.rbd import _fk
from ..errors import BadKeyframe, SchemaError
from .layout import DecisionLayout
from .problem import ConstraintBlock, NlpProblem
from .task import Keyframe, ObjectiveSpec

INF = np.inf


@dataclass(frozen=True)
class TranscriptionOptions:
    """Knobs of the transcription that the method leaves open.

    ``implicit`` evaluates the dynamics at knot k+1 instead of k.
    ``divide_weight`` splits the initial normal force among touching contacts.
    """

    implicit: bool = False
    divide_weight: bool = False
    contact_tol: float = 1e-3
    initial_slack: float = 1e-2
    dt_bounds: tuple = (0.2, 5.0)
    freeze_parameters: bool = False
    ground_clearance: bool = None


class _Locals:
    """Allocates local variable slots of a template and their per-instance index columns."""

    def __init__(self, n_instances):
        self.n = n_instances
        self.columns = []

    def group(self, index_rows):
        cols = np.asarray(index_rows, dtype=np.int64).reshape(self.n, -1)
        start = len(self.columns)
        self.columns.extend(cols.T)
        return [var(start + i) for i in range(cols.shape[1])]

    def index(self):
        return np.column_stack(self.columns) if self.columns else np.zeros((self.n, 0), np.int64)


# -- keyframes and initial guess ----------------------------------------------
def interpolate_keyframes(keyframes, K, n):
    """Piecewise-linear configuration at every knot; held constant outside the keyframes."""
    frames = sorted(keyframes, key=lambda kf: kf.knot)
    if len(frames) < 2:
        raise BadKeyframe("at least two keyframes are required")
    for kf in frames:
        if len(kf.q) != n:
            raise BadKeyframe(f"keyframe at knot {kf.knot} has {len(kf.q)} entries, expected {n}")
        if not 0 <= kf.knot < K:
            raise BadKeyframe(f"keyframe knot {kf.knot} outside [0, {K})")
    knots = [kf.knot for kf in frames]
    if len(set(knots)) != len(knots):
        raise BadKeyframe("two keyframes share a knot")
    Q = np.array([kf.q for kf in frames], dtype=float)
    ks = np.arange(K)
    return np.column_stack([np.interp(ks, knots, Q[:, j]) for j in range(n)]) if n else np.zeros((K, 0))


def keyframes_for(task, K):
    """The task's keyframes moved proportionally onto a ``K``-knot grid."""
    K0 = int(task.knots)
    if K == K0:
        return task.keyframes
    return tuple(Keyframe(int(round(kf.knot * (K - 1) / (K0 - 1))), kf.q) for kf in task.keyframes)


def _u_max(model, library):
    out = []
    for a in model.actuators:
        lim = a.limit
        if library is not None and a.kind == "joint":
            lim = min(lim, library.max_torque)
        out.append(lim)
    return np.asarray(out, dtype=float)


def initialize_guess(model, task, layout, library=None, seed=0, options=None, rho=None):
    """Initial decision vector.

    q interpolates the keyframes, qd = 0, dt = T/(K-1), touching contacts get a
    normal force equal to the robot's weight, u ~ U(-u', u'), rho = rho0,
    xi = max|u| and every complementarity slack starts at the initial relaxation.
    """
    options = options or TranscriptionOptions()
    K, n = layout.K, layout.n
    rho = np.asarray(model.rho0 if rho is None else rho, dtype=float)
    x = np.zeros(layout.total)
    Q = interpolate_keyframes(keyframes_for(task, K), K, n)
    rng = np.random.default_rng(seed)
    umax = _u_max(model, library)
    weight = GRAVITY * float(model.total_mass(rho))
    terrain = task.terrain
    for k in range(K):
        x[layout.q(k)] = Q[k]
        if layout.m:
            x[layout.u(k)] = rng.uniform(-umax, umax)
        if layout.l:
            states = contact_kinematics(model, terrain, list(Q[k]), [0.0] * n, list(rho))
            touching = [s.phi <= options.contact_tol for s in states]
            count = max(sum(touching), 1)
            for i, t in enumerate(touching):
                if t:
                    x[layout.lam(k, i)[0]] = weight / count if options.divide_weight else weight
    dt = task.duration_max / (K - 1)
    for k in range(K - 1):
        x[layout.dt(k)] = dt
        x[layout.slack(k)] = options.initial_slack
    x[layout.rho] = rho
    x[layout.xi] = float(np.abs(x[layout.all_of("u")]).max(initial=0.0))
    return x


# -- constraint templates --------------------------------------------------------
def dynamics_block(model, terrain, L, implicit=False):
    """Euler defects ``x_{k+1} - x_k - f dt_k`` over every interval (2n rows each)."""
    N = L.K - 1
    loc = _Locals(N)
    ks = range(N)
    q0 = loc.group([L.q(k) for k in ks])
    qd0 = loc.group([L.qd(k) for k in ks])
    q1 = loc.group([L.q(k + 1) for k in ks])
    qd1 = loc.group([L.qd(k + 1) for k in ks])
    src = [k + 1 for k in ks] if implicit else list(ks)
    u = loc.group([L.u(k) for k in src])
    lam = loc.group([L.lam(k) for k in src])
    dt = loc.group([[L.dt(k)] for k in ks])[0]
    rho = loc.group([L.rho for _ in ks])
    qa, qda = (q1, qd1) if implicit else (q0, qd0)
    vel, acc = forward_dynamics(model, qa, qda, u, lam, rho, terrain)
    rows = [q1[i] - q0[i] - vel[i] * dt for i in range(model.n)]
    rows += [qd1[i] - qd0[i] - acc[i] * dt for i in range(model.n)]
    return loc, rows, 0.0, 0.0


def _slack_interval(k, K):
    # the last knot reuses the last interval's slacks
    return min(k, K - 2)


def contact_block(model, terrain, L, cells_aux):
    """Non-penetration, friction pyramid, sliding bounds and relaxed complementarity.

    Per contact: phi >= 0, mu*lz - sum(lt) >= 0, gamma -/+ psi >= 0 (4 rows), and
    product - s <= 0 for the six complementarity products. The products are
    non-negative by the sign constraints on both factors.
    """
    K = L.K
    loc = _Locals(K)
    q = loc.group([L.q(k) for k in range(K)])
    qd = loc.group([L.qd(k) for k in range(K)])
    lam = loc.group([L.lam(k) for k in range(K)])
    s = loc.group([L.slack(_slack_interval(k, K)) for k in range(K)])
    rho = loc.group([L.rho for _ in range(K)])
    h = loc.group(cells_aux) if cells_aux is not None else [0.0] * L.l
    flat = Terrain(kind="flat", mu=terrain.mu, ex=terrain.ex, ey=terrain.ey)
    states = contact_kinematics(model, flat, q, qd, rho)
    rows, lo, hi = [], [], []
    mu = terrain.mu
    for i, st in enumerate(states):
        lz, lxp, lxm, lyp, lym, gam = lam[6 * i : 6 * i + 6]
        s0, s1, s2, s3, s4 = s[5 * i : 5 * i + 5]
        phi = st.phi - h[i]
        psx, psy = st.psi
        cone = mu * lz - lxp - lxm - lyp - lym
        slide = [gam + psx, gam - psx, gam + psy, gam - psy]
        rows += [phi, cone] + slide
        lo += [0.0] * 6
        hi += [INF] * 6
        prods = [
            (phi * lz, s0),
            (cone * gam, s0),
            (slide[0] * lxp, s1),
            (slide[1] * lxm, s2),
            (slide[2] * lyp, s3),
            (slide[3] * lym, s4),
        ]
        for prod, slack in prods:
            rows.append(prod - slack)
            lo.append(-INF)
            hi.append(0.0)
    return loc, rows, lo, hi


def clearance_corners(model):
    """``(link index, local corner)`` for the box corners of links without contacts."""
    with_contacts = {c.link for c in model.contacts}
    out = []
    for li, link in enumerate(model.links):
        if link.name in with_contacts or link.box is None:
            continue
        for signs in itertools.product((-0.5, 0.5), repeat=3):
            out.append((li, signs))
    return out


def clearance_block(model, L, corners, cells_aux):
    K = L.K
    loc = _Locals(K)
    q = loc.group([L.q(k) for k in range(K)])
    rho = loc.group([L.rho for _ in range(K)])
    h = loc.group(cells_aux) if cells_aux is not None else [0.0] * len(corners)
    env = model.param_env(rho)
    kin = _fk(model, q, env)
    rows = []
    for j, (li, signs) in enumerate(corners):
        rows.append(_corner_world(model, kin, env, li, signs)[2] - h[j])
    return loc, rows, 0.0, INF


def _corner_world(model, kin, env, li, signs):
    link = model.links[li]
    center = link.box_center if link.box_center is not None else link.com
    local = tuple(c.resolve(env) + sg * e.resolve(env) for c, sg, e in zip(center, signs, link.box))
    return kin.point(li, local)


def _resolve_dofs(model, dofs):
    if dofs is None:
        return list(range(model.n))
    out = []
    names = model.dof_names
    for d in dofs:
        if isinstance(d, str):
            if d not in names:
                raise SchemaError(f"unknown dof {d!r}")
            out.append(names.index(d))
        else:
            if not 0 <= int(d) < model.n:
                raise SchemaError(f"dof index {d} outside [0, {model.n})")
            out.append(int(d))
    return out


def _window(tc, count):
    if tc.values is not None:
        if len(tc.values) != count:
            raise SchemaError(f"{tc.kind}: expected {count} values, got {len(tc.values)}")
        return list(tc.values), list(tc.values)
    lo = list(tc.lower) if tc.lower is not None else [None] * count
    hi = list(tc.upper) if tc.upper is not None else [None] * count
    if len(lo) != count or len(hi) != count:
        raise SchemaError(f"{tc.kind}: window needs {count} entries")
    return [-INF if v is None else v for v in lo], [INF if v is None else v for v in hi]


def com_height(model, kin, env):
    total, acc = 0.0, 0.0
    for li, link in enumerate(model.links):
        m = link.mass.resolve(env)
        c = kin.point(li, tuple(v.resolve(env) for v in link.com))
        total = total + m
        acc = acc + m * c[2]
    return acc / total


def task_block(model, L, tc, name):
    knots = tc.resolve_knots(L.K)
    loc = _Locals(len(knots))
    if tc.kind in ("config", "velocity"):
        dofs = _resolve_dofs(model, tc.dofs)
        part = L.q if tc.kind == "config" else L.qd
        rows = loc.group([part(k)[dofs] for k in knots])
        lo, hi = _window(tc, len(dofs))
    elif tc.kind == "point":
        q = loc.group([L.q(k) for k in knots])
        rho = loc.group([L.rho for _ in knots])
        if tc.link not in model.link_index:
            raise SchemaError(f"point constraint: unknown link {tc.link!r}")
        unknown = set().union(*(v.names for v in tc.point)) - {prm.name for prm in model.parameters}
        if unknown:
            raise SchemaError(f"point constraint: unknown parameter(s) {sorted(unknown)}")
        env = model.param_env(rho)
        kin = _fk(model, q, env)
        p = kin.point(model.link_index[tc.link], tuple(v.resolve(env) for v in tc.point))
        rows, lo, hi = [], [], []
        if tc.target is not None:
            for axis, v in enumerate(tc.target):
                if v is not None:
                    rows.append(p[axis])
                    lo.append(v)
                    hi.append(v)
        else:
            box_lo, box_hi = _window(tc, 3)
            for axis in range(3):
                if np.isfinite(box_lo[axis]) or np.isfinite(box_hi[axis]):
                    rows.append(p[axis])
                    lo.append(box_lo[axis])
                    hi.append(box_hi[axis])
    else:  # com_height
        q = loc.group([L.q(k) for k in knots])
        rho = loc.group([L.rho for _ in knots])
        env = model.param_env(rho)
        rows = [com_height(model, _fk(model, q, env), env)]
        lo = [-INF if tc.lower is None else tc.lower[0]]
        hi = [INF if tc.upper is None else tc.upper[0]]
    return ConstraintBlock(name, "task", rows, loc.index(), lo, hi, L.total)


def epigraph_block(L):
    loc = _Locals(L.K)
    u = loc.group([L.u(k) for k in range(L.K)])
    xi = loc.group([[L.xi] for _ in range(L.K)])[0]
    rows = [xi - ui for ui in u] + [xi + ui for ui in u]
    return ConstraintBlock("epigraph", "epigraph", rows, loc.index(), 0.0, INF, L.total)


def design_block(model, L, library):
    """``param - multiplier * curve(xi) - offset >= 0`` per coupling.

    Mass couplings also add the robot's structural mass to the offset.
    """
    loc = _Locals(1)
    rho = loc.group([L.rho])
    xi = loc.group([[L.xi]])[0]
    rows = []
    for c in model.couplings:
        offset = c.offset + (model.structural_mass if c.bound == "mass" else 0.0)
        rows.append(rho[model.param_index[c.parameter]] - c.multiplier * library.curve(c.bound, xi) - offset)
    return ConstraintBlock("design", "design", rows, loc.index(), 0.0, INF, L.total)


def parametric_block(model, L):
    loc = _Locals(1)
    rho = loc.group([L.rho])
    env = model.param_env(rho)
    rows = [pc.expr.resolve(env) for pc in model.parameter_constraints]
    lo = [pc.lower for pc in model.parameter_constraints]
    hi = [pc.upper for pc in model.parameter_constraints]
    return ConstraintBlock("parametric", "parametric", rows, loc.index(), lo, hi, L.total)


def duration_block(L, T):
    loc = _Locals(1)
    dts = loc.group([[L.dt(k) for k in range(L.K - 1)]])
    total = dts[0]
    for d in dts[1:]:
        total = total + d
    return ConstraintBlock("duration", "task", [total], loc.index(), -INF, T, L.total)


def objective_expr(spec, L, rho0):
    if spec.mode == "time":
        total = 0.0
        for k in range(L.K - 1):
            total = total + var(L.dt(k))
        return total
    f = spec.alpha * var(L.xi) if spec.alpha else 0.0
    if spec.beta:
        reg = 0.0
        for j, r0 in zip(L.rho, rho0):
            d = var(int(j)) - float(r0)
            reg = reg + d * d
        f = f + spec.beta * 0.5 * reg
    return f


def build_nlp(model, task, library=None, objective=None, K=None, T=None, options=None):
    """Transcribe a co-design problem into an :class:`NlpProblem`.

    ``objective``, ``K`` and ``T`` override the task's own values.
    """
    options = options or TranscriptionOptions()
    objective = objective or task.objective or ObjectiveSpec()
    K = int(task.knots if K is None else K)
    T = float(task.duration_max if T is None else T)
    if model.couplings and library is None:
        raise SchemaError("robot declares motor couplings but no motor library was given")
    L = DecisionLayout(K=K, n=model.n, m=model.m, l=model.l, p=model.p)
    terrain = task.terrain
    rho0 = np.asarray(model.rho0, dtype=float)

    # initial guess at the anchor design fixes grid cells for symbolic contact points
    Q = interpolate_keyframes(keyframes_for(task, K), K, model.n)
    aux = []
    cells = None
    clear_cells = None
    corners = clearance_corners(model)
    use_clearance = model.ground_clearance if options.ground_clearance is None else options.ground_clearance
    if terrain.kind == "grid":
        cells, clear_cells = [], []
        for k in range(K):
            states = contact_kinematics(model, terrain, list(Q[k]), [0.0] * model.n, list(rho0))
            row = []
            for st in states:
                aux.append(terrain.height(st.position[0], st.position[1]))
                row.append(L.total + len(aux) - 1)
            cells.append(row)
            if use_clearance and corners:
                env = model.param_env(list(rho0))
                kin = _fk(model, list(Q[k]), env)
                row = []
                for li, signs in corners:
                    p = _corner_world(model, kin, env, li, signs)
                    aux.append(terrain.height(p[0], p[1]))
                    row.append(L.total + len(aux) - 1)
                clear_cells.append(row)

    blocks = []
    if model.n:
        loc, rows, lo, hi = dynamics_block(model, terrain, L, options.implicit)
        blocks.append(ConstraintBlock("dynamics", "dynamics", rows, loc.index(), lo, hi, L.total))
    if model.l:
        loc, rows, lo, hi = contact_block(model, terrain, L, cells)
        blocks.append(ConstraintBlock("contact", "contact", rows, loc.index(), lo, hi, L.total))
    if use_clearance and corners:
        loc, rows, lo, hi = clearance_block(model, L, corners, clear_cells or None)
        blocks.append(ConstraintBlock("clearance", "contact", rows, loc.index(), lo, hi, L.total))
    for i, tc in enumerate(task.constraints):
        blocks.append(task_block(model, L, tc, f"task{i}:{tc.kind}"))
    blocks.append(duration_block(L, T))
    if model.parameter_constraints:
        blocks.append(parametric_block(model, L))
    if model.couplings:
        blocks.append(design_block(model, L, library))
    if model.m:
        blocks.append(epigraph_block(L))

    # variable bounds
    xl = np.full(L.total, -INF)
    xu = np.full(L.total, INF)
    umax = _u_max(model, library)
    dt_nom = T / (K - 1)
    for k in range(K):
        xl[L.u(k)] = -umax
        xu[L.u(k)] = umax
        xl[L.lam(k)] = 0.0
    for k in range(K - 1):
        xl[L.slack(k)] = 0.0
        xu[L.slack(k)] = options.initial_slack
        xl[L.dt(k)] = options.dt_bounds[0] * dt_nom
        xu[L.dt(k)] = options.dt_bounds[1] * dt_nom
    for j, prm in zip(L.rho, model.parameters):
        if options.freeze_parameters:
            xl[j] = xu[j] = prm.initial
        else:
            xl[j], xu[j] = prm.lower, prm.upper
    xl[L.xi] = 0.0
    xu[L.xi] = float(umax.max(initial=0.0))

    def guess(seed=0):
        x0 = initialize_guess(model, task, L, library, seed, options)
        return np.clip(x0, xl, xu)

    meta = {
        "model": model,
        "task": task,
        "library": library,
        "objective": objective,
        "options": options,
        "K": K,
        "T": T,
        "u_max": umax,
        "slack_indices": L.all_of("slack"),
    }
    return NlpProblem(
        layout=L,
        x_lower=xl,
        x_upper=xu,
        blocks=blocks,
        objective_expr=objective_expr(objective, L, rho0),
        aux=np.asarray(aux, dtype=float),
        guess=guess,
        meta=meta,
    )


def objective_breakdown(problem, x):
    """``G_act``, ``G_reg`` and the weighted total at ``x``."""
    L = problem.layout
    spec = problem.meta["objective"]
    x = np.asarray(x, dtype=float)
    rho0 = np.asarray(problem.meta["model"].rho0, dtype=float)
    g_act = float(x[L.xi])
    g_reg = float(0.5 * np.sum((x[L.rho] - rho0) ** 2))
    if spec.mode == "time":
        total = float(np.sum(x[L.all_of("dt")]))
    else:
        total = spec.alpha * g_act + spec.beta * g_reg
    return {"G_act": g_act, "G_reg": g_reg, "total": total, "duration": float(np.sum(x[L.all_of("dt")]))}


def corner_positions(model, q, rho):
    """World positions of every ground-clearance corner (numeric helper)."""
    env = model.param_env(list(rho))
    kin = _fk(model, list(q), env)
    return [_corner_world(model, kin, env, li, s) for li, s in clearance_corners(model)]

