"""Bound-constrained augmented Lagrangian for sparse NLPs.

Every inequality row ``cl <= c(x) <= cu`` gets a slack ``s`` in ``[cl, cu]``
so that all general constraints become equalities ``h(x, s) = 0``::

    r = h(z) + y/mu
    Phi(z) = w * f(x) + mu/2 * ||r||^2          y <- mu * r

Each inner problem ``min Phi s.t. zl <= z <= zu`` is solved by a projected
Levenberg-Marquardt method: a Newton system on the free variables with the
matrix ``w*H_f + mu*J^T J (+ sum(mu*r_i*H_ci)) + sigma*I``, a step that
pins variables crossing the box, and a backtracking search accepting only
sufficient decrease of ``Phi``. When the predicted decrease is below
round-off, a full step is accepted instead if it halves the projected
gradient. The outer loop follows the classic
tolerance schedule: multipliers update when ``||h||`` meets ``eta``,
otherwise the penalty grows.
"""

import sys
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla


OPTIMAL = "Optimal"
FEASIBLE = "Feasible"
INFEASIBLE = "Infeasible"
ITERATION_LIMIT = "IterationLimit"
STATUSES = (OPTIMAL, FEASIBLE, INFEASIBLE, ITERATION_LIMIT)
# phase one keeps iterating until the violation is this fraction of eps_c
FEASIBILITY_MARGIN = 1e-2
# relative merit change that floating point cannot resolve
ROUNDOFF = 1e-14


@dataclass
class SolverOptions:
    max_iterations: int = 2000
    max_outer: int = 40
    eps_c: float = 1e-6
    eps_o: float = 1e-4
    mu0: float = 10.0
    mu_growth: float = 10.0
    mu_max: float = 1e8
    sigma0: float = 1e-4
    sigma_max: float = 1e12
    accept_ratio: float = 1e-4
    # the last tier sits below 1e-6 so relaxed products stay there after the eps_c allowance
    slack_schedule: tuple = (1e-2, 1e-4, 1e-6, 1e-7)
    seed: int = 0
    restarts: int = 10
    hessian: str = "exact"
    plateau_window: int = 60
    backtracks: int = 8
    active_tol: float = 1e-3
    log: object = None

    def __post_init__(self):
        if self.eps_c <= 0 or self.eps_o <= 0:
            raise ValueError("tolerances must be positive")
        s = list(self.slack_schedule)
        if not s or any(b >= a for a, b in zip(s, s[1:])) or s[-1] <= 0:
            raise ValueError("slack schedule must be positive and strictly decreasing")
        if self.hessian not in ("exact", "gauss-newton"):
            raise ValueError("hessian must be 'exact' or 'gauss-newton'")
        if self.mu_growth <= 1 or self.mu0 <= 0:
            raise ValueError("penalty must start positive and grow")


@dataclass
class SolveResult:
    status: str
    x: np.ndarray
    objective: float
    violations: dict
    max_violation: float
    iterations: int
    wall_time: float
    multipliers: np.ndarray = None
    kkt: dict = None
    history: list = field(default_factory=list, repr=False)
    info: dict = field(default_factory=dict)

    @property
    def success(self):
        return self.status in (OPTIMAL, FEASIBLE)


class _Log:
    def __init__(self, stream):
        self.stream = stream

    def __call__(self, phase, it, merit, viol, obj, step):
        if self.stream is None:
            return
        self.stream.write(f"{phase:>4s} {it:5d}  merit {merit: .6e}  viol {viol:.3e}  obj {obj: .6e}  step {step:.3e}\n")


def _violation(c, cl, cu):
    return np.maximum(np.maximum(cl - c, c - cu), 0.0)


def _project(x, xl, xu):
    return np.minimum(np.maximum(x, xl), xu)


class _SlackForm:
    """``c(x) - E s - b = 0`` with ``cl <= s <= cu`` for every inequality row.

    Equality rows keep ``b = cl`` and no slack. The merit function of this
    form is smooth, and the inequality active set is carried by the bounds on
    ``s`` where the projected Newton iteration identifies it.
    """

    def __init__(self, problem, xl, xu):
        cl, cu = problem.c_lower, problem.c_upper
        self.problem = problem
        self.ineq = np.flatnonzero(cl != cu)
        self.n = problem.n_vars
        self.ns = len(self.ineq)
        self.b = np.where(cl == cu, cl, 0.0)
        self.E = sps.csr_matrix(
            (np.ones(self.ns), (self.ineq, np.arange(self.ns))), shape=(problem.n_constraints, self.ns)
        )
        self.lower = np.concatenate([xl, cl[self.ineq]])
        self.upper = np.concatenate([xu, cu[self.ineq]])

    def split(self, z):
        return z[: self.n], z[self.n :]

    def lift(self, x, c=None, shift=None):
        """``z = (x, s)`` with each slack at its best value for ``x``."""
        c = self.problem.constraints(x) if c is None else c
        t = c[self.ineq] if shift is None else c[self.ineq] + shift[self.ineq]
        s = np.clip(t, self.problem.c_lower[self.ineq], self.problem.c_upper[self.ineq])
        return np.concatenate([x, s])

    def residual(self, c, s):
        h = c - self.b
        h[self.ineq] -= s
        return h

    def jacobian(self, J):
        return sps.hstack([J, -self.E], format="csr")

    def pad(self, H):
        if self.ns == 0:
            return H
        return sps.block_diag((H, sps.csr_matrix((self.ns, self.ns))), format="csr")


def _box_newton_step(B, g, z, zl, zu, free, sigma, max_rounds=20):
    """Damped Newton step that stays inside the box.

    Variables outside ``free`` take a damped diagonal step toward the bound
    their gradient points at.
    Free variables whose full step would leave the box are pinned to the bound
    they cross and the reduced system is solved again for the rest, so the
    returned step lies inside the box along its whole length.
    """
    n = len(z)
    step = np.zeros(n)
    pinned = ~free
    # near-active variables take a damped diagonal step toward their bound
    diag = B.diagonal()[pinned] + sigma
    step[pinned] = np.clip(-g[pinned] / diag, zl[pinned] - z[pinned], zu[pinned] - z[pinned])
    free = free.copy()
    for _ in range(max_rounds):
        nf = int(free.sum())
        if nf == 0:
            break
        rhs = -g[free]
        if pinned.any():
            rhs = rhs - B[free][:, pinned] @ step[pinned]
        M = (B[free][:, free] + sigma * sps.identity(nf, format="csc")).tocsc()
        try:
            pf = spla.splu(M, permc_spec="MMD_AT_PLUS_A", options={"SymmetricMode": True}).solve(rhs)
        except RuntimeError:
            return None
        if not np.all(np.isfinite(pf)):
            return None
        idx = np.flatnonzero(free)
        target = z[idx] + pf
        over = target > zu[idx]
        under = target < zl[idx]
        if not (over.any() or under.any()):
            step[idx] = pf
            return step
        hit = idx[over | under]
        step[hit] = np.where(over[over | under], zu[hit], zl[hit]) - z[hit]
        pinned[hit] = True
        free[hit] = False
    step[free] = 0.0
    return step


def solve_nlp(problem, x0, opts=None, phase="cost", bounds=None, multipliers=None):
    """Solve ``problem`` from ``x0``.

    ``phase="feasibility"`` ignores the objective and minimizes constraint
    violation only; ``phase="cost"`` minimizes the objective subject to the
    constraints. ``bounds`` optionally overrides the variable bounds and
    ``multipliers`` warm-starts the constraint multipliers.
    """
    opts = opts or SolverOptions()
    if phase not in ("feasibility", "cost"):
        raise ValueError("phase must be 'feasibility' or 'cost'")
    t0 = time.perf_counter()
    xl, xu = (problem.x_lower, problem.x_upper) if bounds is None else bounds
    xl = np.asarray(xl, dtype=float)
    xu = np.asarray(xu, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (problem.n_vars,):
        raise ValueError(f"x0 has shape {x0.shape}, expected ({problem.n_vars},)")
    log = _Log(opts.log)
    tag = "feas" if phase == "feasibility" else "cost"
    w = 0.0 if phase == "feasibility" else 1.0
    cl, cu = problem.c_lower, problem.c_upper
    n = problem.n_vars

    def finish(status, x, y, it, history, info=None):
        c = problem.constraints(x)
        bviol = np.maximum(np.maximum(xl - x, x - xu), 0.0)
        vmax = float(max(_violation(c, cl, cu).max(initial=0.0), bviol.max(initial=0.0)))
        lam = -y if y is not None else np.zeros(problem.n_constraints)
        return SolveResult(
            status=status,
            x=x,
            objective=problem.objective(x),
            violations=problem.family_violations(x),
            max_violation=vmax,
            iterations=it,
            wall_time=time.perf_counter() - t0,
            multipliers=lam,
            kkt=None,
            history=history,
            info=info or {},
        )

    if np.any(xl > xu):
        return finish(INFEASIBLE, _project(x0, np.minimum(xl, xu), xu), None, 0, [], {"reason": "empty box"})

    form = _SlackForm(problem, xl, xu)
    zl, zu = form.lower, form.upper
    x = _project(x0, xl, xu)
    y = np.zeros(problem.n_constraints) if multipliers is None else -np.asarray(multipliers, dtype=float)
    mu = opts.mu0 if phase == "cost" else 1.0
    sigma = opts.sigma0
    history = []
    it = 0
    eta0, omega0 = 0.1, 1.0
    eta = eta0 / mu**0.1
    omega = omega0 / mu
    best = None  # (objective, x) of the best iterate with violation <= eps_c
    fails_at_cap = 0
    stalls_at_cap = 0
    status = ITERATION_LIMIT
    exact = opts.hessian == "exact" and phase == "cost"
    z = form.lift(x, shift=y / mu)

    def merit_parts(zv):
        xv, sv = form.split(zv)
        c = problem.constraints(xv)
        f = problem.objective(xv) if w else 0.0
        r = form.residual(c, sv) + y / mu
        return w * f + 0.5 * mu * float(r @ r), f, c, r

    def projected_gradient(zv, rv):
        gv = mu * (form.jacobian(problem.jacobian(zv[:n])).T @ rv)
        if w:
            gv[:n] += w * problem.gradient(zv[:n])
        return float(np.abs(zv - _project(zv - gv, zl, zu)).max(initial=0.0))

    for outer in range(opts.max_outer):
        phi, f, c, r = merit_parts(z)
        window = []
        quiet = 0
        inner_status = None
        while True:
            x = z[:n]
            Ja = form.jacobian(problem.jacobian(x))
            g = mu * (Ja.T @ r)
            if w:
                g[:n] += w * problem.gradient(x)
            pg = z - _project(z - g, zl, zu)
            pgn = float(np.abs(pg).max(initial=0.0))
            viol = float(_violation(c, cl, cu).max(initial=0.0))
            if w and viol <= opts.eps_c and (best is None or f < best[0]):
                best = (f, x.copy())
            if phase == "feasibility":
                if viol <= FEASIBILITY_MARGIN * opts.eps_c:
                    inner_status = "feasible"
                    break
                hn = float(np.sqrt(r @ r))
                if pgn <= 1e-10 * max(hn, 1.0):
                    inner_status = "stationary"
                    break
                window.append(viol)
                if len(window) > opts.plateau_window:
                    if viol > (1.0 - 1e-3) * window[-opts.plateau_window - 1]:
                        inner_status = "plateau"
                        break
            elif pgn <= omega:
                inner_status = "converged"
                break
            if it >= opts.max_iterations:
                inner_status = "limit"
                break

            # projected Levenberg-Marquardt step on the free variables
            eps_a = min(opts.active_tol, pgn)
            at_lo = (z - zl <= eps_a) & (g > 0)
            at_hi = (zu - z <= eps_a) & (g < 0)
            free = ~(at_lo | at_hi)
            B = mu * (Ja.T @ Ja)
            Hxx = None
            if w:
                Hxx = w * problem.objective_hessian(x)
            if exact and np.any(r):
                Hc = problem.constraint_hessian(x, mu * r)
                Hxx = Hc if Hxx is None else Hxx + Hc
            if Hxx is not None:
                B = B + form.pad(Hxx)
            B = sps.csc_matrix(B)
            accepted = False
            s_step = None
            while sigma <= opts.sigma_max and not accepted:
                step = _box_newton_step(B, g, z, zl, zu, free, sigma)
                if step is None or g @ step >= 0:
                    sigma *= 10.0
                    continue
                alpha, ratio = 1.0, 0.0
                for _ in range(opts.backtracks):
                    zt = _project(z + alpha * step, zl, zu)
                    s_step = zt - z
                    slope = float(g @ s_step)
                    if slope >= 0 or not np.any(s_step):
                        break
                    try:
                        phit, ft, ct, rt = merit_parts(zt)
                    except (FloatingPointError, ArithmeticError) as exc:
                        alpha *= 0.5
                        continue
                    if alpha == 1.0:
                        pred = -(slope + 0.5 * s_step @ (B @ s_step))
                        ratio = (phi - phit) / pred if pred > 0 else 0.0
                    if phit < phi and phi - phit >= -opts.accept_ratio * slope:
                        accepted = True
                        break
                    if alpha == 1.0 and 0 < pred <= ROUNDOFF * max(1.0, abs(phi)):
                        if abs(phit - phi) <= ROUNDOFF * max(1.0, abs(phi)) and projected_gradient(zt, rt) <= 0.5 * pgn:
                            accepted = True
                            break
                    alpha *= 0.5
                if accepted:
                    if alpha == 1.0 and ratio > 0.75:
                        sigma = max(sigma / 3.0, 1e-12)
                    elif alpha < 1.0 or ratio < 0.25:
                        sigma *= 2.0
                else:
                    sigma *= 10.0
            it += 1
            if not accepted:
                inner_status = "stalled"
                break
            quiet = quiet + 1 if phi - phit <= ROUNDOFF * max(1.0, abs(phi)) else 0
            z, phi, f, c, r = zt, phit, ft, ct, rt
            vnew = float(_violation(c, cl, cu).max(initial=0.0))
            step_norm = float(np.abs(s_step).max())
            history.append((outer, it, phi, vnew, f, step_norm))
            log(tag, it, phi, vnew, f, step_norm)
            if quiet >= 10:
                inner_status = "stalled"
                break

        x = z[:n]
        viol = float(_violation(c, cl, cu).max(initial=0.0))
        if phase == "feasibility":
            if inner_status == "feasible" or viol <= opts.eps_c:
                status = FEASIBLE
            elif inner_status in ("stationary", "plateau", "stalled"):
                status = INFEASIBLE
            else:
                status = ITERATION_LIMIT
            return finish(status, x, None, it, history, {"inner": inner_status})

        # outer update of multipliers and penalty
        if inner_status == "limit":
            status = ITERATION_LIMIT
            break
        if inner_status == "stalled" and mu >= opts.mu_max:
            stalls_at_cap += 1
            if stalls_at_cap >= 3:
                break
        h = form.residual(c, z[n:])
        hn = float(np.abs(h).max(initial=0.0))
        if hn <= max(eta, opts.eps_c):
            y = mu * r
            if viol <= opts.eps_c and hn <= opts.eps_c and pgn <= opts.eps_o:
                status = OPTIMAL
                break
            if inner_status == "stalled" and omega <= opts.eps_o and viol <= opts.eps_c:
                status = FEASIBLE
                break
            eta = max(eta / mu**0.9, 0.1 * opts.eps_c)
            omega = max(omega / mu, opts.eps_o)
            fails_at_cap = 0
        else:
            if mu >= opts.mu_max:
                fails_at_cap += 1
                if fails_at_cap >= 3:
                    status = INFEASIBLE
                    break
            mu = min(mu * opts.mu_growth, opts.mu_max)
            eta = max(eta0 / mu**0.1, 0.1 * opts.eps_c)
            omega = max(omega0 / mu, opts.eps_o)
        sigma = max(sigma, opts.sigma0)
        z = form.lift(x, c, shift=y / mu)

    x = z[:n]
    info = {"mu": mu}
    if status != OPTIMAL:
        viol = float(_violation(problem.constraints(x), cl, cu).max(initial=0.0))
        if viol <= opts.eps_c:
            status = FEASIBLE
        elif best is not None:
            info["last_iterate"] = x
            x = best[1]
            status = FEASIBLE
    return finish(status, x, y, it, history, info)


def kkt_residual(problem, x, multipliers, bounds=None):
    """Stationarity, primal and dual feasibility and complementarity at ``x``.

    ``multipliers`` follow the convention ``grad f - J^T lam`` with ``lam >= 0``
    on active lower bounds and ``lam <= 0`` on active upper bounds; variable
    bounds are handled by projecting the stationarity residual.
    """
    xl, xu = (problem.x_lower, problem.x_upper) if bounds is None else bounds
    x = np.asarray(x, dtype=float)
    lam = np.asarray(multipliers, dtype=float)
    c = problem.constraints(x)
    cl, cu = problem.c_lower, problem.c_upper
    r = problem.gradient(x)
    if problem.n_constraints:
        r = r - problem.jacobian(x).T @ lam
    stat = float(np.abs(x - _project(x - r, xl, xu)).max(initial=0.0))
    primal = float(max(_violation(c, cl, cu).max(initial=0.0),
                       np.maximum(np.maximum(xl - x, x - xu), 0.0).max(initial=0.0)))
    eq = cl == cu
    lower_only = np.isfinite(cl) & ~np.isfinite(cu)
    upper_only = np.isfinite(cu) & ~np.isfinite(cl)
    dual = 0.0
    if np.any(lower_only):
        dual = max(dual, float(np.maximum(-lam[lower_only], 0.0).max()))
    if np.any(upper_only):
        dual = max(dual, float(np.maximum(lam[upper_only], 0.0).max()))
    gap = np.where(lam > 0, c - cl, np.where(lam < 0, cu - c, 0.0))
    gap = np.where(eq, 0.0, gap)
    gap = np.where(np.isfinite(gap), gap, 0.0)
    comp = float(np.abs(lam * gap).max(initial=0.0))
    return {"stationarity": stat, "primal": primal, "dual": dual, "complementarity": comp}


def default_log():
    return sys.stderr
