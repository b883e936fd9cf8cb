"""Two-phase co-optimization: feasibility with a shrinking slack, then cost."""

import time

import numpy as np

from .auglag import (
    FEASIBILITY_MARGIN,
    FEASIBLE,
    INFEASIBLE,
    ITERATION_LIMIT,
    OPTIMAL,
    SolverOptions,
    SolveResult,
    kkt_residual,
    solve_nlp,
)


def _slack_bounds(problem, s_max):
    xl = problem.x_lower.copy()
    xu = problem.x_upper.copy()
    idx = problem.meta.get("slack_indices", np.zeros(0, np.int64))
    xu[idx] = s_max
    return xl, xu


def find_feasible(problem, x0, opts):
    """Run the slack schedule from ``x0``; returns ``(result, stage_log)``."""
    x = np.asarray(x0, dtype=float)
    stages = []
    res = None
    for s_max in opts.slack_schedule:
        bounds = _slack_bounds(problem, s_max)
        res = solve_nlp(problem, x, opts, phase="feasibility", bounds=bounds)
        stages.append({"slack_max": s_max, "status": res.status, "iterations": res.iterations,
                       "violation": res.max_violation})
        if res.status != FEASIBLE:
            return res, stages
        x = res.x
    return res, stages


def _polish_xi(problem, x, bounds, opts):
    """Set the epigraph variable to ``max |u|`` unless that makes the point less feasible."""
    L = problem.layout
    if L is None or L.m == 0:
        return x
    u = np.abs(x[L.all_of("u")])
    cand = x.copy()
    cand[L.xi] = min(max(float(u.max(initial=0.0)), bounds[0][L.xi]), bounds[1][L.xi])
    if _violation(problem, cand, bounds) <= max(_violation(problem, x, bounds), FEASIBILITY_MARGIN * opts.eps_c):
        return cand
    return x


def _violation(problem, x, bounds):
    c = problem.constraints(x)
    v = np.maximum(np.maximum(problem.c_lower - c, c - problem.c_upper), 0.0)
    b = np.maximum(np.maximum(bounds[0] - x, x - bounds[1]), 0.0)
    return float(max(v.max(initial=0.0), b.max(initial=0.0)))


def co_optimize(problem, x0=None, opts=None):
    """Find a feasible point, then minimize the objective from it.

    Phase one minimizes constraint violation while the complementarity slack
    bound walks down ``opts.slack_schedule``; on failure it restarts from a
    fresh random actuation draw, up to ``opts.restarts`` times. Phase two
    minimizes the objective with the slack bound held at its final value. If
    phase two ends off the feasible set, a feasibility solve from its last
    iterate is kept when it beats the best feasible point on the objective.
    The accepted point is finally polished to the phase-one feasibility margin.
    """
    opts = opts or SolverOptions()
    t0 = time.perf_counter()
    if x0 is None:
        x0 = problem.guess(opts.seed)
    attempts = []
    feas = None
    total_it = 0
    for attempt in range(opts.restarts + 1):
        start = x0 if attempt == 0 else problem.guess(opts.seed + attempt)
        res, stages = find_feasible(problem, start, opts)
        total_it += sum(st["iterations"] for st in stages)
        attempts.append({"seed": opts.seed + attempt, "stages": stages, "status": res.status})
        if res.status == FEASIBLE:
            feas = res
            break
        if res.status == INFEASIBLE and res.info.get("reason") == "empty box":
            break
    info = {"attempts": attempts}
    final_bounds = _slack_bounds(problem, opts.slack_schedule[-1])
    if feas is None:
        limit = all(a["status"] == ITERATION_LIMIT for a in attempts)
        res.status = ITERATION_LIMIT if limit else INFEASIBLE
        res.iterations = total_it
        res.wall_time = time.perf_counter() - t0
        res.kkt = kkt_residual(problem, res.x, res.multipliers, final_bounds)
        res.info = info
        return res

    phase_one_it = total_it
    cost = solve_nlp(problem, feas.x, opts, phase="cost", bounds=final_bounds)
    total_it += cost.iterations
    x = cost.x
    status = cost.status
    last = cost.info.pop("last_iterate", None)
    lost = status in (INFEASIBLE, ITERATION_LIMIT) and cost.max_violation > opts.eps_c
    if lost:
        x, status, last = feas.x, FEASIBLE, cost.x
    elif status == ITERATION_LIMIT:
        status = FEASIBLE
    restored = None
    if last is not None:
        # phase two ended off the feasible set: restore from its last iterate
        rest = solve_nlp(problem, last, opts, phase="feasibility", bounds=final_bounds)
        total_it += rest.iterations
        restored = rest.status == FEASIBLE and rest.objective < problem.objective(x)
        if restored:
            x = rest.x
    if _violation(problem, x, final_bounds) > FEASIBILITY_MARGIN * opts.eps_c:
        # tighten the accepted point to the phase-one margin
        pol = solve_nlp(problem, x, opts, phase="feasibility", bounds=final_bounds)
        total_it += pol.iterations
        info["polish_iterations"] = pol.iterations
        if pol.status == FEASIBLE:
            x = pol.x
    x = _polish_xi(problem, x, final_bounds, opts)
    lam = cost.multipliers if cost.multipliers is not None else np.zeros(problem.n_constraints)
    kkt = kkt_residual(problem, x, lam, final_bounds)
    info.update({"phase_one_iterations": phase_one_it, "phase_two_iterations": cost.iterations,
                 "phase_two_status": cost.status, **cost.info})
    if restored is not None:
        info["restoration_iterations"] = rest.iterations
        info["restored"] = restored
    return SolveResult(
        status=status,
        x=x,
        objective=problem.objective(x),
        violations=problem.family_violations(x),
        max_violation=_violation(problem, x, final_bounds),
        iterations=total_it,
        wall_time=time.perf_counter() - t0,
        multipliers=lam,
        kkt=kkt,
        history=feas.history + cost.history,
        info=info,
    )


__all__ = [
    "FEASIBLE",
    "INFEASIBLE",
    "ITERATION_LIMIT",
    "OPTIMAL",
    "SolverOptions",
    "SolveResult",
    "co_optimize",
    "find_feasible",
    "kkt_residual",
    "solve_nlp",
]
