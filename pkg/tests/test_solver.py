import numpy as np
import pytest
from scipy.optimize import minimize

from codesign.diff import var, variables
from codesign.solver import (
    FEASIBLE,
    INFEASIBLE,
    OPTIMAL,
    SolverOptions,
    co_optimize,
    kkt_residual,
    solve_nlp,
)
from codesign.transcription import NlpProblem

INF = np.inf
# oracle comparisons ask for tight stationarity; the default suits large problems
TIGHT = SolverOptions(eps_c=1e-10, eps_o=1e-9)


def qp_bound_problem():
    x = var(0)
    return NlpProblem.from_exprs(1, (x - 3) * (x - 3), [x], lower=5.0, upper=INF)


# -- solve_nlp examples ---------------------------------------------------------------
def test_convex_qp_active_lower_bound():
    res = solve_nlp(qp_bound_problem(), np.array([0.0]), TIGHT)
    assert res.status == OPTIMAL
    assert res.x[0] == pytest.approx(5.0, abs=1e-6)
    # multiplier of the active row: 2 (x - 3) = 4
    assert res.multipliers[0] == pytest.approx(4.0, rel=1e-4)


def test_equality_constrained_quadratic():
    x, y = variables(2)
    prob = NlpProblem.from_exprs(2, x * x + y * y, [x + y], lower=2.0, upper=2.0)
    res = solve_nlp(prob, np.array([3.0, -1.0]), TIGHT)
    assert res.status == OPTIMAL
    assert np.allclose(res.x, [1.0, 1.0], atol=1e-6)


def test_variable_bounds_respected():
    x, y = variables(2)
    prob = NlpProblem.from_exprs(2, (x - 2) * (x - 2) + (y + 1) * (y + 1), x_lower=[-1, 0], x_upper=[1, 1])
    res = solve_nlp(prob, np.array([0.0, 0.5]))
    assert res.status == OPTIMAL
    assert np.allclose(res.x, [1.0, 0.0], atol=1e-8)


def complementarity_toy():
    """x + y = 1, x, y >= 0, x*y <= s with the slack s itself a bounded variable."""
    x, y, s = variables(3)
    prob = NlpProblem.from_exprs(
        3, 0.0, [x + y, x * y - s], lower=[1.0, -INF], upper=[1.0, 0.0], x_lower=[0, 0, 0], x_upper=[INF, INF, 1e-2]
    )
    prob.meta["slack_indices"] = np.array([2])
    return prob


@pytest.mark.parametrize("start", [[0.5, 0.5, 1e-2], [0.3, 0.6, 0.0], [0.9, 0.2, 0.005]])
def test_complementarity_toy_lands_on_an_axis(start):
    opts = SolverOptions(slack_schedule=(1e-2, 1e-4, 1e-6, 1e-8), restarts=0)
    res = co_optimize(complementarity_toy(), np.array(start), opts)
    assert res.status in (OPTIMAL, FEASIBLE)
    x, y, _ = res.x
    assert x * y <= 1e-6
    # oracle: the only points with x + y = 1 and xy = 0 are the two vertices
    vertex = min([np.array([1.0, 0.0]), np.array([0.0, 1.0])], key=lambda v: np.abs(res.x[:2] - v).max())
    assert np.abs(res.x[:2] - vertex).max() <= 1e-6


def _random_qp(rng, n=5, m=4):
    A = rng.normal(size=(n, n))
    P = A @ A.T + 0.5 * np.eye(n)
    q = rng.normal(size=n)
    G = rng.normal(size=(m, n))
    h = G @ rng.normal(size=n) - rng.uniform(0, 1, m)  # a known interior point exists
    return P, q, G, h


def _qp_as_nlp(P, q, G, h):
    xs = variables(len(q))
    f = 0.0
    for i in range(len(q)):
        f = f + q[i] * xs[i]
        for j in range(len(q)):
            if P[i, j]:
                f = f + 0.5 * P[i, j] * xs[i] * xs[j]
    rows = []
    for gi in G:
        r = 0.0
        for j, v in enumerate(gi):
            r = r + v * xs[j]
        rows.append(r)
    return NlpProblem.from_exprs(len(q), f, rows, lower=h, upper=INF)


@pytest.mark.parametrize("seed", range(20))
def test_random_convex_qp_matches_dense_oracle(seed):
    rng = np.random.default_rng(seed)
    P, q, G, h = _random_qp(rng)
    oracle = minimize(
        lambda x: 0.5 * x @ P @ x + q @ x,
        np.zeros(len(q)),
        jac=lambda x: P @ x + q,
        constraints=[{"type": "ineq", "fun": lambda x: G @ x - h, "jac": lambda x: G}],
        method="SLSQP",
        options={"ftol": 1e-14, "maxiter": 500},
    )
    assert oracle.success
    res = solve_nlp(_qp_as_nlp(P, q, G, h), np.zeros(len(q)), TIGHT)
    assert res.status == OPTIMAL
    assert np.allclose(res.x, oracle.x, atol=1e-6)
    assert res.objective == pytest.approx(oracle.fun, abs=1e-8 + 1e-8 * abs(oracle.fun))


# -- phases, failure modes, determinism ---------------------------------------------------
def test_empty_box_is_infeasible():
    x = var(0)
    prob = NlpProblem.from_exprs(1, x * x, x_lower=[1.0], x_upper=[0.0])
    assert solve_nlp(prob, np.array([0.5])).status == INFEASIBLE
    assert co_optimize(prob, np.array([0.5]), SolverOptions(restarts=3)).status == INFEASIBLE


def test_contradictory_constraints_are_infeasible():
    x = var(0)
    prob = NlpProblem.from_exprs(1, x * x, [x, x], lower=[1.0, -INF], upper=[INF, 0.0])
    res = solve_nlp(prob, np.array([0.3]), phase="feasibility")
    assert res.status == INFEASIBLE
    assert res.max_violation > 0.4


def test_feasible_start_needs_few_phase_one_iterations():
    x, y = variables(2)
    prob = NlpProblem.from_exprs(2, (x - 2) * (x - 2) + y * y, [x + y], lower=1.0, upper=INF)
    res = co_optimize(prob, np.array([1.0, 1.0]), SolverOptions(restarts=0, eps_o=1e-9))
    assert res.info["phase_one_iterations"] <= 3
    assert res.status == OPTIMAL
    assert np.allclose(res.x, [2.0, 0.0], atol=1e-6)


def test_feasibility_phase_ignores_objective():
    x = var(0)
    prob = NlpProblem.from_exprs(1, -1e6 * x, [x], lower=1.0, upper=2.0)
    res = solve_nlp(prob, np.array([5.0]), phase="feasibility")
    assert res.status == FEASIBLE
    assert 1.0 - 1e-6 <= res.x[0] <= 2.0 + 1e-6
    assert res.x[0] > 1.5  # moved only as far as needed, not toward the objective's preference


def test_merit_monotone_within_each_inner_loop():
    rng = np.random.default_rng(3)
    prob = _qp_as_nlp(*_random_qp(rng))
    res = solve_nlp(prob, np.zeros(prob.n_vars))
    assert res.history
    for a, b in zip(res.history, res.history[1:]):
        if a[0] == b[0]:
            assert b[2] < a[2]


def test_reported_violation_within_tolerance_on_success():
    rng = np.random.default_rng(4)
    prob = _qp_as_nlp(*_random_qp(rng))
    opts = SolverOptions()
    res = solve_nlp(prob, np.zeros(prob.n_vars), opts)
    assert res.success and res.max_violation <= opts.eps_c
    assert prob.max_violation(res.x) <= opts.eps_c


def test_determinism():
    rng = np.random.default_rng(5)
    prob = _qp_as_nlp(*_random_qp(rng))
    a = solve_nlp(prob, np.ones(prob.n_vars))
    b = solve_nlp(prob, np.ones(prob.n_vars))
    assert np.array_equal(a.x, b.x)


def test_bad_start_dimension():
    with pytest.raises(ValueError):
        solve_nlp(qp_bound_problem(), np.zeros(2))


def test_options_validation():
    with pytest.raises(ValueError):
        SolverOptions(slack_schedule=(1e-4, 1e-2))
    with pytest.raises(ValueError):
        SolverOptions(eps_c=0.0)
    with pytest.raises(ValueError):
        SolverOptions(hessian="bfgs")


# -- kkt residual ---------------------------------------------------------------------------
def test_kkt_stationarity_at_hand_solution():
    r = kkt_residual(qp_bound_problem(), np.array([5.0]), np.array([4.0]))
    assert r["stationarity"] == 0.0
    assert r["primal"] == 0.0 and r["dual"] == 0.0 and r["complementarity"] == 0.0


def test_kkt_unconstrained_vertex():
    x, y = variables(2)
    prob = NlpProblem.from_exprs(2, (x - 1) * (x - 1) + 2 * (y + 3) * (y + 3))
    assert kkt_residual(prob, np.array([1.0, -3.0]), np.zeros(0))["stationarity"] == 0.0


def test_kkt_primal_equals_max_violation():
    prob = qp_bound_problem()
    x = np.array([4.2])
    assert kkt_residual(prob, x, np.array([0.0]))["primal"] == pytest.approx(prob.max_violation(x))


def test_kkt_wrong_sign_multiplier_is_dual_infeasible():
    assert kkt_residual(qp_bound_problem(), np.array([5.0]), np.array([-1.0]))["dual"] == 1.0
