import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from codesign.diff import (
    SABS_EPS,
    compile_exprs,
    cos,
    differentiate,
    evaluate,
    hessian,
    ipow,
    node_count,
    sabs,
    sin,
    sqrt,
    var,
    variables,
)
from codesign.errors import NonFiniteResult, UnboundVariable

from conftest import problem, random_point


# -- evaluate --------------------------------------------------------------------
def test_evaluate_polynomial():
    x0 = var(0)
    assert evaluate([x0 * x0 + 3], [2.0]) == [7.0]


def test_evaluate_sin_at_zero():
    assert evaluate([sin(var(0))], [0.0]) == [0.0]


def test_evaluate_division_by_zero_raises():
    with pytest.raises(NonFiniteResult):
        evaluate([var(0) / var(1)], [1.0, 0.0])


def test_evaluate_sqrt_of_negative_raises():
    with pytest.raises(NonFiniteResult):
        evaluate([sqrt(var(0))], [-1.0])


def test_evaluate_unbound_variable():
    with pytest.raises(UnboundVariable):
        evaluate([var(0) + var(3)], [1.0, 2.0])


def test_numbers_pass_through():
    assert evaluate([2.5, var(0)], [1.0]) == [2.5, 1.0]


def test_hash_consing_shares_nodes():
    a = var(0) + var(1)
    b = var(0) + var(1)
    assert a is b
    assert node_count([a * 2.0, b * 2.0]) == node_count([a * 2.0])


def test_zero_and_one_pruning():
    x = var(0)
    assert differentiate([x * 0.0]).nnz == 0
    assert (x * 1.0) is x
    assert (x + 0.0) is x


def test_smoothed_abs():
    assert evaluate([sabs(var(0))], [-2.0])[0] == pytest.approx(2.0)
    assert evaluate([sabs(var(0))], [0.0])[0] == pytest.approx(SABS_EPS)


# -- differentiate ---------------------------------------------------------------
def test_product_rule_entry():
    x0, x1 = var(0), var(1)
    J = differentiate([x0 * x1], wrt=[0])
    assert J.rows.tolist() == [0] and J.cols.tolist() == [0]
    assert J.entries[0] is x1


def test_independent_variable_gives_structural_zero():
    J = differentiate([var(1)], wrt=[0])
    assert J.nnz == 0


def test_sin_times_x_derivative_matches_fd():
    x = var(0)
    J = differentiate([sin(x) * x])
    got = J.to_dense([1.0])[0, 0]
    h = 1e-6
    fd = (math.sin(1 + h) * (1 + h) - math.sin(1 - h) * (1 - h)) / (2 * h)
    assert got == pytest.approx(fd, rel=1e-8)
    assert got == pytest.approx(1.3818, abs=1e-4)


def test_hessian_of_quadratic_form():
    x, y = var(0), var(1)
    H = hessian(3 * x * x + 2 * x * y + y * y, n_cols=2)
    assert np.allclose(H.to_dense([0.3, -0.2]), [[6.0, 2.0], [2.0, 2.0]])


def test_integer_power_derivative():
    x = var(0)
    J = differentiate([ipow(x, 3), ipow(x, -2)])
    assert np.allclose(J.to_dense([2.0])[:, 0], [12.0, -2.0 / 8.0])


# -- compile ---------------------------------------------------------------------
def test_compile_shares_common_subexpression():
    x0, x1 = var(0), var(1)
    s = x0 + x1
    ev = compile_exprs([s, s * 2.0])
    assert ev.count("add") == 1
    assert np.allclose(ev(np.array([1.0, 2.0])), [3.0, 6.0])


def test_compile_empty():
    ev = compile_exprs([])
    assert ev.n_outputs == 0
    assert ev(np.zeros(0)).shape == (0,)


def test_compile_batched_evaluation():
    x0, x1 = var(0), var(1)
    ev = compile_exprs([x0 * x1, cos(x0)])
    pts = np.array([[0.0, 1.0, 2.0], [3.0, 4.0, 5.0]])
    out = ev(pts)
    assert np.allclose(out[0], pts[0] * pts[1])
    assert np.allclose(out[1], np.cos(pts[0]))


def test_compiled_division_by_zero_raises():
    ev = compile_exprs([var(0) / var(1)])
    with pytest.raises(NonFiniteResult):
        ev(np.array([1.0, 0.0]))


def test_compiled_hexapod_constraints_at_least_10x_faster_than_recursive():
    prob = problem("hexapod")
    exprs = prob.expressions()
    rng = np.random.default_rng(0)
    pts = np.stack([random_point(prob, rng) for _ in range(1000)], axis=1)
    t0 = time.perf_counter()
    for j in range(1000):
        prob.constraints(pts[:, j])
    t_compiled = (time.perf_counter() - t0) / 1000
    n_ref = 3
    t0 = time.perf_counter()
    for j in range(n_ref):
        ref = evaluate(exprs, pts[:, j])
    t_recursive = (time.perf_counter() - t0) / n_ref
    assert np.allclose(prob.constraints(pts[:, n_ref - 1]), ref, rtol=1e-12, atol=1e-12)
    assert t_recursive >= 10 * t_compiled


# -- properties over random expression trees ---------------------------------------
N_VARS = 4


def random_tree(rng, depth):
    """Random expression over ``N_VARS`` variables whose evaluation is always finite."""
    xs = variables(N_VARS)
    if depth == 0 or rng.random() < 0.15:
        if rng.random() < 0.8:
            return xs[int(rng.integers(N_VARS))]
        return float(rng.uniform(-2, 2))
    op = rng.choice(["add", "sub", "mul", "div", "neg", "sin", "cos", "sqrt", "pow", "sabs"])
    a = random_tree(rng, depth - 1)
    if op in ("add", "sub", "mul", "div"):
        b = random_tree(rng, depth - 1)
        if op == "add":
            return a + b
        if op == "sub":
            return a - b
        if op == "mul":
            return a * b
        return a / (1.5 + sin(b))  # denominator in [0.5, 2.5]
    if op == "neg":
        return -a
    if op == "sin":
        return sin(a)
    if op == "cos":
        return cos(a)
    if op == "sqrt":
        return sqrt(1.0 + a * a)
    if op == "sabs":
        return sabs(a)
    return ipow(sin(a) + 2.0, int(rng.choice([-2, 2, 3])))


def _central(ev, x, h):
    n = len(x)
    pts = np.repeat(x[:, None], 2 * n, axis=1)
    for i in range(n):
        pts[i, 2 * i] += h
        pts[i, 2 * i + 1] -= h
    vals = ev(pts, dtype=np.longdouble)
    return (vals[:, 0::2] - vals[:, 1::2]) / (2 * h)


def fd_jacobian(ev, x, h=1e-6):
    """Central differences at step ``h`` in extended precision, Richardson-refined.

    The extrapolation cancels the ``h**2`` truncation term, which otherwise
    dominates for deeply nested trees with large third derivatives.
    """
    x = np.asarray(x, dtype=np.longdouble)
    coarse = _central(ev, x, h)
    fine = _central(ev, x, h / 2)
    return np.asarray((4 * fine - coarse) / 3, dtype=float)


def assert_close_to_fd(J, F, rel=1e-6, abs_tol=1e-8):
    err = np.abs(J - F)
    assert np.all(err <= np.maximum(rel * np.abs(F), abs_tol)), float(err.max())


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_tree_jacobians_match_finite_differences(seed):
    rng = np.random.default_rng(seed)
    exprs = [random_tree(rng, 8) for _ in range(2)]
    ev = compile_exprs(exprs, N_VARS)
    J = differentiate(exprs, wrt=range(N_VARS), n_cols=N_VARS)
    jev = compile_exprs(J.entries, N_VARS)
    for _ in range(10):
        x = rng.uniform(-1.5, 1.5, N_VARS)
        dense = np.zeros((len(exprs), N_VARS))
        if J.nnz:
            dense[J.rows, J.cols] = jev(x)
        assert_close_to_fd(dense, fd_jacobian(ev, x))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_absent_jacobian_entries_are_zero(seed):
    rng = np.random.default_rng(seed)
    exprs = [random_tree(rng, 5) for _ in range(3)]
    ev = compile_exprs(exprs, N_VARS)
    J = differentiate(exprs, wrt=range(N_VARS), n_cols=N_VARS)
    absent = np.ones((len(exprs), N_VARS), dtype=bool)
    absent[J.rows, J.cols] = False
    x = rng.uniform(-1.5, 1.5, N_VARS)
    assert np.all(np.abs(fd_jacobian(ev, x)[absent]) <= 1e-9)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_compiled_matches_recursive_evaluation(seed):
    rng = np.random.default_rng(seed)
    exprs = [random_tree(rng, 8) for _ in range(3)]
    ev = compile_exprs(exprs, N_VARS)
    x = rng.uniform(-1.5, 1.5, N_VARS)
    ref = np.asarray(evaluate(exprs, x))
    got = ev(x)
    assert np.all(np.abs(got - ref) <= 1e-14 * np.maximum(np.abs(ref), 1.0))
