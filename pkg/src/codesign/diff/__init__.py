"""Expression graphs with exact sparse derivatives and compiled evaluation."""

from .expr import (
    SABS_EPS,
    Expr,
    as_expr,
    const,
    constant_value,
    cos,
    evaluate,
    free_variables,
    ipow,
    is_zero,
    node_count,
    sabs,
    sin,
    sqrt,
    substitute,
    topological_order,
    var,
    variables,
)
from .jacobian import SparseJacobian, differentiate, gradients, hessian
from .tape import CompiledEvaluator, compile_exprs

compile = compile_exprs  # noqa: A001  -- mirrors the operation name

__all__ = [
    "SABS_EPS",
    "CompiledEvaluator",
    "Expr",
    "SparseJacobian",
    "as_expr",
    "compile",
    "compile_exprs",
    "const",
    "constant_value",
    "cos",
    "differentiate",
    "evaluate",
    "free_variables",
    "gradients",
    "hessian",
    "ipow",
    "is_zero",
    "node_count",
    "sabs",
    "sin",
    "sqrt",
    "substitute",
    "topological_order",
    "var",
    "variables",
]
