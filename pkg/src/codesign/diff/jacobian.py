"""Exact symbolic differentiation with structural sparsity."""

from dataclasses import dataclass, field

import numpy as np

from .expr import ONE, Expr, add, cos, div, evaluate, ipow, mul, neg, sin, topological_order


@dataclass(frozen=True)
class SparseJacobian:
    """Triplet form of d(exprs)/dx; absent entries are identically zero."""

    n_rows: int
    n_cols: int
    rows: np.ndarray
    cols: np.ndarray
    entries: tuple = field(repr=False)

    @property
    def nnz(self):
        return len(self.entries)

    def triplets(self):
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.entries))

    def to_dense(self, point):
        """Reference evaluation into a dense array (slow path, for checks)."""
        out = np.zeros((self.n_rows, self.n_cols))
        if self.nnz:
            out[self.rows, self.cols] = evaluate(list(self.entries), point)
        return out


def _scale(grad, factor):
    return {k: mul(g, factor) for k, g in grad.items()}


def _combine(ga, fa, gb, fb):
    """fa*ga + fb*gb over the union of keys (fa/fb None means 1)."""
    out = {}
    for k, g in ga.items():
        out[k] = g if fa is None else mul(g, fa)
    for k, g in gb.items():
        term = g if fb is None else mul(g, fb)
        out[k] = add(out[k], term) if k in out else term
    return {k: v for k, v in out.items() if not (v.op == "const" and v.value == 0.0)}


def gradients(exprs, wrt=None):
    """Forward-mode symbolic gradients: one sparse dict {var: Expr} per expr."""
    wrt = None if wrt is None else set(int(i) for i in wrt)
    order = topological_order(exprs)
    wanted = {id(e) for e in exprs if isinstance(e, Expr)}
    parents = {}
    for node in order:
        for child in node.args:
            parents[id(child)] = parents.get(id(child), 0) + 1
    grads = {}
    for node in order:
        op = node.op
        if op == "const":
            g = {}
        elif op == "var":
            g = {node.value: ONE} if wrt is None or node.value in wrt else {}
        else:
            a = node.args[0]
            ga = grads[id(a)]
            if op == "neg":
                g = {k: neg(v) for k, v in ga.items()}
            elif op == "sin":
                g = _scale(ga, cos(a)) if ga else {}
            elif op == "cos":
                g = _scale(ga, neg(sin(a))) if ga else {}
            elif op == "sqrt":
                g = _scale(ga, div(0.5, node)) if ga else {}
            elif op == "sabs":
                g = _scale(ga, div(a, node)) if ga else {}
            elif op == "pow":
                g = _scale(ga, mul(float(node.value), ipow(a, node.value - 1))) if ga else {}
            else:
                b = node.args[1]
                gb = grads[id(b)]
                if op == "add":
                    g = _combine(ga, None, gb, None)
                elif op == "sub":
                    g = _combine(ga, None, gb, -1.0)
                elif op == "mul":
                    g = _combine(ga, b if ga else None, gb, a if gb else None)
                else:  # div
                    fa = div(ONE, b) if ga else None
                    fb = neg(div(node, b)) if gb else None
                    g = _combine(ga, fa, gb, fb)
            # release child gradients nobody else needs
            for child in node.args:
                cid = id(child)
                parents[cid] -= 1
                if parents[cid] == 0 and cid not in wanted:
                    grads.pop(cid, None)
        grads[id(node)] = g
    return [dict(sorted(grads[id(e)].items())) if isinstance(e, Expr) else {} for e in exprs]


def differentiate(exprs, wrt=None, n_cols=None):
    """Sparse Jacobian of ``exprs`` with respect to the variables in ``wrt``.

    ``wrt=None`` differentiates with respect to every variable that appears.
    Products with literal zeros are pruned during construction, so an entry
    missing from the result is a structural zero.
    """
    grads = gradients(exprs, wrt)
    rows, cols, entries = [], [], []
    max_col = -1
    for r, g in enumerate(grads):
        for c, e in g.items():
            rows.append(r)
            cols.append(c)
            entries.append(e)
            max_col = max(max_col, c)
    if n_cols is None:
        n_cols = max(max_col + 1, max(wrt) + 1 if wrt else 0)
    return SparseJacobian(
        len(exprs),
        int(n_cols),
        np.asarray(rows, dtype=np.int64),
        np.asarray(cols, dtype=np.int64),
        tuple(entries),
    )


def hessian(expr, wrt=None, n_cols=None):
    """Sparse lower-and-upper Hessian of a scalar expression."""
    grad = gradients([expr], wrt)[0]
    keys = list(grad)
    jac = differentiate([grad[k] for k in keys], wrt, n_cols)
    rows = np.asarray([keys[r] for r in jac.rows], dtype=np.int64)
    n = n_cols
    if n is None:
        n = int(max(rows.max(initial=-1), jac.cols.max(initial=-1))) + 1
    return SparseJacobian(n, n, rows, jac.cols, jac.entries)
