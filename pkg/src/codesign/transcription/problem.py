"""Sparse NLP container built from per-knot constraint templates.

A :class:`ConstraintBlock` holds one template: a short list of Exprs over
*local* variables ``0..n_local-1`` together with an ``index`` table that maps
each local slot to a global decision index, one row of the table per instance
(knot, interval, ...). All instances of a template are evaluated in a single
batched call of one compiled tape. Index entries at or beyond the number of
decision variables point into the problem's constant ``aux`` vector (used for
per-instance terrain heights); those slots are never differentiated.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps

from ..diff import compile_exprs, differentiate, gradients, hessian, substitute, var

FAMILIES = ("dynamics", "contact", "task", "parametric", "design", "epigraph")


class ConstraintBlock:
    """``lower <= c(x) <= upper`` for every instance of one template."""

    def __init__(self, name, family, exprs, index, lower, upper, n_vars, row_names=None):
        if family not in FAMILIES:
            raise ValueError(f"unknown constraint family {family!r}")
        self.name = name
        self.family = family
        self.exprs = list(exprs)
        self.index = np.atleast_2d(np.asarray(index, dtype=np.int64))
        self.n_instances, self.n_local = self.index.shape
        self.rows_per_instance = len(self.exprs)
        shape = (self.n_instances, self.rows_per_instance)
        self.lower = np.broadcast_to(np.asarray(lower, dtype=float), shape).copy()
        self.upper = np.broadcast_to(np.asarray(upper, dtype=float), shape).copy()
        self.row_names = row_names
        decision = self.index < n_vars
        if not (decision.all(axis=0) | (~decision).all(axis=0)).all():
            raise ValueError(f"block {name}: a local slot mixes decision and constant entries")
        self.decision_slots = np.flatnonzero(decision[0]) if self.n_instances else np.arange(0)
        for row in self.index:
            d = row[self.decision_slots]
            if len(np.unique(d)) != len(d):
                raise ValueError(f"block {name}: repeated decision index within one instance")
        self._ev = self._jac = self._hess = None
        self._jac_struct = None

    @property
    def n_rows(self):
        return self.n_instances * self.rows_per_instance

    # -- lazily compiled pieces -----------------------------------------------
    def _jacobian_template(self):
        if self._jac is None:
            J = differentiate(self.exprs, wrt=self.decision_slots.tolist(), n_cols=self.n_local)
            self._jac = (J.rows, J.cols, compile_exprs(J.entries, self.n_local))
        return self._jac

    def _hessian_template(self):
        """Lower-triangle second derivatives of each template row."""
        if self._hess is None:
            wrt = self.decision_slots.tolist()
            rows, a, b, entries = [], [], [], []
            for r, g in enumerate(gradients(self.exprs, wrt)):
                keys = list(g)
                if not keys:
                    continue
                J = differentiate([g[k] for k in keys], wrt, self.n_local)
                for rr, cc, e in zip(J.rows.tolist(), J.cols.tolist(), J.entries):
                    i = keys[rr]
                    if i >= cc:
                        rows.append(r)
                        a.append(i)
                        b.append(cc)
                        entries.append(e)
            self._hess = (
                np.asarray(rows, dtype=np.int64),
                np.asarray(a, dtype=np.int64),
                np.asarray(b, dtype=np.int64),
                compile_exprs(entries, self.n_local),
            )
        return self._hess

    def _evaluator(self):
        if self._ev is None:
            self._ev = compile_exprs(self.exprs, self.n_local)
        return self._ev

    def _local(self, x_ext, dtype=float):
        return np.asarray(x_ext, dtype=dtype)[self.index.T]

    # -- numerics ---------------------------------------------------------------
    def evaluate(self, x_ext, dtype=float):
        """Row values, instance-major."""
        if self.n_rows == 0:
            return np.zeros(0)
        vals = self._evaluator()(self._local(x_ext, dtype), dtype=dtype)
        return vals.T.reshape(-1)

    def jacobian_structure(self):
        if self._jac_struct is None:
            r, c, _ = self._jacobian_template()
            inst = np.arange(self.n_instances)[:, None]
            rows = (inst * self.rows_per_instance + r[None, :]).reshape(-1)
            cols = self.index[:, c].reshape(-1) if len(c) else np.zeros(0, np.int64)
            self._jac_struct = (rows, cols)
        return self._jac_struct

    def jacobian_values(self, x_ext):
        r, c, ev = self._jacobian_template()
        if len(r) == 0:
            return np.zeros(0)
        return ev(self._local(x_ext)).T.reshape(-1)

    def hessian_triplets(self, x_ext, weights):
        """Triplets of sum_r weights[r] * d2 c_r / dx2 (both triangles)."""
        r, a, b, ev = self._hessian_template()
        if len(r) == 0:
            return np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0)
        vals = ev(self._local(x_ext))  # (nH, N)
        w = np.asarray(weights, dtype=float).reshape(self.n_instances, self.rows_per_instance).T
        vals = vals * w[r]
        ia = self.index[:, a].T
        ib = self.index[:, b].T
        off = a != b
        rows = np.concatenate([ia.reshape(-1), ib[off].reshape(-1)])
        cols = np.concatenate([ib.reshape(-1), ia[off].reshape(-1)])
        data = np.concatenate([vals.reshape(-1), vals[off].reshape(-1)])
        return rows, cols, data


@dataclass
class NlpProblem:
    """``min f(x)`` subject to ``cl <= c(x) <= cu`` and ``xl <= x <= xu``."""

    layout: object
    x_lower: np.ndarray
    x_upper: np.ndarray
    blocks: list
    objective_expr: object
    aux: np.ndarray = field(default_factory=lambda: np.zeros(0))
    guess: object = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.n_vars = int(len(self.x_lower))
        self.offsets = np.cumsum([0] + [b.n_rows for b in self.blocks])
        self.n_constraints = int(self.offsets[-1])
        self.c_lower = (
            np.concatenate([b.lower.reshape(-1) for b in self.blocks]) if self.blocks else np.zeros(0)
        )
        self.c_upper = (
            np.concatenate([b.upper.reshape(-1) for b in self.blocks]) if self.blocks else np.zeros(0)
        )
        self.row_family = np.empty(self.n_constraints, dtype=object)
        for b, s in zip(self.blocks, self.offsets):
            self.row_family[s : s + b.n_rows] = b.family
        self._obj = None
        self._jac_struct = None

    @classmethod
    def from_exprs(cls, n_vars, objective, constraints=(), lower=-np.inf, upper=np.inf, x_lower=None, x_upper=None,
                   family="task"):
        """A generic NLP in ``n_vars`` variables from plain Exprs (single constraint block)."""
        xl = np.full(n_vars, -np.inf) if x_lower is None else np.asarray(x_lower, dtype=float).copy()
        xu = np.full(n_vars, np.inf) if x_upper is None else np.asarray(x_upper, dtype=float).copy()
        blocks = []
        if len(constraints):
            blocks.append(ConstraintBlock("constraints", family, constraints, [np.arange(n_vars)], lower, upper, n_vars))
        return cls(layout=None, x_lower=xl, x_upper=xu, blocks=blocks, objective_expr=objective)

    # -- helpers ----------------------------------------------------------------
    def extend(self, x, dtype=float):
        x = np.asarray(x, dtype=dtype)
        if x.shape[0] != self.n_vars:
            raise ValueError(f"decision vector has {x.shape[0]} entries, expected {self.n_vars}")
        return np.concatenate([x, self.aux.astype(dtype)]) if len(self.aux) else x

    def block(self, name):
        for b in self.blocks:
            if b.name == name:
                return b
        raise KeyError(name)

    def block_rows(self, name):
        for b, s in zip(self.blocks, self.offsets):
            if b.name == name:
                return np.arange(s, s + b.n_rows)
        raise KeyError(name)

    # -- objective --------------------------------------------------------------
    def _objective(self):
        if self._obj is None:
            f = self.objective_expr
            grad = differentiate([f], n_cols=self.n_vars)
            H = hessian(f, n_cols=self.n_vars)
            self._obj = (
                compile_exprs([f], self.n_vars),
                grad.cols,
                compile_exprs(grad.entries, self.n_vars),
                H.rows,
                H.cols,
                compile_exprs(H.entries, self.n_vars),
            )
        return self._obj

    def objective(self, x):
        return float(self._objective()[0](np.asarray(x, dtype=float))[0])

    def gradient(self, x):
        _, cols, ev, *_ = self._objective()
        g = np.zeros(self.n_vars)
        if len(cols):
            np.add.at(g, cols, ev(np.asarray(x, dtype=float)))
        return g

    def objective_hessian(self, x):
        *_, rows, cols, ev = self._objective()
        vals = ev(np.asarray(x, dtype=float)) if len(rows) else np.zeros(0)
        return sps.csr_matrix((vals, (rows, cols)), shape=(self.n_vars, self.n_vars))

    # -- constraints ------------------------------------------------------------
    def constraints(self, x, dtype=float):
        xe = self.extend(x, dtype)
        if not self.blocks:
            return np.zeros(0, dtype=dtype)
        return np.concatenate([b.evaluate(xe, dtype) for b in self.blocks])

    def jacobian_structure(self):
        if self._jac_struct is None:
            rows, cols = [], []
            for b, s in zip(self.blocks, self.offsets):
                r, c = b.jacobian_structure()
                rows.append(r + s)
                cols.append(c)
            self._jac_struct = (
                np.concatenate(rows) if rows else np.zeros(0, np.int64),
                np.concatenate(cols) if cols else np.zeros(0, np.int64),
            )
        return self._jac_struct

    def jacobian(self, x):
        """Sparse constraint Jacobian (CSR, n_constraints x n_vars)."""
        xe = self.extend(x)
        rows, cols = self.jacobian_structure()
        vals = (
            np.concatenate([b.jacobian_values(xe) for b in self.blocks]) if self.blocks else np.zeros(0)
        )
        return sps.csr_matrix((vals, (rows, cols)), shape=(self.n_constraints, self.n_vars))

    def constraint_hessian(self, x, weights):
        """Sparse sum_i weights[i] * Hessian(c_i)."""
        xe = self.extend(x)
        rows, cols, data = [], [], []
        for b, s in zip(self.blocks, self.offsets):
            w = weights[s : s + b.n_rows]
            if not np.any(w):
                continue
            r, c, d = b.hessian_triplets(xe, w)
            rows.append(r)
            cols.append(c)
            data.append(d)
        if not rows:
            return sps.csr_matrix((self.n_vars, self.n_vars))
        return sps.csr_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.n_vars, self.n_vars),
        )

    def constraint_violation(self, x, c=None):
        """Per-row distance of c(x) outside [cl, cu]."""
        c = self.constraints(x) if c is None else c
        return np.maximum(np.maximum(self.c_lower - c, c - self.c_upper), 0.0)

    def bound_violation(self, x):
        x = np.asarray(x, dtype=float)
        return np.maximum(np.maximum(self.x_lower - x, x - self.x_upper), 0.0)

    def max_violation(self, x):
        v = self.constraint_violation(x)
        b = self.bound_violation(x)
        return float(max(v.max(initial=0.0), b.max(initial=0.0)))

    def family_violations(self, x):
        """Max violation per constraint family, with variable bounds folded in."""
        v = self.constraint_violation(x)
        out = {}
        for fam in FAMILIES:
            mask = self.row_family == fam
            out[fam] = float(v[mask].max(initial=0.0))
        bv = self.bound_violation(x)
        for fam, idx in self.bound_families().items():
            if len(idx):
                out[fam] = max(out[fam], float(bv[idx].max()))
        return out

    def bound_families(self):
        L = self.layout
        if L is None:
            return {}
        return {
            "parametric": L.all_of("rho"),
            "epigraph": np.concatenate([L.all_of("u"), L.all_of("xi")]),
            "contact": np.concatenate([L.all_of("lam"), L.all_of("slack")]),
            "dynamics": L.all_of("dt"),
            "task": np.concatenate([L.all_of("q"), L.all_of("qd")]),
        }

    def expressions(self):
        """All constraint rows as Exprs in global variables (slow; for audits)."""
        out = []
        for b in self.blocks:
            for row in b.index:
                mapping = {}
                for slot, g in enumerate(row.tolist()):
                    mapping[slot] = var(g) if g < self.n_vars else float(self.aux[g - self.n_vars])
                out.extend(substitute(b.exprs, mapping))
        return out

    # -- summaries ----------------------------------------------------------------
    def tallies(self):
        out = {fam: 0 for fam in FAMILIES}
        for b in self.blocks:
            out[b.family] += b.n_rows
        return out

    def sparsity(self):
        rows, _ = self.jacobian_structure()
        nnz = len(rows)
        dense = self.n_constraints * self.n_vars
        return {"nnz": nnz, "density": nnz / dense if dense else 0.0}
