"""Compilation of expression lists into a level-scheduled evaluation tape.

The tape is the flattened, deduplicated node list in topological order. For
execution, nodes at the same depth with the same operation are grouped into a
single vectorized numpy call writing a contiguous slice of the value buffer,
so the Python-level cost scales with graph depth rather than node count.
Inputs may carry a trailing batch axis to evaluate many points at once.
"""

import numbers

import numpy as np

from ..errors import NonFiniteResult, UnboundVariable
from .expr import SABS_EPS, Expr, topological_order

_COMMUTATIVE = ("add", "mul")


def _sabs(a):
    return np.sqrt(a * a + a.dtype.type(SABS_EPS) * a.dtype.type(SABS_EPS))


_UNARY = {
    "neg": np.negative,
    "sin": np.sin,
    "cos": np.cos,
    "sqrt": np.sqrt,
}
_BINARY = {
    "add": np.add,
    "sub": np.subtract,
    "mul": np.multiply,
    "div": np.divide,
}


class CompiledEvaluator:
    """Fast evaluator for a fixed list of expressions.

    Attributes
    ----------
    tape : list of tuple
        ``(op, out_slot, arg_slots, value)`` per distinct node, children first.
    n_inputs : int
        Minimum length of the input vector (largest variable index + 1).
    n_outputs : int
    """

    def __init__(self, exprs, n_inputs=None):
        exprs = list(exprs)
        self.n_outputs = len(exprs)
        canon = {}  # structural key -> canonical index
        node_of = {}  # id(Expr) -> canonical index
        ops, values, args, levels = [], [], [], []
        for node in topological_order(exprs):
            if node.op == "const":
                key = ("const", node.value)
            elif node.op == "var":
                key = ("var", node.value)
            else:
                child = tuple(node_of[id(c)] for c in node.args)
                if node.op in _COMMUTATIVE:
                    child = tuple(sorted(child))
                key = (node.op, node.value) + child
            idx = canon.get(key)
            if idx is None:
                idx = len(ops)
                canon[key] = idx
                ops.append(node.op)
                values.append(node.value)
                if node.op in ("const", "var"):
                    args.append(())
                    levels.append(0)
                else:
                    args.append(key[2:])
                    levels.append(1 + max(levels[c] for c in key[2:]))
            node_of[id(node)] = idx

        out_canon = []
        for e in exprs:
            if isinstance(e, Expr):
                out_canon.append(node_of[id(e)])
            elif isinstance(e, numbers.Real):
                key = ("const", float(e))
                if key not in canon:
                    canon[key] = len(ops)
                    ops.append("const")
                    values.append(float(e))
                    args.append(())
                    levels.append(0)
                out_canon.append(canon[key])
            else:
                raise TypeError(f"cannot compile {type(e).__name__}")

        # slot assignment: constants, variables, then one contiguous run per group
        consts = [i for i, op in enumerate(ops) if op == "const"]
        varis = [i for i, op in enumerate(ops) if op == "var"]
        groups = {}
        for i, op in enumerate(ops):
            if levels[i] > 0:
                groups.setdefault((levels[i], op, values[i]), []).append(i)
        slot = np.empty(len(ops), dtype=np.int64)
        pos = 0
        for i in consts + varis:
            slot[i] = pos
            pos += 1
        ordered_groups = sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2] or 0))
        self._groups = []
        for (_, op, value), members in ordered_groups:
            start = pos
            for i in members:
                slot[i] = pos
                pos += 1
            a = np.array([slot[args[i][0]] for i in members], dtype=np.int64)
            b = (
                np.array([slot[args[i][1]] for i in members], dtype=np.int64)
                if len(args[members[0]]) == 2
                else None
            )
            self._groups.append((op, value, start, pos, a, b))

        self.n_slots = pos
        self._const_vals = np.array([values[i] for i in consts], dtype=float)
        self._n_const = len(consts)
        self._var_index = np.array([values[i] for i in varis], dtype=np.int64)
        max_var = int(self._var_index.max()) + 1 if len(varis) else 0
        self.n_inputs = max(max_var, n_inputs or 0)
        self._out = slot[np.array(out_canon, dtype=np.int64)] if out_canon else np.zeros(0, np.int64)

        order = sorted(range(len(ops)), key=lambda i: slot[i])
        self.tape = [
            (ops[i], int(slot[i]), tuple(int(slot[c]) for c in args[i]), values[i]) for i in order
        ]

    def count(self, op):
        """Number of tape instructions performing ``op``."""
        return sum(1 for ins in self.tape if ins[0] == op)

    def __call__(self, x, check=True, dtype=float):
        """Evaluate at ``x`` of shape ``(V,)`` or ``(V, batch)``.

        ``dtype=np.longdouble`` runs the same tape in extended precision.
        """
        x = np.asarray(x, dtype=dtype)
        if x.shape[0] < self.n_inputs:
            raise UnboundVariable(
                f"input has {x.shape[0]} entries, expressions need {self.n_inputs}"
            )
        tail = x.shape[1:]
        buf = np.empty((self.n_slots,) + tail, dtype=dtype)
        nc = self._n_const
        if tail:
            buf[:nc] = self._const_vals[:, None]
        else:
            buf[:nc] = self._const_vals
        buf[nc : nc + len(self._var_index)] = x[self._var_index]
        with np.errstate(all="ignore"):
            for op, value, s, e, a, b in self._groups:
                out = buf[s:e]
                if b is not None:
                    _BINARY[op](buf[a], buf[b], out=out)
                elif op == "pow":
                    np.power(buf[a], float(value), out=out)
                elif op == "sabs":
                    out[...] = _sabs(buf[a])
                else:
                    _UNARY[op](buf[a], out=out)
        if check and not np.isfinite(buf).all():
            bad = int(np.argmin(np.isfinite(buf).reshape(self.n_slots, -1).all(axis=1)))
            raise NonFiniteResult(f"non-finite value in tape slot {bad} ({self.tape[bad][0]})")
        return buf[self._out]


def compile_exprs(exprs, n_inputs=None):
    return CompiledEvaluator(exprs, n_inputs)
