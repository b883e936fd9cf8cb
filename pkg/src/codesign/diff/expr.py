"""Scalar expression graphs.

Every cost and constraint of a transcribed problem is an :class:`Expr`, a node
in an immutable DAG over a dense registry of decision variables ``x[0..V)``.
Nodes are hash-consed: building the same operation on the same children twice
returns the same object, so shared subexpressions are shared structurally.

Arithmetic between an ``Expr`` and a plain number yields an ``Expr``; numbers
combined with numbers stay numbers. Code written against ``+ - * /`` and the
module-level :func:`sin`, :func:`cos`, :func:`sqrt` helpers therefore runs on
floats (fast numeric path) and on expressions (graph building) unchanged.
"""

import math
import numbers
import weakref

from ..errors import NonFiniteResult, UnboundVariable

UNARY = ("neg", "sin", "cos", "sqrt", "sabs")
BINARY = ("add", "sub", "mul", "div")
#: epsilon of the smoothed absolute value sqrt(x^2 + eps^2)
SABS_EPS = 1e-9

_table = weakref.WeakValueDictionary()


class Expr:
    """A node of an expression DAG.

    ``op`` is one of ``const``, ``var``, the unary ops in :data:`UNARY`, the
    binary ops in :data:`BINARY`, or ``pow`` (integer exponent stored in
    ``value``). ``value`` holds the constant for ``const`` and the variable
    index for ``var``.
    """

    __slots__ = ("op", "args", "value", "__weakref__")
    __array_ufunc__ = None  # make numpy scalars defer to our reflected operators

    def __init__(self, op, args=(), value=None):
        self.op = op
        self.args = args
        self.value = value

    # -- operators -------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pos__(self):
        return self

    def __pow__(self, k):
        if isinstance(k, numbers.Integral) or (isinstance(k, float) and k.is_integer()):
            return ipow(self, int(k))
        raise TypeError("only integer powers are supported")

    def __bool__(self):
        raise TypeError("the truth value of an Expr is undefined")

    def __float__(self):
        if self.op == "const":
            return self.value
        raise TypeError(f"cannot convert non-constant {self.op} node to float")

    def __repr__(self):
        return f"Expr({_format(self, 6)})"

    @property
    def is_const(self):
        return self.op == "const"


def _intern(op, args, value=None):
    key = (op, value) + tuple(map(id, args))
    node = _table.get(key)
    if node is None:
        node = Expr(op, args, value)
        _table[key] = node
    return node


def _format(e, depth):
    if e.op == "const":
        return repr(e.value)
    if e.op == "var":
        return f"x{e.value}"
    if depth == 0:
        return "..."
    if e.op == "pow":
        return f"({_format(e.args[0], depth - 1)})**{e.value}"
    if e.op in UNARY:
        return f"{e.op}({_format(e.args[0], depth - 1)})"
    sym = {"add": "+", "sub": "-", "mul": "*", "div": "/"}[e.op]
    return f"({_format(e.args[0], depth - 1)} {sym} {_format(e.args[1], depth - 1)})"


# -- leaf constructors -------------------------------------------------------
def const(v):
    v = float(v)
    if not math.isfinite(v):
        raise NonFiniteResult(f"non-finite constant {v}")
    return _intern("const", (), v)


def var(index):
    index = int(index)
    if index < 0:
        raise UnboundVariable(f"negative variable index {index}")
    return _intern("var", (), index)


def variables(n, start=0):
    return [var(start + i) for i in range(n)]


ZERO = const(0.0)
ONE = const(1.0)


def as_expr(x):
    if isinstance(x, Expr):
        return x
    if isinstance(x, numbers.Real):
        return const(x)
    raise TypeError(f"cannot convert {type(x).__name__} to Expr")


def constant_value(x):
    """The numeric value of ``x`` if it is a number or constant node, else None."""
    if isinstance(x, Expr):
        return x.value if x.op == "const" else None
    if isinstance(x, numbers.Real):
        return float(x)
    return None


def is_zero(x):
    return constant_value(x) == 0.0


# -- simplifying operation constructors -------------------------------------
def add(a, b):
    ca, cb = constant_value(a), constant_value(b)
    if ca is not None and cb is not None:
        return const(ca + cb)
    if ca == 0.0:
        return as_expr(b)
    if cb == 0.0:
        return as_expr(a)
    a, b = as_expr(a), as_expr(b)
    if id(b) < id(a):
        a, b = b, a
    return _intern("add", (a, b))


def sub(a, b):
    ca, cb = constant_value(a), constant_value(b)
    if ca is not None and cb is not None:
        return const(ca - cb)
    if cb == 0.0:
        return as_expr(a)
    if ca == 0.0:
        return neg(b)
    return _intern("sub", (as_expr(a), as_expr(b)))


def mul(a, b):
    ca, cb = constant_value(a), constant_value(b)
    if ca is not None and cb is not None:
        return const(ca * cb)
    if ca == 0.0 or cb == 0.0:
        return ZERO
    if ca == 1.0:
        return as_expr(b)
    if cb == 1.0:
        return as_expr(a)
    if ca == -1.0:
        return neg(b)
    if cb == -1.0:
        return neg(a)
    a, b = as_expr(a), as_expr(b)
    if id(b) < id(a):
        a, b = b, a
    return _intern("mul", (a, b))


def div(a, b):
    ca, cb = constant_value(a), constant_value(b)
    if cb == 0.0:
        raise NonFiniteResult("division by a literal zero")
    if ca is not None and cb is not None:
        return const(ca / cb)
    if ca == 0.0:
        return ZERO
    if cb == 1.0:
        return as_expr(a)
    return _intern("div", (as_expr(a), as_expr(b)))


def neg(a):
    ca = constant_value(a)
    if ca is not None:
        return const(-ca)
    if a.op == "neg":
        return a.args[0]
    return _intern("neg", (a,))


def ipow(a, k):
    k = int(k)
    if k == 0:
        return ONE
    if k == 1:
        return as_expr(a)
    ca = constant_value(a)
    if ca is not None:
        return const(_pow(ca, k))
    return _intern("pow", (as_expr(a),), k)


def _unary(op, fn, a):
    ca = constant_value(a)
    if ca is not None:
        return const(fn(ca))
    return _intern(op, (a,))


# -- generic math: numbers in, numbers out; Exprs in, Exprs out --------------
def sin(x):
    if isinstance(x, Expr):
        return _unary("sin", math.sin, x)
    return math.sin(x)


def cos(x):
    if isinstance(x, Expr):
        return _unary("cos", math.cos, x)
    return math.cos(x)


def sqrt(x):
    if isinstance(x, Expr):
        return _unary("sqrt", _sqrt, x)
    return _sqrt(x)


def sabs(x):
    """Smoothed absolute value ``sqrt(x*x + eps*eps)``."""
    if isinstance(x, Expr):
        return _unary("sabs", _sabs, x)
    return _sabs(x)


def _sqrt(v):
    if v < 0.0:
        raise NonFiniteResult(f"sqrt of negative value {v}")
    return math.sqrt(v)


def _sabs(v):
    return math.sqrt(v * v + SABS_EPS * SABS_EPS)


def _pow(v, k):
    try:
        r = v**k
    except ZeroDivisionError:
        raise NonFiniteResult("zero raised to a negative power") from None
    return float(r)


# -- graph traversal ---------------------------------------------------------
def topological_order(roots):
    """Unique nodes reachable from ``roots``, children before parents."""
    order = []
    seen = set()
    for root in roots:
        if not isinstance(root, Expr) or id(root) in seen:
            continue
        stack = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for child in node.args:
                if id(child) not in seen:
                    stack.append((child, False))
    return order


def free_variables(exprs):
    """Sorted variable indices referenced by ``exprs``."""
    return sorted({n.value for n in topological_order(exprs) if n.op == "var"})


def node_count(exprs):
    return len(topological_order(exprs))


def substitute(exprs, mapping):
    """Rebuild ``exprs`` with each variable ``i`` replaced by ``mapping[i]``.

    ``mapping`` is a sequence or dict of Exprs or numbers; variables it does not
    cover are kept. Constants fold through the simplifying constructors.
    """
    get = mapping.get if isinstance(mapping, dict) else (
        lambda i, default: mapping[i] if i < len(mapping) else default
    )
    memo = {}
    for node in topological_order(exprs):
        op = node.op
        if op == "const":
            out = node
        elif op == "var":
            out = get(node.value, node)
        else:
            a = [memo[id(c)] for c in node.args]
            if op == "pow":
                out = ipow(a[0], node.value)
            elif op == "neg":
                out = neg(a[0])
            elif op in ("sin", "cos", "sqrt", "sabs"):
                out = {"sin": sin, "cos": cos, "sqrt": sqrt, "sabs": sabs}[op](as_expr(a[0]))
            else:
                out = {"add": add, "sub": sub, "mul": mul, "div": div}[op](a[0], a[1])
        memo[id(node)] = out
    return [memo[id(e)] if isinstance(e, Expr) else e for e in exprs]


_UNARY_FN = {
    "neg": lambda v: -v,
    "sin": math.sin,
    "cos": math.cos,
    "sqrt": _sqrt,
    "sabs": _sabs,
}


def _binary(op, a, b):
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if b == 0.0:
        raise NonFiniteResult("division by zero")
    return a / b


def evaluate(exprs, point):
    """Evaluate ``exprs`` at ``point`` node by node.

    This is the reference evaluator: plain Python floats, one node at a time,
    shared subgraphs evaluated once per call. Accepts bare numbers among
    ``exprs``. Raises :class:`UnboundVariable` for indices past ``len(point)``
    and :class:`NonFiniteResult` on any non-finite intermediate.
    """
    point = [float(v) for v in point]
    n = len(point)
    memo = {}
    for node in topological_order(exprs):
        op = node.op
        if op == "const":
            v = node.value
        elif op == "var":
            if node.value >= n:
                raise UnboundVariable(f"variable x{node.value} not bound (point has {n} entries)")
            v = point[node.value]
        elif op == "pow":
            v = _pow(memo[id(node.args[0])], node.value)
        elif op in _UNARY_FN:
            v = _UNARY_FN[op](memo[id(node.args[0])])
        else:
            v = _binary(op, memo[id(node.args[0])], memo[id(node.args[1])])
        if not math.isfinite(v):
            raise NonFiniteResult(f"{op} produced {v}")
        memo[id(node)] = v
    out = []
    for e in exprs:
        if isinstance(e, Expr):
            out.append(memo[id(e)])
        else:
            out.append(float(e))
    return out
