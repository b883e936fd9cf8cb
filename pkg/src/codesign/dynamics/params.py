"""Design-parameter declarations and parameter-dependent quantities."""

import ast
import math
import numbers
from dataclasses import dataclass

from ..diff import cos, sin, sqrt
from ..errors import SchemaError

_FUNCS = {"sqrt": sqrt, "sin": sin, "cos": cos}


@dataclass(frozen=True)
class Parameter:
    name: str
    lower: float
    upper: float
    initial: float
    unit: str = ""


class Quantity:
    """A scalar that is either a constant or an arithmetic formula in parameters.

    Formulas use Python syntax restricted to numbers, parameter names, ``+ - * /``,
    integer ``**``, unary minus and ``sqrt/sin/cos``::

        Quantity("-0.5 * leg_length")
    """

    __slots__ = ("source", "_tree", "names")

    def __init__(self, source):
        if isinstance(source, Quantity):
            source = source.source
        if isinstance(source, bool) or not isinstance(source, (numbers.Real, str)):
            raise SchemaError(f"expected a number or formula string, got {source!r}")
        self.source = float(source) if isinstance(source, numbers.Real) else source.strip()
        if isinstance(self.source, float):
            if not math.isfinite(self.source):
                raise SchemaError(f"non-finite constant {source!r}")
            self._tree = None
            self.names = frozenset()
        else:
            try:
                self._tree = ast.parse(self.source, mode="eval").body
            except SyntaxError as exc:
                raise SchemaError(f"bad formula {source!r}: {exc.msg}") from None
            self.names = frozenset(_check(self._tree, self.source))

    @property
    def is_constant(self):
        return self._tree is None

    def resolve(self, env):
        """Value given ``env`` mapping parameter names to numbers or Exprs."""
        if self._tree is None:
            return self.source
        return _eval(self._tree, env)

    def to_json(self):
        return self.source

    def __repr__(self):
        return f"Quantity({self.source!r})"

    def __eq__(self, other):
        return isinstance(other, Quantity) and self.source == other.source

    def __hash__(self):
        return hash(self.source)


def _check(node, src):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return set()
    if isinstance(node, ast.Name):
        return {node.id}
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        return _check(node.operand, src)
    if isinstance(node, ast.BinOp) and isinstance(node.op, (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)):
        if isinstance(node.op, ast.Pow) and not (
            isinstance(node.right, ast.Constant) and isinstance(node.right.value, int)
        ):
            raise SchemaError(f"only integer literal exponents are allowed in {src!r}")
        return _check(node.left, src) | _check(node.right, src)
    if (
        isinstance(node, ast.Call)
        and isinstance(node.func, ast.Name)
        and node.func.id in _FUNCS
        and len(node.args) == 1
        and not node.keywords
    ):
        return _check(node.args[0], src)
    raise SchemaError(f"unsupported syntax in formula {src!r}")


def _eval(node, env):
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        try:
            return env[node.id]
        except KeyError:
            raise SchemaError(f"unknown parameter {node.id!r}") from None
    if isinstance(node, ast.UnaryOp):
        v = _eval(node.operand, env)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.Call):
        return _FUNCS[node.func.id](_eval(node.args[0], env))
    a = _eval(node.left, env)
    if isinstance(node.op, ast.Pow):
        return a ** node.right.value
    b = _eval(node.right, env)
    if isinstance(node.op, ast.Add):
        return a + b
    if isinstance(node.op, ast.Sub):
        return a - b
    if isinstance(node.op, ast.Mult):
        return a * b
    return a / b


def quantities(values):
    return tuple(Quantity(v) for v in values)
