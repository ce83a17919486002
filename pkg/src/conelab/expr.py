"""Tiny arithmetic language for single-valued maps R -> R.

Grammar: numbers, the variable ``x``, the constants ``pi`` and ``e``,
``+ - * /``, powers (``**`` or ``^``), unary minus, and the functions
``sin``, ``cos``, ``abs`` and ``div(num, den, value)``.  ``div`` is division
guarded at removable singularities: it yields ``value`` where ``den == 0``.

>>> f = compile_expression("x*sin(div(1, x, 0))")
>>> float(f(np.array([0.0]))[0])
0.0
"""

from __future__ import annotations

import ast
import math
from typing import Callable

import numpy as np

_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}
_CONSTANTS = {"pi": math.pi, "e": math.e}


def _guarded_div(num, den, value):
    den = np.asarray(den, dtype=float)
    zero = den == 0
    return np.where(zero, value, np.asarray(num, dtype=float) / np.where(zero, 1.0, den))


_FUNCTIONS = {"sin": (np.sin, 1), "cos": (np.cos, 1), "abs": (np.abs, 1), "div": (_guarded_div, 3)}


class ExpressionError(ValueError):
    pass


def _build(node: ast.AST) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(node, ast.Expression):
        return _build(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
            and not isinstance(node.value, bool):
        value = float(node.value)
        return lambda x: np.full_like(x, value)
    if isinstance(node, ast.Name):
        if node.id == "x":
            return lambda x: x
        if node.id in _CONSTANTS:
            value = _CONSTANTS[node.id]
            return lambda x: np.full_like(x, value)
        raise ExpressionError(f"unknown name {node.id!r}")
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op = _BINOPS[type(node.op)]
        left, right = _build(node.left), _build(node.right)
        return lambda x: op(left(x), right(x))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _build(node.operand)
        if isinstance(node.op, ast.USub):
            return lambda x: -inner(x)
        return inner
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        name = node.func.id
        if name not in _FUNCTIONS or node.keywords:
            raise ExpressionError(f"unknown function {name!r}")
        fn, arity = _FUNCTIONS[name]
        if len(node.args) != arity:
            raise ExpressionError(f"{name} takes {arity} argument(s), got {len(node.args)}")
        args = [_build(a) for a in node.args]
        return lambda x: fn(*(a(x) for a in args))
    raise ExpressionError(f"unsupported syntax: {ast.dump(node)[:60]}")


def compile_expression(text: str) -> Callable[[np.ndarray], np.ndarray]:
    """Compile ``text`` into a vectorised function of ``x``.

    Evaluation raises :class:`ExpressionError` wherever the result is not
    finite (an unguarded division by zero, for instance).
    """
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
    body = _build(tree)

    def f(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            out = np.asarray(body(x), dtype=float)
        out = np.broadcast_to(out, x.shape).copy()
        bad = ~np.isfinite(out)
        if bad.any():
            where = x[bad].flat[0] if x.ndim else float(x)
            raise ExpressionError(f"{text!r} is not finite at x={where!r}")
        return out

    f.__name__ = "expression"
    f.source = text  # type: ignore[attr-defined]
    return f
