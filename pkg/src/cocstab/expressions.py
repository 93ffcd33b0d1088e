"""Closed-form matrix entries from a small whitelisted expression grammar.

Entries are functions of the base coordinate ``q`` built from numbers, pi,
``+ - * / **``, and calls to sin/cos/exp.  The expression is parsed with the
ast module and anything outside that whitelist is rejected, so config files
cannot smuggle in arbitrary code.
"""

from __future__ import annotations

import ast
import math
from typing import Callable

import numpy as np

_FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
_CONSTANTS = {"pi": math.pi}
_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}


class ExpressionError(ValueError):
    pass


def _validate(node: ast.AST, source: str) -> None:
    if isinstance(node, ast.Expression):
        _validate(node.body, source)
    elif isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        _validate(node.left, source)
        _validate(node.right, source)
    elif isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        _validate(node.operand, source)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
            raise ExpressionError(f"only sin/cos/exp calls are allowed in {source!r}")
        if len(node.args) != 1 or node.keywords:
            raise ExpressionError(f"calls take exactly one positional argument in {source!r}")
        _validate(node.args[0], source)
    elif isinstance(node, ast.Name):
        if node.id != "q" and node.id not in _CONSTANTS:
            raise ExpressionError(f"unknown name {node.id!r} in {source!r}; only q and pi are allowed")
    elif isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)):
            raise ExpressionError(f"only numeric constants are allowed in {source!r}")
    else:
        raise ExpressionError(f"disallowed syntax {type(node).__name__} in {source!r}")


def compile_entry(source: str) -> Callable[[np.ndarray | float], np.ndarray | float]:
    """Compile an entry expression into a vectorized function of q."""
    try:
        tree = ast.parse(source, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {source!r}: {exc.msg}") from None
    _validate(tree, source)

    def evaluate(node: ast.AST, q):
        if isinstance(node, ast.Expression):
            return evaluate(node.body, q)
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](evaluate(node.left, q), evaluate(node.right, q))
        if isinstance(node, ast.UnaryOp):
            value = evaluate(node.operand, q)
            return -value if isinstance(node.op, ast.USub) else +value
        if isinstance(node, ast.Call):
            return _FUNCTIONS[node.func.id](evaluate(node.args[0], q))  # type: ignore[attr-defined]
        if isinstance(node, ast.Name):
            return q if node.id == "q" else _CONSTANTS[node.id]
        if isinstance(node, ast.Constant):
            return node.value
        raise AssertionError("unreachable after validation")

    return lambda q: evaluate(tree, q)
