"""Tiny vectorised expression language for config-supplied functions.

Allowed: numbers, the coordinate names ``x`` (d=1) or ``x1``, ``x2`` and
``r``/``abs_x`` (Euclidean norm), ``+ - * / **``, and the functions
``sin cos exp sqrt abs log clamp(v, lo, hi) step(v) min max``.
"""

from __future__ import annotations

import ast

import numpy as np


class ExpressionError(ValueError):
    pass


_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "log": np.log,
    "clamp": lambda v, lo, hi: np.clip(v, lo, hi),
    "step": lambda v: np.where(np.asarray(v) >= 0, 1.0, 0.0),
    "min": np.minimum,
    "max": np.maximum,
}

_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}


def _check(node: ast.AST) -> None:
    for sub in ast.walk(node):
        if isinstance(sub, (ast.Expression, ast.Load, ast.operator, ast.unaryop)):
            continue
        if isinstance(sub, ast.Constant) and isinstance(sub.value, (int, float)):
            continue
        if isinstance(sub, (ast.BinOp, ast.UnaryOp)):
            if isinstance(sub, ast.BinOp) and type(sub.op) not in _BINOPS:
                raise ExpressionError(f"operator {type(sub.op).__name__} not allowed")
            if isinstance(sub, ast.UnaryOp) and not isinstance(sub.op, (ast.USub, ast.UAdd)):
                raise ExpressionError("only unary +/- allowed")
            continue
        if isinstance(sub, ast.Call):
            if not isinstance(sub.func, ast.Name) or sub.func.id not in _FUNCS or sub.keywords:
                raise ExpressionError("unknown function in expression")
            continue
        if isinstance(sub, ast.Name):
            continue
        raise ExpressionError(f"syntax {type(sub).__name__} not allowed")


def _eval(node, env):
    if isinstance(node, ast.Expression):
        return _eval(node.body, env)
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        if node.id not in env:
            raise ExpressionError(f"unknown name {node.id!r}")
        return env[node.id]
    if isinstance(node, ast.UnaryOp):
        v = _eval(node.operand, env)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval(node.left, env), _eval(node.right, env))
    if isinstance(node, ast.Call):
        return _FUNCS[node.func.id](*[_eval(a, env) for a in node.args])
    raise ExpressionError("bad expression")


def compile_expression(source: str):
    """Return ``fn(points) -> values`` for points of shape ``(N, d)``."""
    try:
        tree = ast.parse(source, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {source!r}") from exc
    _check(tree)

    def fn(points):
        pts = np.asarray(points, dtype=float)
        pts = pts.reshape(len(pts), -1) if pts.ndim > 1 else pts.reshape(-1, 1)
        env = {"r": np.sqrt(np.sum(pts**2, axis=1))}
        env["abs_x"] = env["r"]
        env["x"] = pts[:, 0]
        for a in range(pts.shape[1]):
            env[f"x{a + 1}"] = pts[:, a]
        with np.errstate(divide="ignore", invalid="ignore"):
            out = _eval(tree, env)
        return np.broadcast_to(np.asarray(out, dtype=float), (len(pts),)).copy()

    fn.source = source
    return fn
