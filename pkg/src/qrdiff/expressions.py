"""Closed expression language for user-declared model functions.

Expressions are parsed with :mod:`ast` and only arithmetic, numeric
literals, a fixed set of names and a handful of functions are accepted::

    f1 = alpha * n - u1 * u2 + ratio(u1, u2, n)

Names available to an expression are the species names, ``u1 .. um``,
``n`` (sum of all species), ``x``/``y`` (coordinates), ``t`` and any
user constants; ``pi`` is predefined.
"""
from __future__ import annotations

import ast
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ConfigError
from .model import singular_ratio

_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}

FUNCTIONS = {
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "sin": np.sin,
    "cos": np.cos,
    "min": np.minimum,
    "max": np.maximum,
    "pos": lambda z: np.maximum(z, 0.0),
    "ratio": lambda a, c, n: singular_ratio(a, c, n, check=False),
}


class _Validator(ast.NodeVisitor):
    def __init__(self, allowed_names):
        self.allowed = set(allowed_names)
        self.errors = []

    def generic_visit(self, node):
        ok = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name,
              ast.Constant, ast.Load, ast.USub, ast.UAdd) + tuple(_BINOPS)
        if not isinstance(node, ok):
            self.errors.append(f"unsupported syntax: {type(node).__name__}")
            return
        super().generic_visit(node)

    def visit_Constant(self, node):
        if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
            self.errors.append(f"unsupported literal {node.value!r}")

    def visit_Name(self, node):
        if node.id not in self.allowed and node.id not in FUNCTIONS:
            self.errors.append(f"unknown name {node.id!r}")

    def visit_Call(self, node):
        if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
            self.errors.append("only built-in functions may be called: " + ", ".join(sorted(FUNCTIONS)))
            return
        if node.keywords:
            self.errors.append("keyword arguments are not allowed")
        for arg in node.args:
            self.visit(arg)


def _eval(node, env):
    if isinstance(node, ast.Expression):
        return _eval(node.body, env)
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        return env[node.id]
    if isinstance(node, ast.UnaryOp):
        v = _eval(node.operand, env)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval(node.left, env), _eval(node.right, env))
    if isinstance(node, ast.Call):
        return FUNCTIONS[node.func.id](*[_eval(a, env) for a in node.args])
    raise ConfigError(f"cannot evaluate {ast.dump(node)}")


def compile_expression(src: str, names: Sequence[str], constants: Mapping[str, float] = None,
                       spatial_only: bool = False):
    """Parse ``src`` and return the validated AST (raises ConfigError)."""
    constants = dict(constants or {})
    if spatial_only:
        allowed = {"x", "y", "t", "pi"} | set(constants)
    else:
        m = len(names)
        allowed = set(names) | {f"u{i + 1}" for i in range(m)} | {"n", "x", "y", "t", "pi"} | set(constants)
    try:
        tree = ast.parse(src.strip(), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {src!r}: {exc.msg}") from None
    v = _Validator(allowed)
    v.visit(tree)
    if v.errors:
        raise ConfigError([f"{src!r}: {e}" for e in v.errors])
    return tree


def _environment(names, constants, x, t, u):
    env = {"pi": np.pi}
    env.update(constants)
    for i, name in enumerate(names):
        env[name] = u[i]
        env[f"u{i + 1}"] = u[i]
    env["n"] = np.sum(u, axis=0)
    if x is not None:
        x = np.asarray(x, dtype=float)
        env["x"] = x[0]
        env["y"] = x[1] if x.shape[0] > 1 else np.zeros_like(x[0])
    env["t"] = t
    return env


def vector_function(exprs: Sequence[str], names, constants=None) -> Callable:
    """Build ``f(x, t, u) -> (len(exprs), *pts)`` from expressions."""
    constants = dict(constants or {})
    trees = [compile_expression(e, names, constants) for e in exprs]

    def f(x, t, u):
        u = np.asarray(u, dtype=float)
        env = _environment(names, constants, x, t, u)
        with np.errstate(all="ignore"):
            vals = [np.broadcast_to(_eval(tr, env), u.shape[1:]) for tr in trees]
        return np.stack(vals, axis=0).astype(float)

    return f


def scalar_function(expr: str, names, constants=None) -> Callable:
    """Build ``phi(u) -> (*pts)`` from one expression in the species."""
    constants = dict(constants or {})
    tree = compile_expression(expr, names, constants)

    def phi(u):
        u = np.asarray(u, dtype=float)
        env = _environment(names, constants, None, 0.0, u)
        with np.errstate(all="ignore"):
            return np.broadcast_to(np.asarray(_eval(tree, env), dtype=float), u.shape[1:]).copy()

    return phi


def field_function(exprs: Sequence[str], constants=None) -> Callable:
    """Build ``d(x, t) -> (len(exprs), *pts)`` from expressions in x, y, t."""
    constants = dict(constants or {})
    trees = [compile_expression(e, (), constants, spatial_only=True) for e in exprs]

    def d(x, t):
        x = np.asarray(x, dtype=float)
        env = {"pi": np.pi}
        env.update(constants)
        env["x"] = x[0]
        env["y"] = x[1] if x.shape[0] > 1 else np.zeros_like(x[0])
        env["t"] = t
        with np.errstate(all="ignore"):
            return np.stack([np.broadcast_to(_eval(tr, env), x.shape[1:]) for tr in trees]).astype(float)

    return d
