"""Tiny arithmetic expression grammar for user-supplied scalar fields.

Supports +, -, *, / (and the unicode spellings of the last three), the
functions sin, cos, exp, numeric literals, the constants pi and e, and a
caller-declared set of variable names.  Parsing goes through ``ast`` with a
strict node whitelist, so config files cannot smuggle in arbitrary Python.
"""

from __future__ import annotations

import ast
import math
from typing import Callable, Mapping, Sequence

from .errors import ConfigurationError

_FUNCTIONS = {"sin": math.sin, "cos": math.cos, "exp": math.exp}
_CONSTANTS = {"pi": math.pi, "e": math.e}

_ALLOWED_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div)
_ALLOWED_UNARY = (ast.USub, ast.UAdd)


def _normalize(source: str) -> str:
    return (source.replace("×", "*")   # multiplication sign
                  .replace("÷", "/")   # division sign
                  .replace("−", "-"))  # unicode minus


def _check(node: ast.AST, names: set[str], source: str):
    if isinstance(node, ast.Expression):
        _check(node.body, names, source)
    elif isinstance(node, ast.BinOp):
        if not isinstance(node.op, _ALLOWED_BINOPS):
            raise ConfigurationError(
                f"operator {type(node.op).__name__} not allowed in {source!r}")
        _check(node.left, names, source)
        _check(node.right, names, source)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, _ALLOWED_UNARY):
            raise ConfigurationError(
                f"unary operator {type(node.op).__name__} not allowed in {source!r}")
        _check(node.operand, names, source)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
            raise ConfigurationError(
                f"only sin/cos/exp calls are allowed in {source!r}")
        if node.keywords or len(node.args) != 1:
            raise ConfigurationError(
                f"{node.func.id} takes exactly one positional argument in {source!r}")
        _check(node.args[0], names, source)
    elif isinstance(node, ast.Name):
        if node.id not in names and node.id not in _FUNCTIONS:
            raise ConfigurationError(f"unknown name {node.id!r} in {source!r}")
    elif isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)):
            raise ConfigurationError(f"literal {node.value!r} not allowed in {source!r}")
    else:
        raise ConfigurationError(
            f"syntax element {type(node).__name__} not allowed in {source!r}")


def compile_expression(source: str, variables: Sequence[str],
                       constants: Mapping[str, float] | None = None) -> Callable:
    """Compile an expression string into ``f(*values)`` over ``variables``.

    ``constants`` adds fixed named values (e.g. the period ``T`` or sweep
    parameters) to the evaluation namespace.
    """
    if not isinstance(source, str) or not source.strip():
        raise ConfigurationError("expression must be a non-empty string")
    extra = dict(constants or {})
    names = set(variables) | set(_CONSTANTS) | set(extra)
    try:
        tree = ast.parse(_normalize(source), mode="eval")
    except SyntaxError as exc:
        raise ConfigurationError(f"cannot parse expression {source!r}: {exc}") from exc
    _check(tree, names, source)
    code = compile(tree, "<expression>", "eval")
    base_env = dict(_FUNCTIONS)
    base_env.update(_CONSTANTS)
    base_env.update(extra)
    varnames = list(variables)

    def evaluate(*values: float) -> float:
        env = dict(base_env)
        env.update(zip(varnames, values))
        return float(eval(code, {"__builtins__": {}}, env))

    evaluate.source = source  # type: ignore[attr-defined]
    return evaluate
