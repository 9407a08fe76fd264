"""A small closed-form integrand grammar for the command line.

Supported: numbers, x, y, pi, + - * / **, unary minus, sin, cos, exp.
Expressions are parsed with the ast module and compiled to a numpy-aware
callable; nothing else is evaluated.
"""

import ast

import numpy as np

from .errors import SchemaError

_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
_NAMES = {"pi": np.pi}

_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: lambda a, b: a**b,
}


def _compile(node):
    if isinstance(node, ast.Expression):
        return _compile(node.body)
    if isinstance(node, ast.Constant):
        if isinstance(node.value, (int, float)):
            value = float(node.value)
            return lambda x, y: value
        raise SchemaError(f"non-numeric constant {node.value!r} in expression")
    if isinstance(node, ast.Name):
        if node.id == "x":
            return lambda x, y: x
        if node.id == "y":
            return lambda x, y: y
        if node.id in _NAMES:
            value = _NAMES[node.id]
            return lambda x, y: value
        raise SchemaError(f"unknown name {node.id!r} in expression", field="f")
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op = _BINOPS[type(node.op)]
        left, right = _compile(node.left), _compile(node.right)
        return lambda x, y: op(left(x, y), right(x, y))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _compile(node.operand)
        if isinstance(node.op, ast.USub):
            return lambda x, y: -inner(x, y)
        return inner
    if isinstance(node, ast.Call):
        if (
            isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS
            and len(node.args) == 1
            and not node.keywords
        ):
            fn = _FUNCS[node.func.id]
            arg = _compile(node.args[0])
            return lambda x, y: fn(arg(x, y))
        raise SchemaError("only sin, cos, exp calls are allowed in expressions", field="f")
    raise SchemaError(
        f"unsupported syntax in expression: {ast.dump(node)[:60]}", field="f"
    )


def parse_expression(text):
    """Compile an integrand expression into a callable f(x, y)."""
    cleaned = (
        text.replace("×", "*")
        .replace("÷", "/")
        .replace("−", "-")
        .replace("π", "pi")
        .replace("^", "**")
    )
    try:
        tree = ast.parse(cleaned, mode="eval")
    except SyntaxError as exc:
        raise SchemaError(f"cannot parse expression: {exc}", field="f") from exc
    return _compile(tree)
