"""Geometry expressions such as ``difference(rectangle([-1,-1],[1,1]), disk([0,0],0.5))``.

Expressions are parsed with :mod:`ast` and evaluated against a whitelist
of constructors; nothing else is executed.  The same tree may be given as
nested JSON: ``{"op": "difference", "args": [...]}``.
"""

from __future__ import annotations

import ast

from pinnkit import geometry as g


class ExpressionError(ValueError):
    pass


def _union(a, b):
    return a | b


def _difference(a, b):
    return a - b


def _intersection(a, b):
    return a & b


CONSTRUCTORS = {
    "interval": g.Interval,
    "rectangle": g.Rectangle,
    "cuboid": g.Cuboid,
    "disk": g.Disk,
    "sphere": g.Sphere,
    "triangle": g.Triangle,
    "polygon": g.Polygon,
    "union": _union,
    "difference": _difference,
    "intersection": _intersection,
}


def _literal(node):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _literal(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, (ast.List, ast.Tuple)):
        return [_literal(e) for e in node.elts]
    raise ExpressionError(f"unsupported literal at column {getattr(node, 'col_offset', '?')}")


def _eval(node):
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in CONSTRUCTORS:
            name = getattr(node.func, "id", "?")
            raise ExpressionError(f"unknown geometry constructor {name!r}; "
                                  f"expected one of {sorted(CONSTRUCTORS)}")
        if node.keywords:
            raise ExpressionError("keyword arguments are not supported in geometry expressions")
        args = [_eval(a) if isinstance(a, ast.Call) else _literal(a) for a in node.args]
        try:
            return CONSTRUCTORS[node.func.id](*args)
        except TypeError as exc:
            raise ExpressionError(f"{node.func.id}: {exc}") from exc
    raise ExpressionError("a geometry expression must be a constructor call")


def parse_geometry(expr) -> g.Geometry:
    """Build a geometry from an expression string or a nested JSON tree."""
    if isinstance(expr, str):
        try:
            tree = ast.parse(expr.strip(), mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"malformed geometry expression: {exc.msg}") from exc
        return _eval(tree.body)
    if isinstance(expr, dict):
        op = expr.get("op")
        if op not in CONSTRUCTORS:
            raise ExpressionError(f"unknown geometry constructor {op!r}")
        args = [parse_geometry(a) if isinstance(a, (dict, str)) else a for a in expr.get("args", [])]
        return CONSTRUCTORS[op](*args)
    raise ExpressionError(f"cannot read geometry from {type(expr).__name__}")
