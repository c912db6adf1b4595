"""Render expressions as grammar-conforming text or as Python source."""

from __future__ import annotations

from fractions import Fraction

from .nodes import Add, Const, Div, Expr, Func, Mul, Neg, Pow, Sub, Sym

# binding strength; larger binds tighter
_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}
_ATOM = 5


def _prec(e: Expr) -> int:
    # constants that need a sign or a slash are printed parenthesized
    return _PREC.get(type(e), _ATOM)


def _const_text(v: Fraction) -> str:
    if v.denominator == 1 and v >= 0:
        return str(v.numerator)
    return f"({v.numerator}/{v.denominator})" if v.denominator != 1 else f"({v.numerator})"


def to_text(e: Expr) -> str:
    """Print ``e`` so that ``parse_expr(to_text(e))`` evaluates identically."""
    return _text(e, _const_text, "^", {})


def to_python(e: Expr, names: dict[str, str]) -> str:
    """Python source for ``e``; ``names`` maps symbols to variable names."""

    def const(v: Fraction) -> str:
        if v.denominator == 1:
            return f"({v.numerator}.0)" if v < 0 else f"{v.numerator}.0"
        return f"({float(v)!r})"

    return _text(e, const, "**", names, python=True)


def _text(e, const, pow_op, names, python=False):
    memo: dict = {}

    def go(node):
        hit = memo.get(node)
        if hit is not None:
            return hit
        out = _render(node)
        memo[node] = out
        return out

    def wrap(child, cond):
        s = go(child)
        return f"({s})" if cond else s

    def _render(node):
        if isinstance(node, Const):
            return const(node.value)
        if isinstance(node, Sym):
            return names.get(node.name, node.name) if python else node.name
        if isinstance(node, Func):
            fname = {"exp": "_exp", "ln": "_ln", "sin": "_sin", "cos": "_cos", "sqrt": "_sqrt"}[node.name] if python else node.name
            return f"{fname}({go(node.arg)})"
        if isinstance(node, Neg):
            return "-" + wrap(node.arg, _prec(node.arg) < _PREC[Pow] or isinstance(node.arg, Neg))
        if isinstance(node, Pow):
            base = wrap(node.base, _prec(node.base) < _ATOM or (isinstance(node.base, Const) and python))
            if python:
                return f"{base}**({node.exp})"
            return f"{base}^{node.exp}"
        p = _PREC[type(node)]
        op = {Add: " + ", Sub: " - ", Mul: "*", Div: "/"}[type(node)]
        left = wrap(node.left, _prec(node.left) < p)
        right = wrap(node.right, _prec(node.right) <= p)
        return left + op + right

    return go(e)
