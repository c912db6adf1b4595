"""Symbolic partial derivatives and substitution."""

from __future__ import annotations

from functools import lru_cache
from typing import Mapping

from .nodes import Add, Const, Div, Expr, Func, Mul, Neg, Pow, Sub, Sym, ONE, ZERO
from .normal import normalize


@lru_cache(maxsize=200_000)
def free_symbols(e: Expr) -> frozenset[str]:
    if isinstance(e, Sym):
        return frozenset((e.name,))
    if isinstance(e, Const):
        return frozenset()
    out: frozenset[str] = frozenset()
    for c in e.children():
        out |= free_symbols(c)
    return out


def _d(e: Expr, v: str) -> Expr:
    if v not in free_symbols(e):
        return ZERO
    if isinstance(e, Sym):
        return ONE
    if isinstance(e, Add):
        return Add(_d(e.left, v), _d(e.right, v))
    if isinstance(e, Sub):
        return Sub(_d(e.left, v), _d(e.right, v))
    if isinstance(e, Neg):
        return Neg(_d(e.arg, v))
    if isinstance(e, Mul):
        return Add(Mul(_d(e.left, v), e.right), Mul(e.left, _d(e.right, v)))
    if isinstance(e, Div):
        num = Sub(Mul(_d(e.left, v), e.right), Mul(e.left, _d(e.right, v)))
        return Div(num, Pow(e.right, 2))
    if isinstance(e, Pow):
        if e.exp == 0:
            return ZERO
        return Mul(Mul(Const(e.exp), Pow(e.base, e.exp - 1)), _d(e.base, v))
    if isinstance(e, Func):
        u, du = e.arg, _d(e.arg, v)
        if e.name == "exp":
            outer = e
        elif e.name == "ln":
            outer = Div(ONE, u)
        elif e.name == "sin":
            outer = Func("cos", u)
        elif e.name == "cos":
            outer = Neg(Func("sin", u))
        else:  # sqrt
            outer = Div(ONE, Mul(Const(2), e))
        return Mul(outer, du)
    raise TypeError(f"unknown node {type(e).__name__}")


@lru_cache(maxsize=200_000)
def differentiate(e: Expr, v: str) -> Expr:
    """Normalized partial derivative of ``e`` with respect to the symbol ``v``."""
    if isinstance(v, Sym):
        v = v.name
    return normalize(_d(e, v))


def substitute(e: Expr, mapping: Mapping[str, Expr], normalized: bool = True) -> Expr:
    """Replace symbols by expressions; the result is normalized by default."""
    memo: dict[Expr, Expr] = {}
    keys = frozenset(mapping)

    def go(node: Expr) -> Expr:
        if not (free_symbols(node) & keys):
            return node
        hit = memo.get(node)
        if hit is not None:
            return hit
        if isinstance(node, Sym):
            out = mapping[node.name]
        elif isinstance(node, (Add, Sub, Mul, Div)):
            out = type(node)(go(node.left), go(node.right))
        elif isinstance(node, Neg):
            out = Neg(go(node.arg))
        elif isinstance(node, Pow):
            out = Pow(go(node.base), node.exp)
        else:
            out = Func(node.name, go(node.arg))
        memo[node] = out
        return out

    out = go(e)
    return normalize(out) if normalized else out
