"""Expression tree nodes.

Nodes are immutable and hash-consed only in the sense that each node caches
its hash at construction, so deep trees can be used as dictionary keys
without re-walking them.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterator, Union

Number = Union[int, Fraction]

FUNCTIONS = ("exp", "ln", "sin", "cos", "sqrt")


class Expr:
    __slots__ = ("_hash",)

    def __setattr__(self, name, value):
        if name != "_hash":
            raise AttributeError("Expr nodes are immutable")
        object.__setattr__(self, name, value)

    def children(self) -> tuple["Expr", ...]:
        return ()

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, Expr) or type(self) is not type(other):
            return False
        if self._hash != other._hash:
            return False
        return self._key() == other._key()

    def _key(self) -> tuple:
        raise NotImplementedError

    # arithmetic builds raw (un-normalized) trees
    def __add__(self, other):
        return Add(self, as_expr(other))

    def __radd__(self, other):
        return Add(as_expr(other), self)

    def __sub__(self, other):
        return Sub(self, as_expr(other))

    def __rsub__(self, other):
        return Sub(as_expr(other), self)

    def __mul__(self, other):
        return Mul(self, as_expr(other))

    def __rmul__(self, other):
        return Mul(as_expr(other), self)

    def __truediv__(self, other):
        return Div(self, as_expr(other))

    def __rtruediv__(self, other):
        return Div(as_expr(other), self)

    def __pow__(self, n: int):
        return Pow(self, n)

    def __neg__(self):
        return Neg(self)

    def __repr__(self) -> str:
        from .printer import to_text

        return f"Expr({to_text(self)!r})"

    def __str__(self) -> str:
        from .printer import to_text

        return to_text(self)

    def walk(self) -> Iterator["Expr"]:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(node.children())

    def symbols(self) -> frozenset[str]:
        return frozenset(n.name for n in self.walk() if isinstance(n, Sym))

    def has_function(self, names=FUNCTIONS) -> bool:
        return any(isinstance(n, Func) and n.name in names for n in self.walk())


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value: Number):
        value = Fraction(value)
        object.__setattr__(self, "value", value)
        self._hash = hash(("c", value))

    def _key(self):
        return (self.value,)


class Sym(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        object.__setattr__(self, "name", name)
        self._hash = hash(("s", name))

    def _key(self):
        return (self.name,)


class _Binary(Expr):
    __slots__ = ("left", "right")
    tag = "?"

    def __init__(self, left: Expr, right: Expr):
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        self._hash = hash((self.tag, left._hash, right._hash))

    def children(self):
        return (self.left, self.right)

    def _key(self):
        return (self.left, self.right)


class Add(_Binary):
    __slots__ = ()
    tag = "+"


class Sub(_Binary):
    __slots__ = ()
    tag = "-"


class Mul(_Binary):
    __slots__ = ()
    tag = "*"


class Div(_Binary):
    __slots__ = ()
    tag = "/"


class Neg(Expr):
    __slots__ = ("arg",)

    def __init__(self, arg: Expr):
        object.__setattr__(self, "arg", arg)
        self._hash = hash(("neg", arg._hash))

    def children(self):
        return (self.arg,)

    def _key(self):
        return (self.arg,)


class Pow(Expr):
    """Integer power ``base ** exp``; negative exponents are allowed."""

    __slots__ = ("base", "exp")

    def __init__(self, base: Expr, exp: int):
        if not isinstance(exp, int):
            raise TypeError("only integer powers are supported")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "exp", exp)
        self._hash = hash(("^", base._hash, exp))

    def children(self):
        return (self.base,)

    def _key(self):
        return (self.base, self.exp)


class Func(Expr):
    __slots__ = ("name", "arg")

    def __init__(self, name: str, arg: Expr):
        if name not in FUNCTIONS:
            raise ValueError(f"unknown function {name!r}")
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "arg", arg)
        self._hash = hash(("f", name, arg._hash))

    def children(self):
        return (self.arg,)

    def _key(self):
        return (self.name, self.arg)


ZERO = Const(0)
ONE = Const(1)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, Fraction)):
        return Const(value)
    if isinstance(value, str):
        return Sym(value)
    raise TypeError(f"cannot convert {type(value).__name__} to Expr")


def exp(e) -> Func:
    return Func("exp", as_expr(e))


def ln(e) -> Func:
    return Func("ln", as_expr(e))


def sin(e) -> Func:
    return Func("sin", as_expr(e))


def cos(e) -> Func:
    return Func("cos", as_expr(e))


def sqrt(e) -> Func:
    return Func("sqrt", as_expr(e))


def symbols(names: str) -> tuple[Sym, ...]:
    return tuple(Sym(n) for n in names.replace(",", " ").split())
