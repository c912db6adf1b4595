"""Recursive-descent parser for scalar expressions and vector fields.

Expression grammar::

    expr   := term (('+'|'-') term)*
    term   := unary (('*'|'/') unary)*
    unary  := '-' unary | power
    power  := base ('^' ['-'] integer)?
    base   := number | ident | func '(' expr ')' | '(' expr ')'
    func   := exp | ln | sin | cos | sqrt

Unary minus binds looser than ``^`` so ``-x^2`` reads as ``-(x^2)``.
A rational ``a/b`` is read as a quotient of integer literals, which normalizes
to the exact rational constant.

Vector fields are sums of ``coef*d/d<coord>`` terms; a bare ``d/d<coord>`` has
unit coefficient.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .nodes import FUNCTIONS, Add, Const, Div, Expr, Func, Mul, Neg, Pow, Sub, Sym

_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*")
_NUMBER = re.compile(r"\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?")


class ExprError(ValueError):
    """Base class for parse errors; ``offset`` is a byte offset into the text."""

    def __init__(self, message: str, text: str, index: int):
        self.text = text
        self.index = index
        self.offset = len(text[:index].encode("utf-8"))
        super().__init__(f"{message} at byte {self.offset}")
        self.message = message


class ExprSyntaxError(ExprError):
    pass


class UndeclaredSymbol(ExprError):
    def __init__(self, name: str, text: str, index: int):
        self.name = name
        super().__init__(f"undeclared symbol {name!r}", text, index)


@dataclass(frozen=True)
class SymbolTable:
    """Declared names: chart coordinates, free parameters and macros."""

    coordinates: tuple[str, ...] = ()
    parameters: tuple[str, ...] = ()
    definitions: tuple[tuple[str, Expr], ...] = field(default=())

    def __post_init__(self):
        names = list(self.coordinates) + list(self.parameters) + [n for n, _ in self.definitions]
        dup = {n for n in names if names.count(n) > 1}
        if dup:
            raise ValueError(f"duplicate symbol names: {sorted(dup)}")
        bad = [n for n in names if n in FUNCTIONS or not _IDENT.fullmatch(n)]
        if bad:
            raise ValueError(f"invalid symbol names: {bad}")

    @classmethod
    def of(cls, coordinates, parameters=(), definitions=None) -> "SymbolTable":
        defs = tuple((definitions or {}).items())
        return cls(tuple(coordinates), tuple(parameters), defs)

    def lookup(self, name: str) -> Expr | None:
        for n, e in self.definitions:
            if n == name:
                return e
        if name in self.coordinates or name in self.parameters:
            return Sym(name)
        return None

    def with_definition(self, name: str, value: Expr) -> "SymbolTable":
        return SymbolTable(self.coordinates, self.parameters, self.definitions + ((name, value),))


@dataclass
class _Tok:
    kind: str  # num, id, op, deriv, end
    text: str
    pos: int
    value: object = None


def _tokenize(text: str, symbols: SymbolTable | None, fields: bool) -> list[_Tok]:
    toks: list[_Tok] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if fields and text.startswith("d/d", i) and (i == 0 or not (text[i - 1].isalnum() or text[i - 1] == "_")):
            m = _IDENT.match(text, i + 3)
            if m and symbols is not None and m.group() in symbols.coordinates:
                toks.append(_Tok("deriv", text[i : m.end()], i, m.group()))
                i = m.end()
                continue
        m = _NUMBER.match(text, i)
        if m and (ch.isdigit() or ch == "."):
            toks.append(_Tok("num", m.group(), i, Fraction(m.group())))
            i = m.end()
            continue
        m = _IDENT.match(text, i)
        if m:
            toks.append(_Tok("id", m.group(), i))
            i = m.end()
            continue
        if ch in "+-*/^(),":
            toks.append(_Tok("op", ch, i))
            i += 1
            continue
        raise ExprSyntaxError(f"unexpected character {ch!r}", text, i)
    toks.append(_Tok("end", "", n))
    return toks


class _Parser:
    def __init__(self, text: str, symbols: SymbolTable | None, fields: bool = False):
        self.text = text
        self.symbols = symbols
        self.toks = _tokenize(text, symbols, fields)
        self.k = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.k]

    def peek(self, ahead: int = 1) -> _Tok:
        return self.toks[min(self.k + ahead, len(self.toks) - 1)]

    def accept(self, op: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == op:
            self.k += 1
            return True
        return False

    def expect(self, op: str):
        if not self.accept(op):
            self.fail(f"expected {op!r}")

    def fail(self, message: str):
        tok = self.tok
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise ExprSyntaxError(f"{message}, found {found}", self.text, tok.pos)

    def expr(self) -> Expr:
        node = self.term()
        while True:
            if self.accept("+"):
                node = Add(node, self.term())
            elif self.accept("-"):
                node = Sub(node, self.term())
            else:
                return node

    def term(self, stop_at_deriv: bool = False) -> Expr:
        node = self.unary()
        while True:
            if self.tok.kind == "op" and self.tok.text in "*/":
                if stop_at_deriv and self.tok.text == "*" and self.peek().kind == "deriv":
                    return node
                op = self.tok.text
                self.k += 1
                rhs = self.unary()
                node = Mul(node, rhs) if op == "*" else Div(node, rhs)
            else:
                return node

    def unary(self) -> Expr:
        if self.accept("-"):
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.base()
        if self.accept("^"):
            sign = -1 if self.accept("-") else 1
            tok = self.tok
            if tok.kind != "num" or not tok.text.isdigit():
                self.fail("expected integer exponent")
            self.k += 1
            return Pow(base, sign * int(tok.text))
        return base

    def base(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.k += 1
            return Const(tok.value)
        if tok.kind == "id":
            name = tok.text
            if name in FUNCTIONS:
                self.k += 1
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(name, arg)
            self.k += 1
            if self.symbols is None:
                return Sym(name)
            node = self.symbols.lookup(name)
            if node is None:
                raise UndeclaredSymbol(name, self.text, tok.pos)
            return node
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "deriv":
            self.fail("basis derivation outside a vector field")
        self.fail("expected a number, symbol, function or '('")

    def vector_field(self) -> dict[str, Expr]:
        terms: dict[str, Expr] = {}
        if self.tok.kind == "num" and self.tok.value == 0 and self.peek().kind == "end":
            self.k += 1
            return terms
        sign = -1 if self.accept("-") else 1
        while True:
            if self.tok.kind == "deriv":
                coef: Expr = Const(1)
            else:
                coef = self.term(stop_at_deriv=True)
                self.expect("*")
                if self.tok.kind != "deriv":
                    self.fail("expected d/d<coordinate>")
            coord = self.tok.value
            self.k += 1
            if sign < 0:
                coef = Neg(coef)
            terms[coord] = Add(terms[coord], coef) if coord in terms else coef
            if self.accept("+"):
                sign = 1
            elif self.accept("-"):
                sign = -1
            else:
                break
        return terms

    def finish(self):
        if self.tok.kind != "end":
            self.fail("unexpected trailing input")


def parse_expr(text: str, symbols: SymbolTable | None = None) -> Expr:
    """Parse ``text`` into an expression tree.

    With ``symbols=None`` every identifier is accepted as a symbol; otherwise
    identifiers must be declared and macro names expand in place.
    """
    p = _Parser(text, symbols)
    node = p.expr()
    p.finish()
    return node


def parse_vector_field(text: str, symbols: SymbolTable) -> dict[str, Expr]:
    """Parse ``coef*d/dx + ...`` into a map from coordinate to coefficient."""
    p = _Parser(text, symbols, fields=True)
    terms = p.vector_field()
    p.finish()
    return terms
