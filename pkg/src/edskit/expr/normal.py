"""Canonical rational forms.

An expression is brought to ``numerator / prod(factor_i ** e_i)`` where the
numerator is an expanded polynomial in *atoms* (symbols and function
applications with normalized arguments) and each denominator factor is a
primitive polynomial whose leading coefficient is 1.  Products of ``exp``
atoms are merged into a single ``exp`` of the summed argument, which is what
makes identities such as ``exp(x)*exp(-x) - 1`` collapse to 0.

The form is not a canonical form for the field of rational functions (there
is no multivariate gcd), but it is stable: ``normalize`` is idempotent, and
two expressions that differ only by ring manipulations almost always meet.
Anything left over is the business of the numeric zero test.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Iterable

from .nodes import Add, Const, Div, Expr, Func, Mul, Neg, Pow, Sub, Sym, ZERO
from .printer import to_text

# A monomial is a tuple of (atom, exponent>0) sorted by atom key.
# A polynomial is a tuple of (monomial, nonzero Fraction) sorted by monomial key.
Monomial = tuple
Poly = tuple

_ONE_MONO: Monomial = ()


@lru_cache(maxsize=None)
def _atom_key(atom: Expr) -> tuple:
    if isinstance(atom, Sym):
        return (0, atom.name)
    return (1, atom.name, to_text(atom.arg))


def _mono_key(m: Monomial) -> tuple:
    return tuple((_atom_key(a), e) for a, e in m)


def _poly(terms: dict) -> Poly:
    items = [(m, c) for m, c in terms.items() if c != 0]
    items.sort(key=lambda mc: _mono_key(mc[0]))
    return tuple(items)


def _const_poly(c) -> Poly:
    c = Fraction(c)
    return ((_ONE_MONO, c),) if c != 0 else ()


def _is_exp(atom: Expr) -> bool:
    return isinstance(atom, Func) and atom.name == "exp"


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    if not m1:
        return m2
    if not m2:
        return m1
    exps: dict[Expr, int] = {}
    exp_args: list[Expr] = []
    for a, e in m1 + m2:
        if _is_exp(a):
            exp_args.extend([a.arg] * e)
        else:
            exps[a] = exps.get(a, 0) + e
    if exp_args:
        arg = exp_args[0] if len(exp_args) == 1 else normalize(_sum(exp_args))
        if not (isinstance(arg, Const) and arg.value == 0):
            atom = Func("exp", arg)
            exps[atom] = exps.get(atom, 0) + 1
    return tuple(sorted(exps.items(), key=lambda ae: _atom_key(ae[0])))


def _sum(args: list[Expr]) -> Expr:
    out = args[0]
    for a in args[1:]:
        out = Add(out, a)
    return out


def p_add(p: Poly, q: Poly) -> Poly:
    if not p:
        return q
    if not q:
        return p
    terms = dict(p)
    for m, c in q:
        terms[m] = terms.get(m, 0) + c
    return _poly(terms)


def p_scale(p: Poly, c) -> Poly:
    c = Fraction(c)
    if c == 0:
        return ()
    return tuple((m, k * c) for m, k in p)


def p_mul(p: Poly, q: Poly) -> Poly:
    if not p or not q:
        return ()
    terms: dict = {}
    for m1, c1 in p:
        for m2, c2 in q:
            m = _mono_mul(m1, m2)
            terms[m] = terms.get(m, 0) + c1 * c2
    return _poly(terms)


def p_pow(p: Poly, n: int) -> Poly:
    out = _const_poly(1)
    base = p
    while n:
        if n & 1:
            out = p_mul(out, base)
        n >>= 1
        if n:
            base = p_mul(base, base)
    return out


def _lex_vector(m: Monomial, order: list) -> tuple:
    d = dict(m)
    return tuple(d.get(a, 0) for a in order)


def p_divexact(p: Poly, q: Poly) -> Poly | None:
    """Quotient p/q when q divides p in the free polynomial ring on the atoms."""
    if not q:
        raise ZeroDivisionError("polynomial division by zero")
    if not p:
        return ()
    atoms = {a for m, _ in p for a, _ in m} | {a for m, _ in q for a, _ in m}
    order = sorted(atoms, key=_atom_key)
    q_lead_m, q_lead_c = max(q, key=lambda mc: _lex_vector(mc[0], order))
    q_lead = dict(q_lead_m)
    rem = {m: c for m, c in p}
    quot: dict = {}
    guard = 0
    while rem:
        guard += 1
        if guard > 10000:
            return None
        lead_m = max(rem, key=lambda m: _lex_vector(m, order))
        lead = dict(lead_m)
        if any(lead.get(a, 0) < e for a, e in q_lead.items()):
            return None
        qm = {a: e - q_lead.get(a, 0) for a, e in lead.items()}
        qm = tuple(sorted(((a, e) for a, e in qm.items() if e), key=lambda ae: _atom_key(ae[0])))
        qc = rem[lead_m] / q_lead_c
        quot[qm] = quot.get(qm, 0) + qc
        for m, c in q:
            prod = dict(m)
            for a, e in qm:
                prod[a] = prod.get(a, 0) + e
            pm = tuple(sorted(prod.items(), key=lambda ae: _atom_key(ae[0])))
            v = rem.get(pm, 0) - qc * c
            if v == 0:
                rem.pop(pm, None)
            else:
                rem[pm] = v
    return _poly(quot)


class RationalForm:
    """``num / prod(f**e for f, e in den)`` with canonical, primitive factors."""

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num: Poly, den: tuple = ()):
        self.num = num
        self.den = den if num else ()
        self._hash = hash((self.num, self.den))

    def __eq__(self, other):
        return isinstance(other, RationalForm) and self.num == other.num and self.den == other.den

    def __hash__(self):
        return self._hash

    @property
    def is_zero(self) -> bool:
        return not self.num

    def constant(self) -> Fraction | None:
        if self.den:
            return None
        if not self.num:
            return Fraction(0)
        if len(self.num) == 1 and self.num[0][0] == _ONE_MONO:
            return self.num[0][1]
        return None


RF_ZERO = RationalForm(())
RF_ONE = RationalForm(_const_poly(1))


def rf_const(c) -> RationalForm:
    return RationalForm(_const_poly(c))


def _den_key(f: Poly) -> tuple:
    return tuple((_mono_key(m), c) for m, c in f)


def _merge_den(d1: Iterable, d2: Iterable, combine) -> dict:
    out = dict(d1)
    for f, e in d2:
        out[f] = combine(out.get(f, 0), e)
    return out


def _pack(num: Poly, den: dict) -> RationalForm:
    den = {f: e for f, e in den.items() if e > 0}
    num, den = _cancel(num, den)
    items = tuple(sorted(den.items(), key=lambda fe: _den_key(fe[0])))
    return RationalForm(num, items)


def _cancel(num: Poly, den: dict) -> tuple[Poly, dict]:
    if not num:
        return num, {}
    for f in list(den):
        while den[f] > 0:
            q = p_divexact(num, f)
            if q is None:
                break
            num = q
            den[f] -= 1
        if den[f] == 0:
            del den[f]
    return num, den


def rf_mul(a: RationalForm, b: RationalForm) -> RationalForm:
    if a.is_zero or b.is_zero:
        return RF_ZERO
    num = p_mul(a.num, b.num)
    if not a.den and not b.den:
        return RationalForm(num)
    return _pack(num, _merge_den(a.den, b.den, lambda x, y: x + y))


def rf_add(a: RationalForm, b: RationalForm) -> RationalForm:
    if a.is_zero:
        return b
    if b.is_zero:
        return a
    if not a.den and not b.den:
        return RationalForm(p_add(a.num, b.num))
    lcm = _merge_den(a.den, b.den, max)
    da, db = dict(a.den), dict(b.den)
    na, nb = a.num, b.num
    for f, e in lcm.items():
        if e - da.get(f, 0):
            na = p_mul(na, p_pow(f, e - da.get(f, 0)))
        if e - db.get(f, 0):
            nb = p_mul(nb, p_pow(f, e - db.get(f, 0)))
    return _pack(p_add(na, nb), lcm)


def rf_neg(a: RationalForm) -> RationalForm:
    return RationalForm(p_scale(a.num, -1), a.den)


def rf_sub(a: RationalForm, b: RationalForm) -> RationalForm:
    return rf_add(a, rf_neg(b))


def rf_scale(a: RationalForm, c) -> RationalForm:
    return RationalForm(p_scale(a.num, c), a.den)


def _split_poly(p: Poly) -> tuple[Fraction, dict, Poly]:
    """p = c * monomial_content * primitive, primitive with leading coeff 1."""
    common = None
    for m, _ in p:
        d = dict(m)
        common = d if common is None else {a: min(e, d[a]) for a, e in common.items() if a in d}
    common = {a: e for a, e in (common or {}).items() if e > 0}
    if common:
        stripped = {}
        for m, c in p:
            d = dict(m)
            for a, e in common.items():
                d[a] -= e
            mm = tuple(sorted(((a, e) for a, e in d.items() if e), key=lambda ae: _atom_key(ae[0])))
            stripped[mm] = c
        p = _poly(stripped)
    lead_c = max(p, key=lambda mc: _mono_key(mc[0]))[1]
    return lead_c, common, p_scale(p, 1 / lead_c)


def _exp_inverse(atom: Expr, e: int) -> Poly:
    arg = normalize(Neg(atom.arg) if e == 1 else Mul(Const(-e), atom.arg))
    return _atom_rf(Func("exp", arg)).num if not (isinstance(arg, Const) and arg.value == 0) else _const_poly(1)


def rf_inv(a: RationalForm) -> RationalForm:
    if a.is_zero:
        raise ZeroDivisionError("division by an expression that normalizes to 0")
    num = _const_poly(1)
    for f, e in a.den:
        num = p_mul(num, p_pow(f, e))
    if len(a.num) == 1:
        (m, c), = a.num
        content, prim = dict(m), None
    else:
        c, content, prim = _split_poly(a.num)
    num = p_scale(num, 1 / c)
    den = {prim: 1} if prim is not None else {}
    for atom, e in content.items():
        if _is_exp(atom):
            num = p_mul(num, _exp_inverse(atom, e))
        else:
            den[((((atom, 1),), Fraction(1)),)] = e
    return _pack(num, den)


def rf_div(a: RationalForm, b: RationalForm) -> RationalForm:
    return rf_mul(a, rf_inv(b))


def rf_pow(a: RationalForm, n: int) -> RationalForm:
    if n < 0:
        return rf_pow(rf_inv(a), -n)
    if n == 0:
        return RF_ONE
    if not a.den:
        return RationalForm(p_pow(a.num, n))
    return RationalForm(p_pow(a.num, n), tuple((f, e * n) for f, e in a.den))


def _atom_rf(atom: Expr) -> RationalForm:
    return RationalForm(((((atom, 1),), Fraction(1)),))


def _func_rf(name: str, arg: Expr) -> RationalForm:
    a = normalize(arg)
    if isinstance(a, Const):
        v = a.value
        if name == "exp" and v == 0:
            return RF_ONE
        if name == "ln" and v == 1:
            return RF_ZERO
        if name == "sin" and v == 0:
            return RF_ZERO
        if name == "cos" and v == 0:
            return RF_ONE
        if name == "sqrt" and v in (0, 1):
            return rf_const(v)
    if name == "ln" and isinstance(a, Func) and a.name == "exp":
        return to_rational(a.arg)
    if name == "exp" and isinstance(a, Func) and a.name == "ln":
        return to_rational(a.arg)
    return _atom_rf(Func(name, a))


def _reduce_sqrt(rf: RationalForm) -> RationalForm:
    if not any(isinstance(a, Func) and a.name == "sqrt" and e >= 2 for m, _ in rf.num for a, e in m):
        return rf
    out = RF_ZERO
    for m, c in rf.num:
        term = rf_const(c)
        for a, e in m:
            if isinstance(a, Func) and a.name == "sqrt" and e >= 2:
                term = rf_mul(term, rf_pow(to_rational(a.arg), e // 2))
                e = e % 2
            if e:
                term = rf_mul(term, RationalForm(((((a, e),), Fraction(1)),)))
        out = rf_add(out, term)
    if rf.den:
        out = rf_mul(out, RationalForm(_const_poly(1), rf.den))
    return out


def _denominator_factors(e: Expr, mult: int, out: list):
    """Flatten the multiplicative structure of a denominator."""
    if isinstance(e, Mul):
        _denominator_factors(e.left, mult, out)
        _denominator_factors(e.right, mult, out)
    elif isinstance(e, Div):
        _denominator_factors(e.left, mult, out)
        _denominator_factors(e.right, -mult, out)
    elif isinstance(e, Pow):
        _denominator_factors(e.base, mult * e.exp, out)
    elif isinstance(e, Neg):
        out.append((Const(-1), mult))
        _denominator_factors(e.arg, mult, out)
    else:
        out.append((e, mult))


@lru_cache(maxsize=200_000)
def to_rational(e: Expr) -> RationalForm:
    if isinstance(e, Const):
        return rf_const(e.value)
    if isinstance(e, Sym):
        return _atom_rf(e)
    if isinstance(e, Add):
        return rf_add(to_rational(e.left), to_rational(e.right))
    if isinstance(e, Sub):
        return rf_sub(to_rational(e.left), to_rational(e.right))
    if isinstance(e, Neg):
        return rf_neg(to_rational(e.arg))
    if isinstance(e, Mul):
        return _reduce_sqrt(rf_mul(to_rational(e.left), to_rational(e.right)))
    if isinstance(e, Div):
        factors: list = []
        _denominator_factors(e.right, 1, factors)
        out = to_rational(e.left)
        for f, k in factors:
            out = rf_mul(out, rf_pow(to_rational(f), -k))
        return _reduce_sqrt(out)
    if isinstance(e, Pow):
        return _reduce_sqrt(rf_pow(to_rational(e.base), e.exp))
    if isinstance(e, Func):
        return _func_rf(e.name, e.arg)
    raise TypeError(f"unknown node {type(e).__name__}")


def _mono_expr(m: Monomial) -> Expr | None:
    out = None
    for a, e in m:
        f = a if e == 1 else Pow(a, e)
        out = f if out is None else Mul(out, f)
    return out


def poly_to_expr(p: Poly) -> Expr:
    if not p:
        return ZERO
    out = None
    for m, c in reversed(p):
        me = _mono_expr(m)
        mag = abs(c)
        if me is None:
            t = Const(mag)
        elif mag == 1:
            t = me
        else:
            t = Mul(Const(mag), me)
        if out is None:
            out = Neg(t) if c < 0 else t
        else:
            out = Sub(out, t) if c < 0 else Add(out, t)
    return out


def from_rational(rf: RationalForm) -> Expr:
    num = poly_to_expr(rf.num)
    if not rf.den:
        return num
    den = None
    for f, k in rf.den:
        fe = poly_to_expr(f)
        fe = fe if k == 1 else Pow(fe, k)
        den = fe if den is None else Mul(den, fe)
    return Div(num, den)


@lru_cache(maxsize=200_000)
def normalize(e: Expr) -> Expr:
    """Canonical rational form of ``e`` as an expression tree (idempotent)."""
    return from_rational(to_rational(e))


def numerator(e: Expr) -> Expr:
    return poly_to_expr(to_rational(e).num)


def denominators(e: Expr) -> list[Expr]:
    """The distinct denominator factors of the normalized form."""
    return [poly_to_expr(f) for f, _ in to_rational(e).den]
