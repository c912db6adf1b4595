"""Floating point evaluation, sampling and the hybrid zero test."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from .calculus import free_symbols
from .nodes import Add, Const, Div, Expr, Func, Mul, Neg, Pow, Sub, Sym
from .normal import normalize, to_rational

DEFAULT_BOX = (-2.0, 2.0)


class SingularEvaluation(ValueError):
    """Evaluation hit a pole or left the real domain of a function."""

    def __init__(self, message: str, subexpr: Expr):
        self.subexpr = subexpr
        super().__init__(f"{message}: {subexpr}")


class Verdict(enum.Enum):
    ZERO = "Zero"
    NONZERO = "NonZero"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class ZeroResult:
    verdict: Verdict
    certification: str  # "symbolic", "numeric" or "none"
    witness: dict | None = None
    max_abs: float = 0.0
    reason: str = ""

    @property
    def is_zero(self) -> bool:
        return self.verdict is Verdict.ZERO

    def __bool__(self) -> bool:  # pragma: no cover - guard against misuse
        raise TypeError("use .is_zero or .verdict on a ZeroResult")


_FUNCS = {"exp": math.exp, "ln": math.log, "sin": math.sin, "cos": math.cos, "sqrt": math.sqrt}


def eval_at(e: Expr, point: Mapping[str, float]) -> float:
    """Evaluate ``e`` at a point; raises SingularEvaluation at poles."""
    memo: dict[Expr, float] = {}

    def go(node: Expr) -> float:
        hit = memo.get(node)
        if hit is not None:
            return hit
        if isinstance(node, Const):
            out = float(node.value)
        elif isinstance(node, Sym):
            try:
                out = float(point[node.name])
            except KeyError:
                raise ValueError(f"evaluation point does not assign {node.name!r}") from None
        elif isinstance(node, Add):
            out = go(node.left) + go(node.right)
        elif isinstance(node, Sub):
            out = go(node.left) - go(node.right)
        elif isinstance(node, Mul):
            out = go(node.left) * go(node.right)
        elif isinstance(node, Div):
            den = go(node.right)
            if den == 0.0:
                raise SingularEvaluation("division by zero", node.right)
            out = go(node.left) / den
        elif isinstance(node, Neg):
            out = -go(node.arg)
        elif isinstance(node, Pow):
            b = go(node.base)
            if b == 0.0 and node.exp < 0:
                raise SingularEvaluation("negative power of zero", node.base)
            out = b ** node.exp
        else:
            a = go(node.arg)
            if node.name == "ln" and a <= 0.0:
                raise SingularEvaluation("logarithm of a non-positive value", node.arg)
            if node.name == "sqrt" and a < 0.0:
                raise SingularEvaluation("square root of a negative value", node.arg)
            try:
                out = _FUNCS[node.name](a)
            except OverflowError:
                raise SingularEvaluation("overflow", node) from None
        memo[node] = out
        return out

    return go(e)


def evaluate(e: Expr, env: Mapping[str, np.ndarray], magnitude: bool = False):
    """Vectorized evaluation over arrays of points.

    Non-finite results are left as nan/inf for the caller to screen.  With
    ``magnitude=True`` a second array is returned with the value obtained by
    replacing every sum and difference with the sum of absolute values, which
    gives the scale against which cancellation is judged.
    """
    memo: dict = {}
    shape = np.shape(next(iter(env.values()))) if env else ()

    def go(node):
        hit = memo.get(node)
        if hit is not None:
            return hit
        if isinstance(node, Const):
            v = np.full(shape, float(node.value))
            out = (v, np.abs(v))
        elif isinstance(node, Sym):
            v = np.asarray(env[node.name], dtype=float)
            out = (v, np.abs(v))
        elif isinstance(node, (Add, Sub)):
            (a, ma), (b, mb) = go(node.left), go(node.right)
            out = (a + b if isinstance(node, Add) else a - b, ma + mb)
        elif isinstance(node, Mul):
            (a, ma), (b, mb) = go(node.left), go(node.right)
            out = (a * b, ma * mb)
        elif isinstance(node, Div):
            (a, ma), (b, mb) = go(node.left), go(node.right)
            out = (a / b, ma / np.abs(b))
        elif isinstance(node, Neg):
            a, ma = go(node.arg)
            out = (-a, ma)
        elif isinstance(node, Pow):
            a, ma = go(node.base)
            v = a ** float(node.exp)
            out = (v, np.abs(v) if node.exp < 0 else ma ** float(node.exp))
        else:
            a, _ = go(node.arg)
            if node.name == "exp":
                v = np.exp(a)
            elif node.name == "ln":
                v = np.log(np.where(a > 0, a, np.nan))
            elif node.name == "sin":
                v = np.sin(a)
            elif node.name == "cos":
                v = np.cos(a)
            else:
                v = np.sqrt(np.where(a >= 0, a, np.nan))
            out = (v, np.abs(v))
        memo[node] = out
        return out

    with np.errstate(all="ignore"):
        v, m = go(e)
    return (v, m) if magnitude else v


@lru_cache(maxsize=100_000)
def guards(e: Expr) -> tuple[tuple[str, Expr], ...]:
    """Subexpressions that must stay away from poles and domain edges."""
    out: list[tuple[str, Expr]] = []
    seen = set()
    for node in e.walk():
        if isinstance(node, Div):
            item = ("nonzero", node.right)
        elif isinstance(node, Pow) and node.exp < 0:
            item = ("nonzero", node.base)
        elif isinstance(node, Func) and node.name == "ln":
            item = ("positive", node.arg)
        elif isinstance(node, Func) and node.name == "sqrt":
            item = ("nonnegative", node.arg)
        else:
            continue
        if item not in seen:
            seen.add(item)
            out.append(item)
    return tuple(out)


@dataclass(frozen=True)
class SamplingPolicy:
    """How random points are drawn for numeric tests."""

    samples: int = 8
    box: tuple[tuple[str, float, float], ...] = ()
    tolerance: float = 1e-9
    seed: int = 0
    exclusions: tuple[Expr, ...] = ()
    exclusion_margin: float = 1e-3
    pole_margin: float = 1e-8
    batch: int = 64
    max_batches: int = 40

    def bounds(self, name: str) -> tuple[float, float]:
        for n, lo, hi in self.box:
            if n == name:
                return lo, hi
        return DEFAULT_BOX

    def with_box(self, box: Mapping[str, tuple[float, float]]) -> "SamplingPolicy":
        items = tuple((n, float(lo), float(hi)) for n, (lo, hi) in box.items())
        return SamplingPolicy(self.samples, items, self.tolerance, self.seed, self.exclusions,
                              self.exclusion_margin, self.pole_margin, self.batch, self.max_batches)

    def replace(self, **kw) -> "SamplingPolicy":
        from dataclasses import replace

        return replace(self, **kw)


def admissible_mask(env: Mapping[str, np.ndarray], guard_list: Iterable[tuple[str, Expr]],
                    policy: SamplingPolicy) -> np.ndarray:
    shape = np.shape(next(iter(env.values())))
    ok = np.ones(shape, dtype=bool)
    for kind, g in guard_list:
        v = evaluate(g, env)
        if kind == "nonzero":
            ok &= np.abs(v) >= policy.pole_margin
        elif kind == "positive":
            ok &= v > policy.pole_margin
        else:
            ok &= v >= 0
        ok &= np.isfinite(v)
    for g in policy.exclusions:
        ok &= np.abs(evaluate(g, env)) > policy.exclusion_margin
    return ok


def sample_points(policy: SamplingPolicy, names: Sequence[str], guard_exprs: Iterable[Expr] = (),
                  count: int | None = None, salt: int = 0) -> dict[str, np.ndarray]:
    """Draw ``count`` admissible points; fewer are returned if the cap is hit."""
    count = policy.samples if count is None else count
    names = list(names)
    needed = set(names)
    glist: list = []
    for g in guard_exprs:
        glist.extend(guards(g))
    for g in policy.exclusions:
        needed |= free_symbols(g)
    for _, g in glist:
        needed |= free_symbols(g)
    all_names = sorted(needed)
    rng = np.random.default_rng([policy.seed, salt])
    chunks: dict[str, list] = {n: [] for n in all_names}
    got = 0
    for _ in range(policy.max_batches):
        env = {n: rng.uniform(*policy.bounds(n), size=policy.batch) for n in all_names}
        mask = admissible_mask(env, glist, policy) if (glist or policy.exclusions) else np.ones(policy.batch, bool)
        idx = np.nonzero(mask)[0][: count - got]
        for n in all_names:
            chunks[n].append(env[n][idx])
        got += len(idx)
        if got >= count:
            break
    return {n: np.concatenate(chunks[n]) if chunks[n] else np.zeros(0) for n in all_names}


def _is_rational_only(e: Expr) -> bool:
    return not any(isinstance(n, Func) for n in e.walk())


def is_zero(e: Expr, policy: SamplingPolicy | None = None) -> ZeroResult:
    """Hybrid zero test: exact normal form first, then random sampling."""
    policy = policy or SamplingPolicy()
    n = normalize(e)
    if isinstance(n, Const):
        if n.value == 0:
            return ZeroResult(Verdict.ZERO, "symbolic")
        return ZeroResult(Verdict.NONZERO, "symbolic", {}, float(abs(n.value)))
    names = sorted(free_symbols(n))
    pts = sample_points(policy, names, (e, n))
    m = len(pts[names[0]]) if names else 0
    if m < policy.samples:
        return ZeroResult(Verdict.UNKNOWN, "none", reason=f"only {m} admissible sample points")
    val, mag = evaluate(n, pts, magnitude=True)
    if not (np.all(np.isfinite(val)) and np.all(np.isfinite(mag))):
        return ZeroResult(Verdict.UNKNOWN, "none", reason="non-finite value at a sample point")
    bound = policy.tolerance * np.maximum(1.0, mag)
    bad = np.abs(val) > bound
    max_abs = float(np.max(np.abs(val))) if m else 0.0
    if np.any(bad):
        i = int(np.argmax(np.abs(val) - bound))
        witness = {k: float(v[i]) for k, v in pts.items()}
        return ZeroResult(Verdict.NONZERO, "numeric", witness, max_abs)
    if _is_rational_only(n):
        # the numerator is an expanded polynomial, so a non-literal-zero
        # normal form is a genuinely nonzero rational function
        return ZeroResult(Verdict.NONZERO, "symbolic", None, max_abs,
                          reason="nonzero rational normal form below sampling tolerance")
    return ZeroResult(Verdict.ZERO, "numeric", None, max_abs)


def combine(results: Iterable[ZeroResult]) -> ZeroResult:
    """All-zero conjunction of several verdicts."""
    results = list(results)
    for r in results:
        if r.verdict is Verdict.NONZERO:
            return r
    for r in results:
        if r.verdict is Verdict.UNKNOWN:
            return r
    numeric = any(r.certification == "numeric" for r in results)
    top = max((r.max_abs for r in results), default=0.0)
    return ZeroResult(Verdict.ZERO, "numeric" if numeric else "symbolic", None, top)


def rational_constant(e: Expr):
    """The exact rational value of ``e`` if it normalizes to a constant."""
    return to_rational(e).constant()
