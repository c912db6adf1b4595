"""Vector fields and distributions on a single coordinate chart."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .checks import Status
from .expr import (Add, Const, Neg, Sub, Expr, SamplingPolicy, SingularSystem, Sym, SymbolTable, Verdict,
                   ZeroResult, combine, differentiate, eval_at, free_symbols, is_zero, normalize,
                   parse_expr, parse_vector_field, sample_points, solve, substitute, ZERO)
from .expr.numeric import evaluate
from .expr.normal import to_rational

RANK_THRESHOLD = 1e-9


class CompletionError(RuntimeError):
    """Rank kept growing past the chart dimension."""


class NotASubmersion(ValueError):
    pass


@dataclass(frozen=True)
class Chart:
    """Ordered coordinates plus the sampling policy used for numeric tests."""

    coordinates: tuple[str, ...]
    policy: SamplingPolicy = SamplingPolicy()
    parameters: tuple[str, ...] = ()
    definitions: tuple[tuple[str, Expr], ...] = ()

    def __post_init__(self):
        if not self.coordinates:
            raise ValueError("a chart needs at least one coordinate")
        if len(set(self.coordinates)) != len(self.coordinates):
            raise ValueError("coordinate names must be unique")

    @classmethod
    def make(cls, coordinates: Sequence[str] | str, box: Mapping[str, tuple[float, float]] | None = None,
             exclusions: Sequence[Expr | str] = (), seed: int = 0, samples: int = 8,
             tolerance: float = 1e-9, parameters: Sequence[str] = ()) -> "Chart":
        if isinstance(coordinates, str):
            coordinates = coordinates.replace(",", " ").split()
        coords = tuple(coordinates)
        table = SymbolTable.of(coords, parameters)
        excl = tuple(parse_expr(e, table) if isinstance(e, str) else e for e in exclusions)
        policy = SamplingPolicy(samples=samples, tolerance=tolerance, seed=seed, exclusions=excl)
        if box:
            policy = policy.with_box(box)
        return cls(coords, policy, tuple(parameters))

    @property
    def n(self) -> int:
        return len(self.coordinates)

    @property
    def table(self) -> SymbolTable:
        return SymbolTable(self.coordinates, self.parameters, self.definitions)

    def expr(self, text: str) -> Expr:
        return normalize(parse_expr(text, self.table))

    def field(self, text: str) -> "VectorField":
        return VectorField.from_map(self, parse_vector_field(text, self.table))

    def coordinate_field(self, name: str) -> "VectorField":
        return VectorField.from_map(self, {name: Const(1)})

    def sample(self, guard_exprs: Iterable[Expr] = (), count: int | None = None, salt: int = 0) -> dict[str, np.ndarray]:
        names = self.coordinates + self.parameters
        return sample_points(self.policy, names, tuple(guard_exprs), count, salt)

    def center(self) -> dict[str, Fraction]:
        out = {}
        for c in self.coordinates + self.parameters:
            lo, hi = self.policy.bounds(c)
            out[c] = Fraction((lo + hi) / 2).limit_denominator(1000)
        return out

    def with_policy(self, policy: SamplingPolicy) -> "Chart":
        return Chart(self.coordinates, policy, self.parameters, self.definitions)


@dataclass(frozen=True)
class VectorField:
    """Coordinate-frame coefficients, normalized at construction."""

    chart: Chart
    coeffs: tuple[Expr, ...]

    def __post_init__(self):
        if len(self.coeffs) != self.chart.n:
            raise ValueError("coefficient count must equal the chart dimension")
        object.__setattr__(self, "coeffs", tuple(normalize(c) for c in self.coeffs))

    @classmethod
    def from_map(cls, chart: Chart, terms: Mapping[str, Expr]) -> "VectorField":
        unknown = set(terms) - set(chart.coordinates)
        if unknown:
            raise ValueError(f"not chart coordinates: {sorted(unknown)}")
        return cls(chart, tuple(terms.get(c, ZERO) for c in chart.coordinates))

    @classmethod
    def zero(cls, chart: Chart) -> "VectorField":
        return cls(chart, (ZERO,) * chart.n)

    def __call__(self, f: Expr) -> Expr:
        """Directional derivative X(f)."""
        out = ZERO
        for c, a in zip(self.chart.coordinates, self.coeffs):
            if a != ZERO:
                out = out + a * differentiate(f, c)
        return normalize(out)

    def component(self, name: str) -> Expr:
        return self.coeffs[self.chart.coordinates.index(name)]

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.chart, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.chart, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> "VectorField":
        return VectorField(self.chart, tuple(-a for a in self.coeffs))

    def scale(self, f: Expr | int | Fraction) -> "VectorField":
        f = f if isinstance(f, Expr) else Const(f)
        return VectorField(self.chart, tuple(f * a for a in self.coeffs))

    def is_zero_literal(self) -> bool:
        return all(a == ZERO for a in self.coeffs)

    def zero_test(self, policy: SamplingPolicy | None = None) -> ZeroResult:
        policy = policy or self.chart.policy
        return combine(is_zero(a, policy) for a in self.coeffs if a != ZERO)

    def evaluate(self, env: Mapping[str, np.ndarray]) -> np.ndarray:
        m = len(next(iter(env.values())))
        out = np.zeros((self.chart.n, m))
        for i, a in enumerate(self.coeffs):
            if a != ZERO:
                out[i] = evaluate(a, env)
        return out

    def at(self, point: Mapping[str, float]) -> np.ndarray:
        return np.array([eval_at(a, point) for a in self.coeffs])

    def support(self) -> tuple[str, ...]:
        return tuple(c for c, a in zip(self.chart.coordinates, self.coeffs) if a != ZERO)

    def text(self) -> str:
        out = ""
        for c, a in zip(self.chart.coordinates, self.coeffs):
            if a == ZERO:
                continue
            sign = "+"
            if isinstance(a, Neg):
                sign, a = "-", a.arg
            if a == Const(1):
                term = f"d/d{c}"
            elif isinstance(a, (Add, Sub)):
                term = f"({a})*d/d{c}"
            else:
                term = f"{a}*d/d{c}"
            if not out:
                out = term if sign == "+" else f"-{term}"
            else:
                out += f" {sign} {term}"
        return out or "0"

    def __str__(self) -> str:
        return self.text()

    def guard_exprs(self) -> tuple[Expr, ...]:
        return tuple(a for a in self.coeffs if a != ZERO)


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """[X, Y]^i = X(Y^i) - Y(X^i)."""
    if X.chart.coordinates != Y.chart.coordinates:
        raise ValueError("fields live on different charts")
    return VectorField(X.chart, tuple(X(b) - Y(a) for a, b in zip(X.coeffs, Y.coeffs)))


def frame_matrix(fields: Sequence[VectorField], env: Mapping[str, np.ndarray]) -> np.ndarray:
    """Array of shape (points, n, len(fields))."""
    if not fields:
        m = len(next(iter(env.values())))
        return np.zeros((m, 0, 0))
    cols = [f.evaluate(env) for f in fields]
    return np.stack(cols, axis=-1).transpose(1, 0, 2)


def numeric_rank(M: np.ndarray, threshold: float = RANK_THRESHOLD) -> int:
    if M.size == 0:
        return 0
    if not np.all(np.isfinite(M)):
        return -1
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > threshold * s[0]))


def ranks_at(fields: Sequence[VectorField], env: Mapping[str, np.ndarray]) -> list[int]:
    mats = frame_matrix(fields, env)
    return [numeric_rank(M) if M.size else 0 for M in mats]


def generic_rank(fields: Sequence[VectorField], env: Mapping[str, np.ndarray]) -> int:
    r = ranks_at(fields, env)
    return max(r) if r else 0


def independent_subset(fields: Sequence[VectorField], env: Mapping[str, np.ndarray]) -> list[int]:
    """Indices of a maximal generically independent subfamily (greedy, in order)."""
    keep: list[int] = []
    rank = 0
    for i, f in enumerate(fields):
        r = generic_rank([fields[j] for j in keep] + [f], env)
        if r > rank:
            keep.append(i)
            rank = r
    return keep


@dataclass(frozen=True)
class RankProfile:
    generic: int
    per_point: tuple[int, ...]

    @property
    def constant(self) -> bool:
        return all(r == self.generic for r in self.per_point)

    @property
    def anomalies(self) -> tuple[int, ...]:
        return tuple(i for i, r in enumerate(self.per_point) if r != self.generic)


class Distribution:
    """A span of vector fields, with the generic rank read off at sample points."""

    def __init__(self, chart: Chart, generators: Sequence[VectorField], name: str = ""):
        for g in generators:
            if g.chart.coordinates != chart.coordinates:
                raise ValueError("generator lives on a different chart")
        self.chart = chart
        self.generators = tuple(generators)
        self.name = name
        self._profile: RankProfile | None = None
        self._env = None

    def __repr__(self) -> str:
        return f"Distribution({self.name or '?'}, {len(self.generators)} generators)"

    def __iter__(self):
        return iter(self.generators)

    def __len__(self) -> int:
        return len(self.generators)

    def guard_exprs(self) -> tuple[Expr, ...]:
        return tuple(e for g in self.generators for e in g.guard_exprs())

    @property
    def env(self) -> dict[str, np.ndarray]:
        if self._env is None:
            self._env = self.chart.sample(self.guard_exprs())
        return self._env

    @property
    def profile(self) -> RankProfile:
        if self._profile is None:
            r = ranks_at(self.generators, self.env)
            self._profile = RankProfile(max(r) if r else 0, tuple(r))
        return self._profile

    @property
    def rank(self) -> int:
        return self.profile.generic

    def frame(self) -> list[VectorField]:
        return [self.generators[i] for i in independent_subset(self.generators, self.env)]


def completion(D: Distribution, cap: int | None = None) -> Distribution:
    """Bracket closure: adjoin brackets until the generic rank stops growing."""
    env = D.env
    cap = D.chart.n if cap is None else cap
    frame = D.frame()
    rank = generic_rank(frame, env)
    added: list[VectorField] = []
    done: set[tuple[int, int]] = set()
    rounds = 0
    while True:
        new: list[VectorField] = []
        for j in range(len(frame)):
            for i in range(j):
                if (i, j) in done:
                    continue
                done.add((i, j))
                B = lie_bracket(frame[i], frame[j])
                if B.is_zero_literal():
                    continue
                r = generic_rank(frame + new + [B], env)
                if r > rank:
                    new.append(B)
                    rank = r
        if not new:
            break
        rounds += 1
        if rounds > cap:
            raise CompletionError(f"rank still growing after {cap} rounds")
        frame += new
        added += new
        if rank == D.chart.n:
            break
    out = Distribution(D.chart, D.generators + tuple(added), f"completion({D.name})" if D.name else "")
    out._env = env
    return out


def count_invariants(D: Distribution) -> int:
    return D.chart.n - completion(D).rank


@dataclass(frozen=True)
class InvariantCheck:
    result: ZeroResult
    per_generator: tuple[ZeroResult, ...]

    @property
    def verdict(self) -> Verdict:
        return self.result.verdict


def verify_invariant(D: Distribution, I: Expr, policy: SamplingPolicy | None = None) -> InvariantCheck:
    policy = policy or D.chart.policy
    per = tuple(is_zero(X(I), policy) for X in D.generators)
    return InvariantCheck(combine(per), per)


def jacobian(funcs: Sequence[Expr], coordinates: Sequence[str]) -> list[list[Expr]]:
    return [[differentiate(f, c) for c in coordinates] for f in funcs]


def functionally_independent(funcs: Sequence[Expr], point: Mapping[str, float],
                             coordinates: Sequence[str] | None = None) -> bool:
    """Full row rank of the Jacobian at ``point`` (relative SVD threshold)."""
    coordinates = list(coordinates or point.keys())
    J = np.array([[eval_at(d, point) for d in row] for row in jacobian(funcs, coordinates)])
    if J.size == 0:
        return True
    return numeric_rank(J) == len(funcs)


@dataclass(frozen=True)
class Containment:
    result: ZeroResult
    coefficients: tuple[Expr, ...] = ()
    basis: tuple[VectorField, ...] = ()

    @property
    def verdict(self) -> Verdict:
        return self.result.verdict


def contained(X: VectorField, D: Distribution | Sequence[VectorField],
              policy: SamplingPolicy | None = None) -> Containment:
    """Decide X in D pointwise by solving for coefficients in a frame of D.

    The frame is chosen numerically; the coefficients are exact and the rows
    not used by the solve are checked with the zero test.
    """
    if not isinstance(D, Distribution):
        D = Distribution(X.chart, list(D))
    policy = policy or X.chart.policy
    frame = D.frame()
    if not frame:
        return Containment(X.zero_test(policy))
    env = X.chart.sample(D.guard_exprs() + X.guard_exprs())
    A = [[f.coeffs[i] for f in frame] for i in range(X.chart.n)]
    try:
        sol = solve(A, list(X.coeffs), env, policy)
    except SingularSystem:
        return Containment(ZeroResult(Verdict.UNKNOWN, "none", reason="degenerate frame"))
    return Containment(sol.residual, sol.values, tuple(frame))


def contained_numeric(X: VectorField, D: Distribution, env: Mapping[str, np.ndarray] | None = None) -> bool:
    """Pointwise rank test: rank([D | X]) == rank(D) at every sample point."""
    env = env or D.env
    base = ranks_at(list(D.generators), env)
    ext = ranks_at(list(D.generators) + [X], env)
    return all(a == b for a, b in zip(base, ext))


class Submersion:
    """A map from a chart to target coordinates given by component functions."""

    def __init__(self, source: Chart, target: Sequence[str], components: Sequence[Expr]):
        if len(target) != len(components):
            raise ValueError("one component per target coordinate")
        self.source = source
        self.target = Chart(tuple(target))
        self.components = tuple(normalize(c) for c in components)
        self._kernel: list[VectorField] | None = None
        self._section: dict[str, Expr] | None = None

    @property
    def m(self) -> int:
        return len(self.components)

    def jacobian(self) -> list[list[Expr]]:
        return jacobian(self.components, self.source.coordinates)

    def pushforward(self, X: VectorField) -> tuple[Expr, ...]:
        """Components of dpi(X) as functions on the source."""
        return tuple(X(c) for c in self.components)

    def is_vertical(self, X: VectorField, policy: SamplingPolicy | None = None) -> ZeroResult:
        policy = policy or self.source.policy
        return combine(is_zero(c, policy) for c in self.pushforward(X))

    def pullback(self, f: Expr) -> Expr:
        return substitute(f, dict(zip(self.target.coordinates, self.components)))

    def pull_field(self, Y: VectorField) -> tuple[Expr, ...]:
        """Target field coefficients composed with the map."""
        return tuple(self.pullback(a) for a in Y.coeffs)

    def _env(self):
        return self.source.sample(self.components)

    def pivot_columns(self) -> list[int]:
        J = self.jacobian()
        env = self._env()
        num = np.stack([np.stack([evaluate(d, env) for d in row]) for row in J]).transpose(2, 0, 1) \
            if J else np.zeros((1, 0, self.source.n))

        def prefer(col: int):
            entries = [J[a][col] for a in range(self.m)]
            const = all(isinstance(e, Const) for e in entries)
            return (not const, -float(np.max(np.abs(num[:, :, col]))))

        chosen: list[int] = []
        rank = 0
        for col in sorted(range(self.source.n), key=prefer):
            r = max(numeric_rank(M[:, chosen + [col]]) for M in num)
            if r > rank:
                chosen.append(col)
                rank = r
            if rank == self.m:
                break
        if rank < self.m:
            raise NotASubmersion(f"Jacobian has generic rank {rank} < {self.m}")
        return sorted(chosen)

    def kernel(self) -> list[VectorField]:
        """A frame of ker dpi: one field per non-pivot coordinate."""
        if self._kernel is not None:
            return self._kernel
        J = self.jacobian()
        piv = self.pivot_columns()
        free = [c for c in range(self.source.n) if c not in piv]
        env = self._env()
        out = []
        for q in free:
            coeffs = [ZERO] * self.source.n
            coeffs[q] = Const(1)
            if piv:
                A = [[J[a][p] for p in piv] for a in range(self.m)]
                b = [-J[a][q] for a in range(self.m)]
                sol = solve(A, b, env, self.source.policy, check=False)
                for p, v in zip(piv, sol.values):
                    coeffs[p] = v
            out.append(VectorField(self.source, tuple(coeffs)))
        self._kernel = out
        return out

    def section(self) -> dict[str, Expr] | None:
        """Express pivot coordinates through target coordinates when each
        component is linear with constant slope in its own source coordinate."""
        if self._section is not None:
            return self._section
        used: set[str] = set()
        solved: dict[str, Expr] = {}
        for k, comp in enumerate(self.components):
            y = f"_target{k}"
            pick = None
            for c in self.source.coordinates:
                if c in used or c not in free_symbols(comp):
                    continue
                d = to_rational(differentiate(comp, c)).constant()
                if d is not None and d != 0:
                    pick = (c, d)
                    break
            if pick is None:
                return None
            c, d = pick
            used.add(c)
            rest = normalize(comp - Const(d) * Sym(c))
            solved[c] = normalize((Sym(y) - rest) / Const(d))
        for _ in range(len(solved) + 1):
            pending = {c: e for c, e in solved.items() if free_symbols(e) & set(solved)}
            if not pending:
                break
            solved = {c: substitute(e, solved) for c, e in solved.items()}
        else:
            return None
        if any(free_symbols(e) & set(solved) for e in solved.values()):
            return None
        self._section = solved
        return solved

    def descend(self, f: Expr) -> Expr | None:
        """Rewrite a fiber-constant function in target coordinates."""
        sec = self.section()
        if sec is None:
            return None
        g = substitute(f, sec)
        placeholders = {f"_target{k}": Sym(y) for k, y in enumerate(self.target.coordinates)}
        leftover = free_symbols(g) - set(placeholders)
        if leftover:
            center = self.source.center()
            g = substitute(g, {c: Const(center[c]) for c in leftover})
        return substitute(g, placeholders)


@dataclass(frozen=True)
class Projection:
    status: Status
    field: VectorField | None
    components: tuple[Expr, ...]
    fiber_checks: tuple[ZeroResult, ...] = ()

    @property
    def projectable(self) -> bool:
        return self.status is Status.OK


def project_field(X: VectorField, pi: Submersion, policy: SamplingPolicy | None = None) -> Projection:
    """Push X forward if dpi(X) is constant along the fibers of pi.

    NotProjectable is ``Status.FAIL``; an Unknown fiber derivative gives
    ``Status.INDETERMINATE``, never a positive answer.
    """
    policy = policy or X.chart.policy
    comps = pi.pushforward(X)
    checks = tuple(is_zero(K(c), policy) for K in pi.kernel() for c in comps)
    status = Status.from_zero(combine(checks)) if checks else Status.OK
    target = None
    if status is Status.OK:
        down = [pi.descend(c) for c in comps]
        if all(d is not None for d in down):
            target = VectorField(pi.target, tuple(down))
    return Projection(status, target, comps, checks)
