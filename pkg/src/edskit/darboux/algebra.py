"""Derived tangential algebras, structure constants, fingerprints and normalization."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from ..checks import Check, Status, zero_check
from ..decomposable import DecomposableSystem
from ..expr import Const, Expr, Sym, Verdict, ZeroResult, combine, eval_at, is_zero, normalize, solve, substitute
from ..expr.numeric import rational_constant
from ..geometry import Chart, VectorField, contained, generic_rank, lie_bracket
from ..linalg import nullspace_exact, nullspace_float, rank_exact, rank_float, rref
from .projection import DarbouxProjection, LiftedFrame


class SpanDeficiency(RuntimeError):
    """Brackets of the lifted frame stop producing new vertical directions before rank s."""


class NotClosed(ValueError):
    """A bracket of frame fields is not a combination of the frame."""


class JacobiViolation(ValueError):
    pass


class NotImplementedForType(NotImplementedError):
    """The algebra lies outside the normalization catalog."""


Structure = list[list[list[Expr]]]


@dataclass
class LieAlgebraPresentation:
    """A frame X_1..X_m with [X_i, X_j] = sum_k structure[i][j][k] X_k."""

    chart: Chart
    frame: tuple[VectorField, ...]
    structure: Structure
    side: str = "F"
    labels: tuple[str, ...] = ()

    @property
    def dim(self) -> int:
        return len(self.frame)

    @property
    def constants(self) -> list[list[list[Fraction]]] | None:
        """Exact structure constants when every coefficient is a rational number."""
        out = []
        for row in self.structure:
            r2 = []
            for col in row:
                vals = [rational_constant(e) for e in col]
                if any(v is None for v in vals):
                    return None
                r2.append(vals)
            out.append(r2)
        return out

    def constants_at(self, point: Mapping[str, float]) -> np.ndarray:
        m = self.dim
        c = np.zeros((m, m, m))
        for i in range(m):
            for j in range(m):
                for k in range(m):
                    e = self.structure[i][j][k]
                    c[i, j, k] = float(e.value) if isinstance(e, Const) else eval_at(e, point)
        return c

    def structure_text(self) -> list[list[list[str]]]:
        return [[[str(e) for e in col] for col in row] for row in self.structure]


def structure_constants(frame: Sequence[VectorField], chart: Chart | None = None) -> Structure:
    """Solve [X_i, X_j] in the frame; the lower triangle is filled by negation."""
    frame = list(frame)
    m = len(frame)
    if m == 0:
        return []
    chart = chart or frame[0].chart
    zero = Const(0)
    c: Structure = [[[zero] * m for _ in range(m)] for _ in range(m)]
    guard = tuple(e for X in frame for e in X.guard_exprs())
    env = chart.sample(guard)
    A = [[X.coeffs[r] for X in frame] for r in range(chart.n)]
    for i in range(m):
        for j in range(i + 1, m):
            B = lie_bracket(frame[i], frame[j])
            if B.is_zero_literal():
                continue
            sol = solve(A, list(B.coeffs), env, chart.policy)
            if sol.residual.verdict is not Verdict.ZERO:
                raise NotClosed(f"[X{i + 1},X{j + 1}] is not in the span of the frame "
                                f"({sol.residual.verdict.value})")
            for k, v in enumerate(sol.values):
                c[i][j][k] = v
                c[j][i][k] = normalize(-v)
    return c


def presentation_from_frame(frame: Sequence[VectorField], side: str = "F",
                            labels: Sequence[str] = ()) -> LieAlgebraPresentation:
    frame = tuple(frame)
    if not frame:
        raise ValueError("empty frame needs an explicit chart; use an empty presentation")
    chart = frame[0].chart
    labels = tuple(labels) or tuple(f"X{i + 1}" for i in range(len(frame)))
    return LieAlgebraPresentation(chart, frame, structure_constants(frame, chart), side, labels)


def derived_tangential_frame(lift: LiftedFrame, side: str = "F") -> LieAlgebraPresentation:
    """Frame of the derived algebra generated by one side of the lifted frame.

    Right-normed brackets [g_a, [g_b, ...]] of the lifts are collected while
    they raise the rank, until the rank reaches the fiber dimension s.
    """
    proj = lift.projection
    chart = proj.system.chart
    s = proj.s
    gens = list(lift.side(side))
    names = [f"{side}{i + 1}" for i in range(len(gens))]
    if s == 0:
        return LieAlgebraPresentation(chart, (), [], side, ())
    env = chart.sample(tuple(e for X in gens for e in X.guard_exprs()))
    kept: list[VectorField] = []
    labels: list[str] = []
    rank = 0
    level = [(lie_bracket(gens[i], gens[j]), f"[{names[i]},{names[j]}]")
             for i in range(len(gens)) for j in range(i + 1, len(gens))]
    depth = 1
    while level and rank < s and depth <= s + 1:
        fresh = []
        for V, lab in level:
            if V.is_zero_literal():
                continue
            r = generic_rank(kept + [V], env)
            if r > rank:
                kept.append(V)
                labels.append(lab)
                fresh.append((V, lab))
                rank = r
                if rank == s:
                    break
        level = [(lie_bracket(g, V), f"[{n},{lab}]") for g, n in zip(gens, names) for V, lab in fresh]
        depth += 1
    if rank < s:
        raise SpanDeficiency(f"brackets of the {side}-lifts span rank {rank} < s = {s}")
    frame = tuple(kept)
    return LieAlgebraPresentation(chart, frame, structure_constants(frame, chart), side, tuple(labels))


def coefficients_depend_only_on_base1(pres: LieAlgebraPresentation, proj: DarbouxProjection) -> ZeroResult:
    """Zero iff the structure coefficients are annihilated by the other side
    and by the fiber directions.

    For side F these are the generators of G and a frame of ker dpi, so the
    coefficients are functions of the B1 coordinates; side G is symmetric.
    """
    sys = proj.system
    other = sys.G if pres.side == "F" else sys.F
    derivations = list(other.generators) + list(proj.vertical)
    policy = sys.chart.policy
    results = []
    for row in pres.structure:
        for col in row:
            for e in col:
                if isinstance(e, Const):
                    continue
                results.extend(is_zero(D(e), policy) for D in derivations)
    return combine(results) if results else ZeroResult(Verdict.ZERO, "symbolic")


def verify_tangential_symmetry(X: VectorField, sys: DecomposableSystem, proj: DarbouxProjection,
                               side: str = "F") -> Check:
    """X is vertical for the projection and [X, D] stays inside D."""
    D = sys.F if side == "F" else sys.G
    policy = sys.chart.policy
    parts = [proj.pi.is_vertical(X, policy)]
    for Y in D.generators:
        parts.append(contained(lie_bracket(X, Y), D, policy).result)
    res = combine(parts)
    return zero_check(f"{X.text()} is a tangential symmetry of {side}", res)


# ---- fingerprints ----------------------------------------------------------

@dataclass(frozen=True)
class Fingerprint:
    dimension: int
    derived_series: tuple[int, ...]
    lower_central_series: tuple[int, ...]
    center_dimension: int
    killing_rank: int
    killing_signature: tuple[int, int, int]
    abelian: bool
    center_basis: tuple[tuple, ...] = field(default=(), compare=False)

    def to_dict(self) -> dict:
        return {"dim": self.dimension, "derived_series": list(self.derived_series),
                "lower_central_series": list(self.lower_central_series),
                "center_dim": self.center_dimension,
                "center_basis": [[str(x) for x in v] for v in self.center_basis],
                "killing_rank": self.killing_rank,
                "killing_signature": list(self.killing_signature), "abelian": self.abelian}


class _Exact:
    tol = 0

    @staticmethod
    def rank(rows):
        return rank_exact(rows) if rows else 0

    @staticmethod
    def basis(rows):
        if not rows:
            return []
        R, piv = rref(rows)
        return R[:len(piv)]

    @staticmethod
    def null(rows, n):
        return nullspace_exact(rows, n)

    @staticmethod
    def is_zero(x):
        return x == 0


class _Float:
    def __init__(self, tol: float):
        self.tol = tol

    def rank(self, rows):
        return rank_float(rows, self.tol) if rows else 0

    def basis(self, rows):
        if not rows:
            return []
        M = np.asarray(rows, dtype=float)
        _, s, vt = np.linalg.svd(M)
        r = int(np.sum(s > self.tol * max(1.0, s[0])))
        return [list(v) for v in vt[:r]]

    def null(self, rows, n):
        return [list(v) for v in nullspace_float(rows, n, self.tol)]

    def is_zero(self, x):
        return abs(x) <= self.tol


def _bracket(c, u, v):
    m = len(u)
    return [sum(u[i] * v[j] * c[i][j][k] for i in range(m) for j in range(m)
                if u[i] != 0 and v[j] != 0) for k in range(m)]


def _series(c, ops, lower: bool) -> tuple[int, ...]:
    m = len(c)
    full = [[1 if i == j else 0 for i in range(m)] for j in range(m)]
    cur = full
    dims = [m]
    while dims[-1] > 0:
        left = full if lower else cur
        prods = [_bracket(c, a, b) for a in left for b in cur]
        cur = ops.basis(prods)
        d = len(cur)
        if d == dims[-1]:
            break
        dims.append(d)
    return tuple(dims)


def _signature_exact(K) -> tuple[int, int, int]:
    """Inertia of a symmetric rational matrix by congruence diagonalization."""
    M = [list(r) for r in K]
    n = len(M)
    pos = neg = 0
    active = list(range(n))
    while active:
        p = next((i for i in active if M[i][i] != 0), None)
        if p is None:
            pair = next(((i, j) for i in active for j in active if i != j and M[i][j] != 0), None)
            if pair is None:
                break
            i, j = pair
            # row/col i += row/col j makes the diagonal entry 2 M[i][j] + M[j][j]
            for r in range(n):
                M[i][r] += M[j][r]
            for r in range(n):
                M[r][i] += M[r][j]
            continue
        d = M[p][p]
        pos += d > 0
        neg += d < 0
        for i in active:
            if i != p and M[i][p] != 0:
                f = M[i][p] / d
                for r in range(n):
                    M[i][r] -= f * M[p][r]
                for r in range(n):
                    M[r][i] -= f * M[r][p]
        active.remove(p)
    return (pos, neg, n - pos - neg)


def _check_jacobi(c, ops) -> None:
    m = len(c)
    e = [[1 if i == j else 0 for i in range(m)] for j in range(m)]
    for a in range(m):
        for b in range(a + 1, m):
            for d in range(b + 1, m):
                t1 = _bracket(c, e[a], _bracket(c, e[b], e[d]))
                t2 = _bracket(c, e[b], _bracket(c, e[d], e[a]))
                t3 = _bracket(c, e[d], _bracket(c, e[a], e[b]))
                for x, y, z in zip(t1, t2, t3):
                    if not ops.is_zero(x + y + z):
                        raise JacobiViolation(f"Jacobi fails for ({a + 1},{b + 1},{d + 1}): {x + y + z}")


def fingerprint_constants(c, tol: float | None = None) -> Fingerprint:
    """Fingerprint of structure constants c[i][j][k] (Fractions exact, floats with tol)."""
    exact = tol is None
    if exact:
        c = [[[Fraction(x) for x in col] for col in row] for row in c]
        ops = _Exact
    else:
        c = np.asarray(c, dtype=float).tolist()
        ops = _Float(tol)
    m = len(c)
    for i in range(m):
        for j in range(m):
            for k in range(m):
                if not ops.is_zero(c[i][j][k] + c[j][i][k]):
                    raise JacobiViolation(f"structure constants not antisymmetric at ({i + 1},{j + 1},{k + 1})")
    _check_jacobi(c, ops)
    derived = _series(c, ops, lower=False)
    lower = _series(c, ops, lower=True)
    rows = [[c[i][j][k] for i in range(m)] for j in range(m) for k in range(m)]
    center = ops.null(rows, m) if m else []
    # Killing form K_ab = sum_{j,k} c[a][j][k] c[b][k][j]
    K = [[sum(c[a][j][k] * c[b][k][j] for j in range(m) for k in range(m)) for b in range(m)]
         for a in range(m)]
    if exact:
        krank = rank_exact(K) if m else 0
        sig = _signature_exact(K)
    else:
        Kf = np.asarray(K, dtype=float).reshape(m, m)
        ev = np.linalg.eigvalsh(Kf) if m else np.zeros(0)
        scale = tol * max(1.0, float(np.max(np.abs(ev)))) if m else 0.0
        pos, neg = int(np.sum(ev > scale)), int(np.sum(ev < -scale))
        sig = (pos, neg, m - pos - neg)
        krank = pos + neg
    abelian = all(ops.is_zero(x) for row in c for col in row for x in col)
    return Fingerprint(m, derived, lower, len(center), krank, sig, abelian, tuple(tuple(v) for v in center))


def fingerprint(pres: LieAlgebraPresentation, point: Mapping[str, float] | None = None,
                tol: float = 1e-9) -> Fingerprint:
    """Exact fingerprint for constant structure, otherwise the one at ``point``."""
    const = pres.constants
    if const is not None:
        return fingerprint_constants(const)
    if point is None:
        raise ValueError("structure coefficients vary; give a point to fingerprint the fiber algebra")
    return fingerprint_constants(pres.constants_at(point), tol)


# ---- normalization ---------------------------------------------------------

@dataclass
class Normalized:
    presentation: LieAlgebraPresentation
    mu: list[list[Expr]]
    reference: dict[str, Fraction]
    method: str
    checks: list[Check] = field(default_factory=list)


def _identity(m: int) -> list[list[Expr]]:
    return [[Const(int(i == j)) for j in range(m)] for i in range(m)]


def _combine_frame(mu, frame, chart) -> tuple[VectorField, ...]:
    out = []
    for row in mu:
        Y = VectorField.zero(chart)
        for a, X in zip(row, frame):
            if not (isinstance(a, Const) and a.value == 0):
                Y = Y + X.scale(a)
        out.append(Y)
    return tuple(out)


def normalize_structure(pres: LieAlgebraPresentation, proj: DarbouxProjection | None = None) -> Normalized:
    """Rotate the frame fiberwise by mu(b1) so the structure is constant.

    Catalog: constant structure and abelian algebras (mu = identity) and
    two-dimensional non-abelian algebras, where [X1, X2] = w.X with w a
    function on B1.  For Y = mu X with mu depending on B1 only,
    [Y1, Y2] = det(mu) (w mu^-1).Y, and mu = B(w0)^-1 B(w) with
    B(w) = [[a, b], [-b, a]/|w|^2] gives det mu = 1 and w mu^-1 = w0, the
    value at the reference fiber over the box centre.
    """
    chart = pres.chart
    ref = chart.center()
    m = pres.dim
    if pres.constants is not None:
        return Normalized(pres, _identity(m), ref, "identity (constant structure)")
    if m != 2:
        raise NotImplementedForType(f"non-constant structure in dimension {m} is outside the catalog")
    a, b = pres.structure[0][1]
    # mu is built from the coefficients, so the frame must not see them
    flat = combine([is_zero(X(e), chart.policy) for X in pres.frame for e in (a, b)])
    if proj is not None:
        flat = combine([flat, coefficients_depend_only_on_base1(pres, proj)])
    if flat.verdict is not Verdict.ZERO:
        raise ValueError("structure coefficients vary along the fibers; cannot normalize")
    at_ref = {n: Const(v) for n, v in ref.items()}
    a0, b0 = substitute(a, at_ref), substitute(b, at_ref)
    n2 = normalize(a * a + b * b)
    n20 = normalize(a0 * a0 + b0 * b0)
    if is_zero(n20).verdict is Verdict.ZERO:
        raise NotImplementedForType("structure degenerates at the reference fiber")
    # det B0 = 1, so its inverse is the adjugate
    B = [[a, b], [normalize(-b / n2), normalize(a / n2)]]
    B0inv = [[normalize(a0 / n20), normalize(-b0)], [normalize(b0 / n20), a0]]
    mu = [[normalize(sum((B0inv[i][t] * B[t][j] for t in range(2)), Const(0))) for j in range(2)]
          for i in range(2)]
    frame = _combine_frame(mu, pres.frame, chart)
    new = LieAlgebraPresentation(chart, frame, structure_constants(frame, chart), pres.side,
                                 tuple(f"Y{i + 1}" for i in range(2)))
    target = [a0, b0]
    checks = [zero_check(f"c^{k + 1}_12 equals its reference value",
                         is_zero(new.structure[0][1][k] - target[k], chart.policy)) for k in range(2)]
    return Normalized(new, mu, ref, "two-dimensional alignment", checks)


# ---- symmetries of both sides ----------------------------------------------

@dataclass
class SymmetryReport:
    fields: list[VectorField]
    rejected: list[VectorField]
    checks: list[Check]

    @property
    def status(self) -> Status:
        return Status.all_of(c.status for c in self.checks)


def _orient(X: VectorField, point: Mapping[str, float]) -> VectorField:
    for e in X.coeffs:
        if isinstance(e, Const):
            if e.value != 0:
                return -X if e.value < 0 else X
            continue
        v = eval_at(e, point)
        if v != 0:
            return -X if v < 0 else X
    return X


def system_symmetries(pres: LieAlgebraPresentation, sys: DecomposableSystem,
                      proj: DarbouxProjection) -> SymmetryReport:
    """Center of a constant-structure presentation, kept where it is a
    tangential symmetry of both F and G."""
    const = pres.constants
    if const is None:
        raise ValueError("normalize the presentation first (structure is not constant)")
    if pres.dim == 0:
        return SymmetryReport([], [], [])
    fp = fingerprint_constants(const)
    chart = pres.chart
    point = {k: float(v) for k, v in chart.center().items()}
    fields, rejected, checks = [], [], []
    for vec in fp.center_basis:
        X = _orient(_combine_frame([[Const(v) for v in vec]], pres.frame, chart)[0], point)
        cs = [verify_tangential_symmetry(X, sys, proj, side) for side in ("F", "G")]
        checks.extend(cs)
        (fields if all(c.ok for c in cs) else rejected).append(X)
    return SymmetryReport(fields, rejected, checks)
