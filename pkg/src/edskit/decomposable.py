"""Decomposable systems given by a pair of distributions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .checks import Check, Status, zero_check
from .expr import Sym, Verdict, ZERO, solve
from .geometry import (Chart, Distribution, VectorField, completion, contained, lie_bracket,
                       numeric_rank, ranks_at)


class FrameDegeneracy(ValueError):
    """A leading frame field vanishes at a sample point."""


@dataclass
class DecomposableSystem:
    chart: Chart
    F: Distribution
    G: Distribution
    name: str = ""

    def __post_init__(self):
        if not isinstance(self.F, Distribution):
            self.F = Distribution(self.chart, list(self.F), "F")
        if not isinstance(self.G, Distribution):
            self.G = Distribution(self.chart, list(self.G), "G")
        self._V: Distribution | None = None

    @property
    def k(self) -> int:
        return self.F.rank

    @property
    def l(self) -> int:
        return self.G.rank

    @property
    def s(self) -> int:
        return self.chart.n - self.k - self.l

    @property
    def klass(self) -> tuple[int, int, int]:
        return (self.s, self.k, self.l)

    @property
    def V(self) -> Distribution:
        if self._V is None:
            self._V = Distribution(self.chart, self.F.generators + self.G.generators, "V")
        return self._V

    def swapped(self) -> "DecomposableSystem":
        return DecomposableSystem(self.chart, self.G, self.F, self.name)


@dataclass
class DecompositionReport:
    status: Status
    klass: tuple[int, int, int]
    no_invariants_of_V: bool
    checks: list[Check] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status is Status.OK

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.ok]

    def to_dict(self) -> dict:
        return {"status": self.status.value, "class": list(self.klass),
                "no_invariants_of_V": self.no_invariants_of_V,
                "checks": [c.to_dict() for c in self.checks]}


def check_decomposable(sys: DecomposableSystem) -> DecompositionReport:
    checks: list[Check] = []
    for label, D in (("F", sys.F), ("G", sys.G)):
        prof = D.profile
        detail = "" if prof.constant else f"rank drops at sample points {list(prof.anomalies)}"
        checks.append(Check(f"constant rank of {label}", Status.of(prof.constant), detail,
                            data={"rank": prof.generic}))
    V = sys.V
    direct = V.rank == sys.k + sys.l
    checks.append(Check("F and G intersect trivially", Status.of(direct),
                        "" if direct else f"rank(F+G) = {V.rank} < {sys.k} + {sys.l}",
                        data={"rank_V": V.rank}))
    if direct:
        for i, X in enumerate(sys.F.frame()):
            for j, Y in enumerate(sys.G.frame()):
                res = contained(lie_bracket(X, Y), V).result
                checks.append(zero_check(f"[F{i + 1},G{j + 1}] in F+G", res))
    n_inv = sys.chart.n - completion(V).rank
    checks.append(Check("F+G has no invariants", Status.of(n_inv == 0),
                        "" if n_inv == 0 else f"{n_inv} invariants", data={"count": n_inv}))
    return DecompositionReport(Status.all_of(c.status for c in checks), sys.klass, n_inv == 0, checks)


@dataclass(frozen=True)
class IntegralElement:
    point: Mapping[str, float]
    v1: np.ndarray
    v2: np.ndarray


def _span_dim(cols: Sequence[np.ndarray], tol: float) -> int:
    if not cols:
        return 0
    return numeric_rank(np.column_stack(cols), tol)


def is_integral_element(sys: DecomposableSystem, E: IntegralElement, tol: float = 1e-9) -> bool:
    """dim E = 2, E inside F+G, and E meets F and G in one dimension each."""
    Fm = [X.at(E.point) for X in sys.F.generators]
    Gm = [Y.at(E.point) for Y in sys.G.generators]
    Ev = [np.asarray(E.v1, float), np.asarray(E.v2, float)]
    dE = _span_dim(Ev, tol)
    if dE != 2:
        return False
    dF, dG, dV = _span_dim(Fm, tol), _span_dim(Gm, tol), _span_dim(Fm + Gm, tol)
    if _span_dim(Fm + Gm + Ev, tol) != dV:
        return False
    meet_F = dE + dF - _span_dim(Fm + Ev, tol)
    meet_G = dE + dG - _span_dim(Gm + Ev, tol)
    return meet_F == 1 and meet_G == 1


def _fresh(prefix: str, taken: set[str], count: int) -> list[str]:
    names: list[str] = []
    i = 2
    while len(names) < count:
        cand = f"{prefix}{i}"
        if cand in taken:
            prefix += "_"
            names, i = [], 2
            continue
        names.append(cand)
        i += 1
    return names


def _extend(X: VectorField, chart: Chart) -> VectorField:
    extra = chart.n - X.chart.n
    return VectorField(chart, X.coeffs + (ZERO,) * extra)


def prolong(sys: DecomposableSystem) -> DecomposableSystem:
    """The system on the affine chart of integral elements centred at F1, G1.

    The F-direction is F1 + sum c_a F_a and the G-direction G1 + sum d_b G_b,
    each corrected along the new fiber coordinates so that the cross bracket
    stays inside the prolonged F+G.  When [F1, G1] = 0 the corrections vanish.
    """
    Ff, Gf = sys.F.frame(), sys.G.frame()
    for label, frame, D in (("F", Ff, sys.F), ("G", Gf, sys.G)):
        if not frame:
            raise FrameDegeneracy(f"{label} has rank 0")
        r = ranks_at([frame[0]], D.env)
        if min(r) < 1:
            raise FrameDegeneracy(f"{label}1 vanishes at a sample point")
    taken = set(sys.chart.coordinates) | set(sys.chart.parameters)
    cs = _fresh("c", taken, len(Ff) - 1)
    ds = _fresh("d", taken | set(cs), len(Gf) - 1)
    policy = sys.chart.policy
    chart = Chart(sys.chart.coordinates + tuple(cs) + tuple(ds), policy, sys.chart.parameters,
                  sys.chart.definitions)
    F1 = _extend(Ff[0], chart)
    for c, X in zip(cs, Ff[1:]):
        F1 = F1 + _extend(X, chart).scale(Sym(c))
    G1 = _extend(Gf[0], chart)
    for d, Y in zip(ds, Gf[1:]):
        G1 = G1 + _extend(Y, chart).scale(Sym(d))
    # Correction terms: write [F1 + c.F, G1 + d.G] in the frame of F+G; its
    # components along F_a (a >= 2) and G_b (b >= 2) are absorbed by a
    # d/dc_a part of the G-direction and a d/dd_b part of the F-direction.
    frame = [_extend(X, chart) for X in Ff + Gf]
    B = lie_bracket(F1, G1)
    env = chart.sample(tuple(e for X in frame + [B] for e in X.guard_exprs()))
    A = [[X.coeffs[i] for X in frame] for i in range(chart.n)]
    sol = solve(A, list(B.coeffs), env, policy)
    if sol.residual.verdict is not Verdict.ZERO:
        raise FrameDegeneracy("cross bracket of the leading fields is not in F+G")
    coef = sol.values
    k = len(Ff)
    a_F1, b_F = coef[0], coef[1:k]
    a_G1, b_G = coef[k], coef[k + 1:]
    for c, b in zip(cs, b_F):
        G1 = G1 + chart.coordinate_field(c).scale(b - a_F1 * Sym(c))
    for d, b in zip(ds, b_G):
        F1 = F1 + chart.coordinate_field(d).scale(a_G1 * Sym(d) - b)
    Fh = [F1] + [chart.coordinate_field(c) for c in cs]
    Gh = [G1] + [chart.coordinate_field(d) for d in ds]
    name = f"prolong({sys.name})" if sys.name else ""
    return DecomposableSystem(chart, Distribution(chart, Fh, "F"), Distribution(chart, Gh, "G"), name)
