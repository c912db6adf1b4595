"""Darboux integrability, the Darboux projection and lifted commuting frames."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..checks import Check, Status, zero_check
from ..decomposable import DecomposableSystem
from ..expr import Const, Expr, Sym, Verdict, combine, is_zero, solve
from ..expr.numeric import evaluate
from ..geometry import (Chart, Distribution, Submersion, VectorField, completion, count_invariants,
                        generic_rank, jacobian, lie_bracket, numeric_rank, verify_invariant)


class TransversalityError(ValueError):
    pass


class LiftDegeneracy(ValueError):
    pass


@dataclass(frozen=True)
class InvariantSet:
    """Invariants of F (``of_F``) and of G (``of_G``)."""

    of_F: tuple[Expr, ...]
    of_G: tuple[Expr, ...]

    @classmethod
    def parse(cls, chart: Chart, of_F: Sequence[str], of_G: Sequence[str]) -> "InvariantSet":
        return cls(tuple(chart.expr(s) for s in of_F), tuple(chart.expr(s) for s in of_G))


@dataclass
class DarbouxReport:
    status: Status
    n_F: int
    n_G: int
    rank_condition: bool
    transversality: bool
    counted_F: int
    counted_G: int
    checks: list[Check] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status is Status.OK

    def to_dict(self) -> dict:
        return {"status": self.status.value, "n_F": self.n_F, "n_G": self.n_G,
                "rank_condition": self.rank_condition, "transversality": self.transversality,
                "count_invariants_F": self.counted_F, "count_invariants_G": self.counted_G,
                "checks": [c.to_dict() for c in self.checks]}


def _jacobian_ranks(funcs, chart: Chart, env) -> list[int]:
    if not funcs:
        return [0] * len(next(iter(env.values())))
    J = jacobian(funcs, chart.coordinates)
    num = np.stack([np.stack([evaluate(d, env) for d in row]) for row in J])  # (f, n, pts)
    return [numeric_rank(num[:, :, i]) for i in range(num.shape[2])]


def _restricted_ranks(funcs, frame: Sequence[VectorField], env) -> list[int]:
    """Rank of the matrix X(I) for I in funcs, X in frame."""
    if not funcs or not frame:
        return [0] * len(next(iter(env.values())))
    num = np.stack([np.stack([evaluate(X(I), env) for X in frame]) for I in funcs])
    return [numeric_rank(num[:, :, i]) for i in range(num.shape[2])]


def check_darboux(sys: DecomposableSystem, inv: InvariantSet) -> DarbouxReport:
    checks: list[Check] = []
    policy = sys.chart.policy
    for label, D, fam in (("F", sys.F, inv.of_F), ("G", sys.G, inv.of_G)):
        for i, I in enumerate(fam):
            res = verify_invariant(D, I, policy).result
            checks.append(zero_check(f"{label} annihilates invariant {I}", res))
    env = sys.chart.sample(sys.V.guard_exprs() + inv.of_F + inv.of_G)
    for label, fam in (("F", inv.of_F), ("G", inv.of_G)):
        r = _jacobian_ranks(fam, sys.chart, env)
        ok = all(x == len(fam) for x in r)
        checks.append(Check(f"invariants of {label} functionally independent", Status.of(ok),
                            "" if ok else f"Jacobian ranks {r}"))
    n_F, n_G = len(inv.of_F), len(inv.of_G)
    rank_ok = n_F == sys.l and n_G == sys.k
    checks.append(Check("n_F = rank G and n_G = rank F", Status.of(rank_ok),
                        f"n_F={n_F}, rank G={sys.l}, n_G={n_G}, rank F={sys.k}"))
    counted_F = count_invariants(sys.F)
    counted_G = count_invariants(sys.G)
    enough = counted_F >= sys.l and counted_G >= sys.k
    checks.append(Check("invariant counts of F and G", Status.of(enough),
                        f"count_invariants(F)={counted_F} (need {sys.l}), "
                        f"count_invariants(G)={counted_G} (need {sys.k})",
                        data={"F": counted_F, "G": counted_G}))
    r = _restricted_ranks(inv.of_F + inv.of_G, sys.V.frame(), env)
    transversal = all(x == n_F + n_G for x in r) and n_F + n_G > 0
    checks.append(Check("invariants transversal to F+G", Status.of(transversal),
                        "" if transversal else f"restricted Jacobian ranks {r}"))
    status = Status.all_of(c.status for c in checks)
    return DarbouxReport(status, n_F, n_G, rank_ok, transversal, counted_F, counted_G, checks)


def _target_names(inv: InvariantSet, chart: Chart) -> tuple[list[str], list[str]]:
    taken: set[str] = set()

    def name(e: Expr, fallback: str) -> str:
        if isinstance(e, Sym) and e.name in chart.coordinates and e.name not in taken:
            out = e.name
        else:
            out = fallback
            while out in taken or out in chart.coordinates:
                out += "_"
        taken.add(out)
        return out

    b1 = [name(e, f"J{i + 1}") for i, e in enumerate(inv.of_G)]
    b2 = [name(e, f"I{i + 1}") for i, e in enumerate(inv.of_F)]
    return b1, b2


@dataclass
class DarbouxProjection:
    system: DecomposableSystem
    invariants: InvariantSet
    pi: Submersion
    base1: tuple[str, ...]
    base2: tuple[str, ...]
    checks: list[Check] = field(default_factory=list)

    @property
    def s(self) -> int:
        return self.system.chart.n - self.pi.m

    @property
    def vertical(self) -> list[VectorField]:
        """A frame of Z = ker dpi."""
        return self.pi.kernel()

    def components(self) -> dict[str, Expr]:
        return dict(zip(self.pi.target.coordinates, self.pi.components))

    def describe(self) -> dict:
        comps = self.components()
        return {"base1": {n: str(comps[n]) for n in self.base1},
                "base2": {n: str(comps[n]) for n in self.base2}, "fiber_dimension": self.s}


def build_projection(sys: DecomposableSystem, inv: InvariantSet) -> DarbouxProjection:
    """pi = (invariants of G ; invariants of F) with the image and kernel checks."""
    if len(inv.of_F) != sys.l or len(inv.of_G) != sys.k:
        raise TransversalityError("invariant counts do not match the ranks of G and F")
    b1, b2 = _target_names(inv, sys.chart)
    pi = Submersion(sys.chart, b1 + b2, list(inv.of_G) + list(inv.of_F))
    env = sys.chart.sample(sys.V.guard_exprs() + pi.components)
    checks: list[Check] = []
    rF = _restricted_ranks(inv.of_G, sys.F.frame(), env)
    rG = _restricted_ranks(inv.of_F, sys.G.frame(), env)
    okF = all(x == len(b1) for x in rF)
    okG = all(x == len(b2) for x in rG)
    if not (okF and okG):
        raise TransversalityError(f"dpi(F) ranks {rF}, dpi(G) ranks {rG}")
    checks.append(Check("dpi(F) = TB1 x 0", Status.OK))
    checks.append(Check("dpi(G) = 0 x TB2", Status.OK))
    Z = pi.kernel()
    zr = generic_rank(Z, env) if Z else 0
    s = sys.chart.n - pi.m
    checks.append(Check("ker dpi has rank s", Status.of(zr == s), f"rank {zr}, s = {s}"))
    CF, CG = completion(sys.F), completion(sys.G)
    both = generic_rank(list(CF.generators) + list(CG.generators), CF.env)
    meet = CF.rank + CG.rank - both
    checks.append(Check("Z = completion(F) meet completion(G)", Status.of(meet == s),
                        f"dim of intersection {meet}"))
    return DarbouxProjection(sys, inv, pi, tuple(b1), tuple(b2), checks)


@dataclass
class LiftedFrame:
    projection: DarbouxProjection
    base_F: tuple[VectorField, ...]
    base_G: tuple[VectorField, ...]
    F: tuple[VectorField, ...]
    G: tuple[VectorField, ...]
    checks: list[Check] = field(default_factory=list)

    @property
    def status(self) -> Status:
        return Status.all_of(c.status for c in self.checks)

    def side(self, side: str) -> tuple[VectorField, ...]:
        return self.F if side == "F" else self.G


def coordinate_base_frames(proj: DarbouxProjection) -> tuple[list[VectorField], list[VectorField]]:
    target = proj.pi.target
    return ([target.coordinate_field(n) for n in proj.base1],
            [target.coordinate_field(n) for n in proj.base2])


def _lift_one(Xt: VectorField, D: Distribution, proj: DarbouxProjection, rows: Sequence[str], env) -> VectorField:
    pi = proj.pi
    frame = D.frame()
    comps = proj.components()
    A = [[X(comps[r]) for X in frame] for r in rows]
    b = [pi.pullback(Xt.component(r)) for r in rows]
    try:
        sol = solve(A, b, env, D.chart.policy)
    except Exception as exc:  # SingularSystem
        raise LiftDegeneracy(f"cannot lift {Xt}: {exc}") from exc
    out = VectorField.zero(D.chart)
    for a, X in zip(sol.values, frame):
        out = out + X.scale(a)
    return out


def lift_frame(proj: DarbouxProjection, base_F: Sequence[VectorField] | None = None,
               base_G: Sequence[VectorField] | None = None) -> LiftedFrame:
    """Unique lifts of commuting base frames into F and G."""
    dF, dG = coordinate_base_frames(proj)
    base_F = list(base_F) if base_F is not None else dF
    base_G = list(base_G) if base_G is not None else dG
    sys = proj.system
    checks: list[Check] = []
    for label, base, own, other in (("F", base_F, proj.base1, proj.base2), ("G", base_G, proj.base2, proj.base1)):
        for X in base:
            if any(X.component(c) != Const(0) for c in other):
                raise LiftDegeneracy(f"base field {X} of {label} has components along the other factor")
            if any(s in other for e in X.coeffs for s in e.symbols()):
                raise LiftDegeneracy(f"base field {X} of {label} depends on the other factor")
        for i in range(len(base)):
            for j in range(i):
                res = lie_bracket(base[j], base[i]).zero_test()
                checks.append(zero_check(f"base frame of {label} commutes ({j + 1},{i + 1})", res))
    env = sys.chart.sample(sys.V.guard_exprs() + proj.pi.components)
    Fl = tuple(_lift_one(X, sys.F, proj, proj.base1, env) for X in base_F)
    Gl = tuple(_lift_one(Y, sys.G, proj, proj.base2, env) for Y in base_G)
    for i, X in enumerate(Fl):
        for j, Y in enumerate(Gl):
            res = lie_bracket(X, Y).zero_test()
            checks.append(zero_check(f"[F{i + 1},G{j + 1}] = 0", res))
    return LiftedFrame(proj, tuple(base_F), tuple(base_G), Fl, Gl, checks)
