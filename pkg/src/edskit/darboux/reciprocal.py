"""Evaluation maps, reciprocal (commuting, anti-isomorphic) frames and their
numerical construction on a grid."""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from ..checks import Check, Status, zero_check
from ..expr import Const, Expr, Verdict, ZeroResult, combine, differentiate, evaluate, is_zero, normalize, solve
from ..expr.compiled import compile_exprs
from ..expr.numeric import rational_constant
from ..fd import derivative
from ..geometry import Chart, VectorField, lie_bracket, numeric_rank
from ..ode import DomainExit, StepSizeUnderflow, sweep
from .algebra import LieAlgebraPresentation, NotClosed, presentation_from_frame


class NotTransitive(ValueError):
    """The evaluation map is singular at a point."""


class ReciprocalError(RuntimeError):
    """The centralizer ODE could not be integrated to the requested tolerance."""


def evaluation_map(frame: Sequence[VectorField], point: Mapping[str, float],
                   coordinates: Sequence[str] | None = None) -> np.ndarray:
    """Matrix whose columns are the frame fields at ``point``."""
    if not frame:
        return np.zeros((0, 0))
    chart = frame[0].chart
    rows = [chart.coordinates.index(c) for c in coordinates] if coordinates else list(range(chart.n))
    return np.column_stack([X.at(point)[rows] for X in frame])


def _symbolic_ev(frame: Sequence[VectorField]) -> list[list[Expr]]:
    n = frame[0].chart.n
    return [[X.coeffs[r] for X in frame] for r in range(n)]


@dataclass
class ReciprocalReport:
    commute: Check
    transitive_A: Check
    transitive_B: Check
    anti_iso_residual: float
    sign_flip: Check
    checks: list[Check] = field(default_factory=list)

    @property
    def status(self) -> Status:
        return Status.all_of(c.status for c in self.checks)

    @property
    def ok(self) -> bool:
        return self.status is Status.OK

    def to_dict(self) -> dict:
        return {"status": self.status.value, "commute": self.commute.status.value,
                "transitive_A": self.transitive_A.status.value,
                "transitive_B": self.transitive_B.status.value,
                "anti_iso_residual": self.anti_iso_residual,
                "sign_flip": self.sign_flip.status.value,
                "checks": [c.to_dict() for c in self.checks]}


def _transitive(frame, points, label) -> Check:
    n = frame[0].chart.n
    if len(frame) != n:
        return Check(f"{label} locally transitive", Status.FAIL, f"{len(frame)} fields on an {n}-dimensional chart")
    bad = [p for p in points if numeric_rank(evaluation_map(frame, p)) < n]
    return Check(f"{label} locally transitive", Status.of(not bad),
                 "" if not bad else f"singular evaluation map at {bad[0]}")


def _anti_iso_numeric(cA: np.ndarray, cB: np.ndarray, alpha: np.ndarray) -> float:
    n = alpha.shape[0]
    worst = 0.0
    for i in range(n):
        for j in range(n):
            left = alpha @ cA[i, j]
            right = np.einsum("a,b,abk->k", alpha[:, i], alpha[:, j], cB)
            worst = max(worst, float(np.max(np.abs(left + right))))
    return worst


def _sign_flip_exact(pA: LieAlgebraPresentation, pB: LieAlgebraPresentation, env) -> ZeroResult:
    """alpha c_A(e_i, e_j) + c_B(alpha e_i, alpha e_j) = 0 with alpha = ev_B^-1 ev_A
    solved symbolically; every entry is then put through the zero test."""
    cA, cB = pA.constants, pB.constants
    if cA is None or cB is None:
        return ZeroResult(Verdict.UNKNOWN, "none", reason="structure constants are not exact rationals")
    evA, evB = _symbolic_ev(pA.frame), _symbolic_ev(pB.frame)
    n = len(evA)
    cols = []
    for i in range(n):
        sol = solve(evB, [evA[r][i] for r in range(n)], env, pA.chart.policy, check=False)
        cols.append(list(sol.values))
    alpha = [[cols[i][r] for i in range(n)] for r in range(n)]  # alpha[r][i]
    results = []
    for i in range(n):
        for j in range(n):
            for k in range(n):
                left = sum((alpha[k][l] * Const(cA[i][j][l]) for l in range(n) if cA[i][j][l] != 0), Const(0))
                right = sum((alpha[a][i] * alpha[b][j] * Const(cB[a][b][k])
                             for a in range(n) for b in range(n) if cB[a][b][k] != 0), Const(0))
                results.append(is_zero(normalize(left + right), pA.chart.policy))
    return combine(results)


def check_reciprocal(frameA: Sequence[VectorField], frameB: Sequence[VectorField],
                     points: Sequence[Mapping[str, float]] | None = None) -> ReciprocalReport:
    """Commutation, local transitivity of both frames and the anti-isomorphism."""
    frameA, frameB = list(frameA), list(frameB)
    chart = frameA[0].chart
    if frameB[0].chart.coordinates != chart.coordinates:
        raise ValueError("frames live on different charts")
    policy = chart.policy
    comm = combine(lie_bracket(A, B).zero_test(policy) for A in frameA for B in frameB)
    commute = zero_check("[A_i, B_j] = 0", comm)
    if points is None:
        env = chart.sample(tuple(e for X in frameA + frameB for e in X.guard_exprs()))
        points = [{k: float(v[i]) for k, v in env.items()} for i in range(len(next(iter(env.values()))))]
    tA, tB = _transitive(frameA, points, "A"), _transitive(frameB, points, "B")
    residual = float("inf")
    sign = Check("structure constants flip sign under alpha", Status.INDETERMINATE, "not attempted")
    checks = [commute, tA, tB]
    if tA.ok and tB.ok:
        try:
            pA, pB = presentation_from_frame(frameA, "A"), presentation_from_frame(frameB, "B")
        except NotClosed as exc:
            checks.append(Check("both frames bracket-closed", Status.FAIL, str(exc)))
        else:
            residual = 0.0
            for p in points:
                alpha = np.linalg.solve(evaluation_map(frameB, p), evaluation_map(frameA, p))
                residual = max(residual, _anti_iso_numeric(pA.constants_at(p), pB.constants_at(p), alpha))
            tol = max(policy.tolerance, 1e-9)
            checks.append(Check("anti-isomorphism residual", Status.of(residual < tol),
                                f"max residual {residual:.3e}", data={"residual": residual}))
            env = chart.sample()
            sign = zero_check("structure constants flip sign under alpha", _sign_flip_exact(pA, pB, env))
    checks.append(sign)
    return ReciprocalReport(commute, tA, tB, residual, sign, checks)


# ---- numerical construction on a grid --------------------------------------

@dataclass
class GridFrame:
    """Vector fields sampled on a rectangular grid.

    ``values[idx][m, k]`` is the d/d(coordinate k) coefficient of field m at
    the node ``idx``.
    """

    coordinates: tuple[str, ...]
    axes: tuple[np.ndarray, ...]
    values: np.ndarray
    atol: float = 1e-10
    rtol: float = 1e-10
    base_point: dict[str, float] = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.axes)

    @property
    def m(self) -> int:
        return self.values.shape[-2]

    def nodes(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)

    def interpolate(self, point: Sequence[float] | Mapping[str, float]) -> np.ndarray:
        """(m, n) coefficient matrix at an arbitrary point, multilinear in the cell."""
        if isinstance(point, Mapping):
            point = [point[c] for c in self.coordinates]
        flat = self.values.reshape(self.shape + (-1,))
        f = RegularGridInterpolator(self.axes, flat, method="linear")
        return f(np.asarray(point, dtype=float)[None, :])[0].reshape(self.m, len(self.coordinates))

    def reference_error(self, fields: Sequence[VectorField]) -> float:
        """Largest coefficient difference from symbolic fields at the nodes."""
        env = {c: g for c, g in zip(self.coordinates, np.meshgrid(*self.axes, indexing="ij"))}
        worst = 0.0
        for mi, Y in enumerate(fields):
            for k, e in enumerate(Y.coeffs):
                ref = np.broadcast_to(evaluate(e, env), self.shape)
                worst = max(worst, float(np.max(np.abs(self.values[..., mi, k] - ref))))
        return worst

    def _grad(self, arr: np.ndarray) -> list[np.ndarray]:
        return [derivative(arr, self.axes[d], axis=d, order=1) if len(self.axes[d]) > 1
                else np.zeros_like(arr) for d in range(len(self.axes))]

    def commutator_residual(self, frame: Sequence[VectorField]) -> float:
        """max |[X_i, Y_j]| over the nodes, Y from the grid with finite-difference
        derivatives, X symbolic."""
        env = {c: g for c, g in zip(self.coordinates, np.meshgrid(*self.axes, indexing="ij"))}
        n = len(self.coordinates)
        worst = 0.0
        for X in frame:
            Xc = [np.broadcast_to(evaluate(e, env), self.shape) for e in X.coeffs]
            dX = [[np.broadcast_to(evaluate(differentiate(e, c), env), self.shape) for c in self.coordinates]
                  for e in X.coeffs]
            for j in range(self.m):
                Yc = [self.values[..., j, k] for k in range(n)]
                for k in range(n):
                    gY = self._grad(Yc[k])
                    term = sum(Xc[d] * gY[d] for d in range(n)) - sum(Yc[d] * dX[k][d] for d in range(n))
                    worst = max(worst, float(np.max(np.abs(term))))
        return worst

    def structure_at_nodes(self) -> np.ndarray:
        """Structure coefficients of the grid frame itself, shape (*grid, m, m, m)."""
        n = len(self.coordinates)
        grads = [[self._grad(self.values[..., j, k]) for k in range(n)] for j in range(self.m)]
        out = np.zeros(self.shape + (self.m,) * 3)
        for i in range(self.m):
            for j in range(self.m):
                br = np.stack([sum(self.values[..., i, d] * grads[j][k][d] - self.values[..., j, d] * grads[i][k][d]
                                   for d in range(n)) for k in range(n)], axis=-1)
                ev = np.swapaxes(self.values, -1, -2)  # (*grid, n, m)
                out[..., i, j, :] = np.linalg.solve(ev, br[..., None])[..., 0]
        return out

    def to_csv(self, path: str | Path, names: Sequence[str] | None = None) -> None:
        names = list(names) if names else [f"Y{i + 1}" for i in range(self.m)]
        header = list(self.coordinates) + [f"{nm}_{c}" for nm in names for c in self.coordinates]
        nodes = self.nodes()
        flat = self.values.reshape(-1, self.m * len(self.coordinates))
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for x, row in zip(nodes, flat):
                w.writerow([repr(float(v)) for v in x] + [repr(float(v)) for v in row])

    def to_dict(self) -> dict:
        return {"coordinates": list(self.coordinates), "shape": list(self.shape),
                "atol": self.atol, "rtol": self.rtol, "base_point": self.base_point}


def reciprocal_frame(pres: LieAlgebraPresentation | Sequence[VectorField], base_point: Mapping[str, float],
                     shape: Sequence[int], box: Mapping[str, tuple[float, float]],
                     atol: float = 1e-10, rtol: float = 1e-10, workers: int = 1) -> GridFrame:
    """Centralizer of a locally transitive frame with constant structure.

    A field Y = sum_l a^l X_l commutes with every X_j iff
    X_j(a^l) = -sum_i a^i c^l_{ji}.  Starting from a = identity at the base
    point the system is integrated along coordinate lines, first axis 0,
    then axis 1 from every node of that line, and so on; along axis d the
    derivative is sum_j w^j X_j(a) with w = ev(x)^-1 e_d.
    """
    if not isinstance(pres, LieAlgebraPresentation):
        pres = presentation_from_frame(list(pres))
    chart = pres.chart
    n = chart.n
    if pres.dim != n:
        raise NotTransitive(f"{pres.dim} fields cannot be transitive on {n} coordinates")
    const = pres.constants
    if const is None:
        raise ValueError("structure constants must be exact constants")
    C = np.array([[[float(const[j][i][l]) for i in range(n)] for l in range(n)] for j in range(n)])  # C[j][l][i]
    ev_fn = compile_exprs([X.coeffs[r] for r in range(n) for X in pres.frame], chart.coordinates)
    shape = tuple(int(s) for s in shape)
    if len(shape) != n:
        raise ValueError(f"grid needs {n} axes")
    axes = tuple(np.linspace(*box[c], s) for c, s in zip(chart.coordinates, shape))
    x0 = np.array([float(base_point[c]) for c in chart.coordinates])

    def ev(x):
        try:
            return ev_fn(x).reshape(n, n)
        except (ValueError, ZeroDivisionError, OverflowError) as exc:
            raise DomainExit(str(exc)) from exc

    def make_rhs(fixed: np.ndarray, d: int):
        def rhs(t, y):
            x = fixed.copy()
            x[d] = t
            E = ev(x)
            try:
                w = np.linalg.solve(E, np.eye(n)[:, d])
            except np.linalg.LinAlgError as exc:
                raise NotTransitive(f"singular evaluation map at {x}") from exc
            M = -np.tensordot(w, C, axes=(0, 0))
            return (M @ y.reshape(n, n)).ravel()
        return rhs

    # states[idx] for the nodes reached so far; start with the base point
    points = [x0]
    states = [np.eye(n).ravel()]
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        for d in range(n):
            def line(job):
                x, st = job
                vals = sweep(make_rhs(x, d), x[d], st, axes[d], atol, rtol)
                pts = []
                for g in axes[d]:
                    p = x.copy()
                    p[d] = g
                    pts.append(p)
                return pts, list(vals)
            jobs = list(zip(points, states))
            results = list(pool.map(line, jobs)) if pool else [line(j) for j in jobs]
            points = [p for pts, _ in results for p in pts]
            states = [s for _, sts in results for s in sts]
    except (StepSizeUnderflow, DomainExit) as exc:
        raise ReciprocalError(str(exc)) from exc
    finally:
        if pool:
            pool.shutdown()
    # nodes were produced axis 0 outermost, matching C order of the grid
    values = np.empty(shape + (n, n))
    for idx, (x, st) in zip(np.ndindex(*shape), zip(points, states)):
        A = st.reshape(n, n)
        values[idx] = (ev(x) @ A).T
    return GridFrame(tuple(chart.coordinates), axes, values, atol, rtol,
                     {c: float(v) for c, v in zip(chart.coordinates, x0)})
