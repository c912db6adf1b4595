"""Integral surfaces over products of base curves, and PDE residuals on them."""

from __future__ import annotations

import csv
import json
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .decomposable import DecomposableSystem, IntegralElement, is_integral_element
from .darboux.projection import DarbouxProjection
from .expr import Expr, differentiate, eval_at, evaluate, free_symbols, normalize
from .expr.compiled import compile_exprs
from .fd import derivative
from .ode import DomainExit, StepSizeUnderflow, integrate, sweep


class DegenerateCurve(ValueError):
    pass


class LiftSolveError(ValueError):
    """The direction field cannot be solved for at a point."""


class SurfaceIntegrationError(RuntimeError):
    pass


class GridTooCoarse(UserWarning):
    pass


@dataclass(frozen=True)
class Curve:
    """A curve in one factor of the base: one component per target coordinate."""

    parameter: str
    components: tuple[Expr, ...]
    interval: tuple[float, float]

    def __post_init__(self):
        extra = set().union(*(free_symbols(c) for c in self.components)) - {self.parameter}
        if extra:
            raise ValueError(f"curve components use symbols other than {self.parameter!r}: {sorted(extra)}")
        object.__setattr__(self, "components", tuple(normalize(c) for c in self.components))

    @property
    def velocity(self) -> tuple[Expr, ...]:
        return tuple(differentiate(c, self.parameter) for c in self.components)

    def at(self, t: float) -> np.ndarray:
        return np.array([eval_at(c, {self.parameter: t}) for c in self.components])

    def check_regular(self, samples: int = 17) -> None:
        ts = np.linspace(*self.interval, samples)
        vel = np.stack([np.broadcast_to(evaluate(c, {self.parameter: ts}), ts.shape) for c in self.velocity])
        norms = np.linalg.norm(vel, axis=0)
        if not np.all(np.isfinite(norms)) or np.min(norms) <= 1e-12:
            i = int(np.argmin(np.where(np.isfinite(norms), norms, -1.0)))
            raise DegenerateCurve(f"curve velocity vanishes near {self.parameter} = {ts[i]:.6g}")


@dataclass
class LiftDirections:
    """The u-direction in F over gamma1'(u) and the v-direction in G over gamma2'(v)."""

    system: DecomposableSystem
    projection: DarbouxProjection
    gamma1: Curve
    gamma2: Curve
    _fns: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        chart = self.system.chart
        comps = self.projection.components()
        for key, D, rows, curve in (("u", self.system.F, self.projection.base1, self.gamma1),
                                    ("v", self.system.G, self.projection.base2, self.gamma2)):
            frame = D.frame()
            if len(curve.components) != len(rows):
                raise ValueError(f"curve for {key} needs {len(rows)} components, got {len(curve.components)}")
            A = [X(comps[r]) for r in rows for X in frame]
            fields = [c for X in frame for c in X.coeffs]
            self._fns[key] = (len(rows), len(frame),
                              compile_exprs(A, chart.coordinates),
                              compile_exprs(fields, chart.coordinates),
                              compile_exprs(curve.velocity, (curve.parameter,)))
        self._pi = compile_exprs(self.projection.pi.components, chart.coordinates)

    def direction(self, key: str, m: np.ndarray, t: float) -> np.ndarray:
        rows, k, A_fn, f_fn, vel_fn = self._fns[key]
        try:
            A = A_fn(m).reshape(rows, k)
            frame = f_fn(m).reshape(k, -1)
            rhs = vel_fn([t])
        except (ValueError, ZeroDivisionError, OverflowError) as exc:
            raise DomainExit(f"left the admissible domain: {exc}") from exc
        try:
            a = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError as exc:
            raise LiftSolveError(f"projection solve is singular at {m}") from exc
        return a @ frame

    def u_direction(self, m, u: float) -> np.ndarray:
        return self.direction("u", np.asarray(m, float), u)

    def v_direction(self, m, v: float) -> np.ndarray:
        return self.direction("v", np.asarray(m, float), v)

    def project(self, m) -> np.ndarray:
        return self._pi(np.asarray(m, float))

    def target(self, u: float, v: float) -> np.ndarray:
        return np.concatenate([self.gamma1.at(u), self.gamma2.at(v)])


def restrict_to_lift(sys: DecomposableSystem, proj: DarbouxProjection, gamma1: Curve,
                     gamma2: Curve) -> LiftDirections:
    gamma1.check_regular()
    gamma2.check_regular()
    return LiftDirections(sys, proj, gamma1, gamma2)


def start_point(dirs: LiftDirections, guess: Mapping[str, float] | Sequence[float], u0: float, v0: float,
                tol: float = 1e-13, max_iter: int = 50) -> np.ndarray:
    """Move ``guess`` onto the fiber over (gamma1(u0), gamma2(v0)) by
    minimum-norm Newton steps."""
    chart = dirs.system.chart
    if isinstance(guess, Mapping):
        missing = [c for c in chart.coordinates if c not in guess]
        if missing:
            raise ValueError(f"start point lacks coordinates {missing}")
        guess = [guess[c] for c in chart.coordinates]
    m = np.asarray(guess, dtype=float).copy()
    J = [differentiate(c, x) for c in dirs.projection.pi.components for x in chart.coordinates]
    jac = compile_exprs(J, chart.coordinates)
    target = dirs.target(u0, v0)
    for _ in range(max_iter):
        r = dirs.project(m) - target
        if np.max(np.abs(r)) <= tol * max(1.0, float(np.max(np.abs(target)))):
            return m
        step, *_ = np.linalg.lstsq(jac(m).reshape(len(target), chart.n), r, rcond=None)
        m -= step
    raise LiftSolveError("Newton iteration for the start point did not converge")


@dataclass
class IntegralSurface:
    coordinates: tuple[str, ...]
    u: np.ndarray
    v: np.ndarray
    points: np.ndarray  # (len(u), len(v), n)
    atol: float = 1e-9
    rtol: float = 1e-9
    path_defect: float = 0.0
    projection_error: float = 0.0
    tangency: dict = field(default_factory=dict)

    def coordinate(self, name: str) -> np.ndarray:
        return self.points[..., self.coordinates.index(name)]

    @classmethod
    def from_functions(cls, coordinates: Sequence[str], u, v,
                       funcs: Mapping[str, Callable[[np.ndarray, np.ndarray], np.ndarray]]) -> "IntegralSurface":
        """A surface given in closed form, e.g. for residual checks."""
        U, V = np.meshgrid(np.asarray(u, float), np.asarray(v, float), indexing="ij")
        pts = np.stack([np.broadcast_to(funcs[c](U, V), U.shape) for c in coordinates], axis=-1)
        return cls(tuple(coordinates), np.asarray(u, float), np.asarray(v, float), pts)

    def metadata(self) -> dict:
        return {"coordinates": list(self.coordinates), "grid": [len(self.u), len(self.v)],
                "u_range": [float(self.u[0]), float(self.u[-1])],
                "v_range": [float(self.v[0]), float(self.v[-1])],
                "atol": self.atol, "rtol": self.rtol, "path_defect": self.path_defect,
                "projection_error": self.projection_error, "tangency": self.tangency}

    def to_csv(self, path: str | Path, sidecar: bool = True, extra: Mapping | None = None) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["u", "v"] + list(self.coordinates))
            for i, uu in enumerate(self.u):
                for j, vv in enumerate(self.v):
                    w.writerow([repr(float(uu)), repr(float(vv))] + [repr(float(x)) for x in self.points[i, j]])
        if sidecar:
            meta = self.metadata()
            if extra:
                meta.update(extra)
            Path(str(path) + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def integrate_surface(dirs: LiftDirections, m0: Sequence[float], u_grid: Sequence[float],
                      v_grid: Sequence[float], atol: float = 1e-9, rtol: float = 1e-9,
                      u0: float | None = None, v0: float | None = None,
                      check_tangency: bool = True) -> IntegralSurface:
    """Flow along u from m0, then along v from every node of that line.

    The opposite order (v first at u0, then u along the last v value) is
    also integrated; the largest difference on that boundary row is the
    path-independence defect.
    """
    u_grid = np.asarray(u_grid, float)
    v_grid = np.asarray(v_grid, float)
    u0 = float(u_grid[0]) if u0 is None else float(u0)
    v0 = float(v_grid[0]) if v0 is None else float(v0)
    m0 = np.asarray(m0, float)
    chart = dirs.system.chart
    fu = lambda t, y: dirs.u_direction(y, t)  # noqa: E731
    fv = lambda t, y: dirs.v_direction(y, t)  # noqa: E731
    n = chart.n
    pts = np.empty((len(u_grid), len(v_grid), n))
    try:
        if len(u_grid) == 1 and len(v_grid) == 1 and u_grid[0] == u0 and v_grid[0] == v0:
            pts[0, 0] = m0
            return IntegralSurface(chart.coordinates, u_grid, v_grid, pts, atol, rtol)
        row = sweep(fu, u0, m0, u_grid, atol, rtol)
        for i in range(len(u_grid)):
            pts[i] = sweep(fv, v0, row[i], v_grid, atol, rtol)
        col = sweep(fv, v0, m0, v_grid, atol, rtol)
        j_last = int(np.argmax(np.abs(v_grid - v0)))
        other = sweep(fu, u0, col[j_last], u_grid, atol, rtol)
    except (StepSizeUnderflow, DomainExit, LiftSolveError) as exc:
        raise SurfaceIntegrationError(str(exc)) from exc
    defect = float(np.max(np.abs(other - pts[:, j_last])))
    proj_err = 0.0
    for i, uu in enumerate(u_grid):
        for j, vv in enumerate(v_grid):
            proj_err = max(proj_err, float(np.max(np.abs(dirs.project(pts[i, j]) - dirs.target(uu, vv)))))
    surf = IntegralSurface(chart.coordinates, u_grid, v_grid, pts, atol, rtol, defect, proj_err)
    if check_tangency:
        surf.tangency = tangency_report(surf, dirs.system)
    return surf


def tangency_report(surf: IntegralSurface, sys: DecomposableSystem, tol: float = 1e-5) -> dict:
    """Finite-difference tangent planes at interior nodes tested as integral elements."""
    nu, nv = len(surf.u), len(surf.v)
    if nu < 3 or nv < 3:
        return {"nodes": 0, "failures": 0, "tolerance": tol}
    du = derivative(surf.points, surf.u, axis=0)
    dv = derivative(surf.points, surf.v, axis=1)
    bad = 0
    count = 0
    for i in range(1, nu - 1):
        for j in range(1, nv - 1):
            point = dict(zip(surf.coordinates, map(float, surf.points[i, j])))
            count += 1
            if not is_integral_element(sys, IntegralElement(point, du[i, j], dv[i, j]), tol):
                bad += 1
    return {"nodes": count, "failures": bad, "tolerance": tol}


# ---- PDE residual on a surface ---------------------------------------------

_JET = re.compile(r"([A-Za-z][A-Za-z0-9]*)_([A-Za-z]+)$")


@dataclass
class ResidualReport:
    max_residual: float
    interior_nodes: int
    warning: str = ""

    def to_dict(self) -> dict:
        out = {"max_residual": self.max_residual, "interior_nodes": self.interior_nodes}
        if self.warning:
            out["warning"] = self.warning
        return out


def residual_check(surf: IntegralSurface, pde: Expr, independent: Sequence[str] = ("x", "y")) -> ResidualReport:
    """Max |pde| over interior nodes, jets (``z_xy`` = d/dy d/dx z) from
    finite differences in (u, v) converted with the inverse Jacobian of the
    independent coordinates."""
    nu, nv = len(surf.u), len(surf.v)
    if nu < 3 or nv < 3:
        msg = f"grid {nu}x{nv} is too coarse for second differences"
        warnings.warn(msg, GridTooCoarse, stacklevel=2)
        return ResidualReport(float("nan"), 0, msg)
    x_name, y_name = independent
    if len(x_name) != 1 or len(y_name) != 1:
        raise ValueError("jet names need single-letter independent coordinates")
    X, Y = surf.coordinate(x_name), surf.coordinate(y_name)

    def d_uv(f):
        return derivative(f, surf.u, axis=0), derivative(f, surf.v, axis=1)

    xu, xv = d_uv(X)
    yu, yv = d_uv(Y)
    det = xu * yv - xv * yu

    def d_xy(f):
        fu, fv = d_uv(f)
        return (fu * yv - fv * yu) / det, (fv * xu - fu * xv) / det

    cache: dict[str, np.ndarray] = {}

    def jet(base: str, letters: str) -> np.ndarray:
        key = f"{base}_{letters}"
        if key in cache:
            return cache[key]
        parent = surf.coordinate(base) if len(letters) == 1 else jet(base, letters[:-1])
        fx, fy = d_xy(parent)
        cache[key] = fx if letters[-1] == x_name else fy
        return cache[key]

    env: dict[str, np.ndarray] = {c: surf.coordinate(c) for c in surf.coordinates}
    for name in free_symbols(pde):
        if name in env:
            continue
        m = _JET.match(name)
        if not m or m.group(1) not in surf.coordinates or any(ch not in (x_name, y_name) for ch in m.group(2)):
            raise ValueError(f"unknown symbol {name!r} in the residual expression")
        env[name] = jet(m.group(1), m.group(2))
    val = np.broadcast_to(evaluate(pde, env), X.shape)
    inner = np.abs(val[1:-1, 1:-1])
    return ResidualReport(float(np.max(inner)), int(inner.size))
