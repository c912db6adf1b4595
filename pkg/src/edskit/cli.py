"""Command line front end: ``eds <command> FILE``.

Exit codes: 0 ok, 1 a check failed, 2 indeterminate, 3 usage or input error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .checks import Check, Status
from .darboux import (InvariantSet, NotImplementedForType, build_projection, check_darboux,
                      check_reciprocal, coefficients_depend_only_on_base1, derived_tangential_frame,
                      fingerprint, lift_frame, normalize_structure, presentation_from_frame,
                      reciprocal_frame, system_symmetries, verify_tangential_symmetry)
from .darboux.projection import TransversalityError, LiftDegeneracy
from .decomposable import DecomposableSystem, check_decomposable, prolong
from .expr import ExprError, SymbolTable, normalize, parse_expr
from .geometry import Chart, count_invariants
from .report import build_report, dumps
from .solver import (Curve, DegenerateCurve, LiftSolveError, SurfaceIntegrationError, integrate_surface,
                     residual_check, restrict_to_lift, start_point)
from .specfile import SpecError, SystemSpec, load_system_spec

EXIT = {Status.OK: 0, Status.FAIL: 1, Status.INDETERMINATE: 2}
USAGE = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _system(spec: SystemSpec) -> DecomposableSystem:
    spec.require("F", "G")
    return DecomposableSystem(spec.chart, spec.F, spec.G, spec.name)


def _invariants(spec: SystemSpec) -> InvariantSet:
    spec.require("invariants_F", "invariants_G")
    return InvariantSet(tuple(spec.invariants_F), tuple(spec.invariants_G))


def _base_frames(spec: SystemSpec, proj):
    if not (spec.base_frame_F or spec.base_frame_G):
        return None, None
    target = proj.pi.target
    out = []
    for texts in (spec.base_frame_F, spec.base_frame_G):
        if not texts:
            out.append(None)
            continue
        try:
            out.append([target.field(t) for t in texts])
        except ExprError as exc:
            raise SpecError(f"base frame: {exc.message}", spec.path) from None
    return out[0], out[1]


# ---- commands --------------------------------------------------------------

def cmd_check(spec: SystemSpec, args) -> tuple[Status, dict, list[Check]]:
    sys_ = _system(spec)
    dec = check_decomposable(sys_)
    body = {"class": list(sys_.klass), "decomposable": dec.status.value,
            "count_invariants": {"F": count_invariants(sys_.F), "G": count_invariants(sys_.G)}}
    checks = list(dec.checks)
    status = dec.status
    if spec.invariants_F or spec.invariants_G:
        dr = check_darboux(sys_, _invariants(spec))
        body["darboux"] = {k: v for k, v in dr.to_dict().items() if k != "checks"}
        checks += dr.checks
        status = Status.all_of([status, dr.status])
    return status, body, checks


def cmd_invariants(spec: SystemSpec, args) -> tuple[Status, dict, list[Check]]:
    sys_ = _system(spec)
    from .geometry import verify_invariant
    from .checks import zero_check
    body = {"count_invariants": {"F": count_invariants(sys_.F), "G": count_invariants(sys_.G)},
            "rank": {"F": sys_.k, "G": sys_.l}}
    checks = []
    for label, D, fam in (("F", sys_.F, spec.invariants_F), ("G", sys_.G, spec.invariants_G)):
        for I in fam:
            checks.append(zero_check(f"{label} annihilates {I}", verify_invariant(D, I).result))
    return Status.all_of(c.status for c in checks), body, checks


def _side_summary(pres, proj, sys_) -> tuple[dict, list[Check]]:
    checks: list[Check] = []
    out = {"frame": [X.text() for X in pres.frame], "labels": list(pres.labels),
           "structure": pres.structure_text()}
    dep = coefficients_depend_only_on_base1(pres, proj)
    from .checks import zero_check
    checks.append(zero_check(f"{pres.side}-side structure depends on the base only", dep))
    env = sys_.chart.sample(sys_.V.guard_exprs(), count=4, salt=7)
    fibers = [{k: float(v[i]) for k, v in env.items()} for i in range(len(next(iter(env.values()))))]
    prints = [fingerprint(pres, p) for p in fibers]
    same = all(f == prints[0] for f in prints)
    checks.append(Check(f"{pres.side}-side fingerprint equal on {len(prints)} fibers", Status.of(same)))
    try:
        norm = normalize_structure(pres, proj)
    except NotImplementedForType as exc:
        out["normalization"] = {"status": "not_implemented", "reason": str(exc)}
        out["fingerprint"] = prints[0].to_dict()
        checks.append(Check(f"{pres.side}-side normalization", Status.INDETERMINATE, str(exc)))
        return out, checks
    checks += norm.checks
    out["normalization"] = {"status": "ok", "method": norm.method,
                            "mu": [[str(e) for e in row] for row in norm.mu]}
    fp = fingerprint(norm.presentation)
    out["fingerprint"] = fp.to_dict()
    syms = system_symmetries(norm.presentation, sys_, proj)
    out["system_symmetries"] = [X.text() for X in syms.fields]
    out["rejected_center_elements"] = [X.text() for X in syms.rejected]
    return out, checks


def cmd_symmetries(spec: SystemSpec, args) -> tuple[Status, dict, list[Check]]:
    sys_ = _system(spec)
    proj = build_projection(sys_, _invariants(spec))
    bF, bG = _base_frames(spec, proj)
    lift = lift_frame(proj, bF, bG)
    checks = list(proj.checks) + list(lift.checks)
    body: dict = {"projection": proj.describe(),
                  "lifts": {"F": [X.text() for X in lift.F], "G": [X.text() for X in lift.G]}}
    sides = {}
    for side in ("F", "G"):
        pres = derived_tangential_frame(lift, side)
        sides[side], cs = _side_summary(pres, proj, sys_)
        checks += cs
    body["derived"] = sides
    body["fingerprint"] = sides["F"]["fingerprint"]
    supplied = {}
    for side, fields in (("F", spec.symmetries_F), ("G", spec.symmetries_G)):
        if not fields:
            continue
        cs = [verify_tangential_symmetry(X, sys_, proj, side) for X in fields]
        checks += cs
        pres = presentation_from_frame(fields, side)
        entry = {"fields": [X.text() for X in fields], "structure": pres.structure_text()}
        if pres.constants is not None:
            entry["fingerprint"] = fingerprint(pres).to_dict()
        supplied[side] = entry
    if supplied:
        body["supplied_symmetries"] = supplied
    return Status.all_of(c.status for c in checks), body, checks


def cmd_reciprocal(spec: SystemSpec, args) -> tuple[Status, dict, list[Check]]:
    spec.require("frame")
    body: dict = {"frame": [X.text() for X in spec.frame]}
    checks: list[Check] = []
    pres = presentation_from_frame(spec.frame)
    if pres.constants is not None:
        body["fingerprint"] = fingerprint(pres).to_dict()
    if spec.reciprocal:
        rep = check_reciprocal(spec.frame, spec.reciprocal)
        body["check_reciprocal"] = {k: v for k, v in rep.to_dict().items() if k != "checks"}
        checks += rep.checks
    if spec.grid and spec.base_point:
        spec.require("grid_box")
        grid = reciprocal_frame(pres, spec.base_point, spec.grid, spec.grid_box)
        res = grid.commutator_residual(spec.frame)
        body["grid_frame"] = {**grid.to_dict(), "commutator_residual": res}
        checks.append(Check("grid frame commutes with the frame", Status.of(res < args.residual_tol),
                            f"max residual {res:.3e}"))
        if spec.reciprocal:
            err = grid.reference_error(spec.reciprocal)
            body["grid_frame"]["reference_error"] = err
            checks.append(Check("grid frame matches the given reciprocal frame",
                                Status.of(err < args.residual_tol), f"max coefficient error {err:.3e}"))
        if args.out:
            grid.to_csv(args.out)
            body["grid_frame"]["csv"] = str(args.out)
    return Status.all_of(c.status for c in checks), body, checks


def _spec_text(sys_: DecomposableSystem, name: str) -> str:
    lines = ["eds-spec 1", f"name: {name}", "coordinates: " + " ".join(sys_.chart.coordinates)]
    lines += [f"F: {X.text()}" for X in sys_.F.generators]
    lines += [f"G: {X.text()}" for X in sys_.G.generators]
    return "\n".join(lines) + "\n"


def cmd_prolong(spec: SystemSpec, args) -> tuple[Status, dict, list[Check]]:
    sys_ = _system(spec)
    pro = prolong(sys_)
    dec = check_decomposable(pro)
    body = {"class": list(pro.klass), "coordinates": list(pro.chart.coordinates),
            "F": [X.text() for X in pro.F.generators], "G": [X.text() for X in pro.G.generators]}
    if args.emit_spec:
        Path(args.emit_spec).write_text(_spec_text(pro, f"prolong_{spec.name}"))
        body["spec"] = str(args.emit_spec)
    return dec.status, body, dec.checks


def _curve(text: str | None, default, param: str, interval, table: SymbolTable) -> Curve:
    if text is None:
        if not default:
            raise SpecError(f"no curve given for {param}", "")
        return Curve(param, default, interval)
    try:
        comps = tuple(normalize(parse_expr(c, table)) for c in text.split(","))
    except ExprError as exc:
        raise UsageError(f"curve {text!r}: {exc}") from None
    return Curve(param, comps, interval)


def _range(text: str | None, default, what: str) -> tuple[float, float]:
    if text is None:
        if default is None:
            raise UsageError(f"no {what} range given")
        return default
    try:
        lo, hi = (float(t) for t in text.split(","))
    except ValueError:
        raise UsageError(f"bad {what} range {text!r}; expected lo,hi") from None
    return lo, hi


def _grid(text: str | None, default) -> tuple[int, int]:
    if text is None:
        return tuple(default) if default else (21, 21)
    try:
        a, b = (int(t) for t in text.lower().split("x"))
    except ValueError:
        raise UsageError(f"bad grid {text!r}; expected NxM") from None
    return a, b


def cmd_lift(spec: SystemSpec, args) -> tuple[Status, dict, list[Check]]:
    sys_ = _system(spec)
    proj = build_projection(sys_, _invariants(spec))
    spec.require("lift_start")
    ur = _range(args.u_range, spec.lift_u, "u")
    vr = _range(args.v_range, spec.lift_v, "v")
    params = spec.chart.parameters
    g1 = _curve(args.gamma1, spec.lift_gamma1, "u", ur, SymbolTable.of(("u",), params))
    g2 = _curve(args.gamma2, spec.lift_gamma2, "v", vr, SymbolTable.of(("v",), params))
    nu, nv = _grid(args.grid, spec.grid)
    dirs = restrict_to_lift(sys_, proj, g1, g2)
    m0 = start_point(dirs, spec.lift_start, ur[0], vr[0])
    surf = integrate_surface(dirs, m0, np.linspace(*ur, nu), np.linspace(*vr, nv),
                             atol=args.ode_tol, rtol=args.ode_tol)
    bound = 10 * args.ode_tol
    checks = [
        Check("path independence", Status.of(surf.path_defect <= bound), f"defect {surf.path_defect:.3e}"),
        Check("projection consistency", Status.of(surf.projection_error <= bound),
              f"error {surf.projection_error:.3e}"),
        Check("tangent planes are integral elements", Status.of(surf.tangency.get("failures", 0) == 0),
              f"{surf.tangency.get('failures', 0)} of {surf.tangency.get('nodes', 0)} nodes fail"),
    ]
    body: dict = {"surface": surf.metadata(), "start": dict(zip(spec.chart.coordinates, map(float, m0)))}
    if spec.pde is not None:
        res = residual_check(surf, spec.pde, spec.independent or ("x", "y"))
        body["residual"] = res.to_dict()
        ok = np.isfinite(res.max_residual) and res.max_residual < args.residual_tol
        checks.append(Check("PDE residual on the surface",
                            Status.of(ok) if np.isfinite(res.max_residual) else Status.INDETERMINATE,
                            f"max residual {res.max_residual:.3e}"))
    if args.out:
        surf.to_csv(args.out, extra={"residual": body.get("residual")})
        body["csv"] = str(args.out)
    return Status.all_of(c.status for c in checks), body, checks


COMMANDS = {"check": cmd_check, "invariants": cmd_invariants, "symmetries": cmd_symmetries,
            "reciprocal": cmd_reciprocal, "prolong": cmd_prolong, "lift": cmd_lift}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="eds", description="Decomposable exterior differential systems workbench.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("spec", help="system file (eds-spec 1)")
        s.add_argument("--tol", type=float, help="zero-test tolerance")
        s.add_argument("--seed", type=int, help="sampling seed")
        s.add_argument("--samples", type=int, help="sample points per zero test")
        s.add_argument("--out", help="report file, or CSV for lift and reciprocal")
        s.add_argument("--json", action="store_true", help="print the JSON report to stdout")
        s.add_argument("--timestamp", help=argparse.SUPPRESS)
        if name in ("lift", "reciprocal"):
            s.add_argument("--residual-tol", type=float, default=1e-6)
        if name == "lift":
            s.add_argument("--gamma1", help="components of gamma1 in u, comma separated")
            s.add_argument("--gamma2", help="components of gamma2 in v, comma separated")
            s.add_argument("--grid", help="NxM nodes")
            s.add_argument("--u-range", help="lo,hi")
            s.add_argument("--v-range", help="lo,hi")
            s.add_argument("--ode-tol", type=float, default=1e-9)
        if name == "prolong":
            s.add_argument("--emit-spec", help="write the prolonged system as a spec file")
    return p


def _summary(report: dict) -> str:
    lines = [f"{report['command']}: {report['status']}"]
    for key in ("class", "count_invariants", "fingerprint", "residual"):
        if key in report:
            lines.append(f"  {key}: {report[key]}")
    for c in report["checks"]:
        if c["status"] != "ok":
            lines.append(f"  [{c['status']}] {c['name']}" + (f": {c['detail']}" if c.get("detail") else ""))
    return "\n".join(lines)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        spec = load_system_spec(args.spec).with_sampling(args.seed, args.samples, args.tol)
        status, body, checks = COMMANDS[args.command](spec, args)
    except UsageError as exc:
        print(f"eds: usage error: {exc}", file=sys.stderr)
        return USAGE
    except SpecError as exc:
        print(f"eds: {exc}", file=sys.stderr)
        return USAGE
    except (TransversalityError, LiftDegeneracy, DegenerateCurve, LiftSolveError,
            SurfaceIntegrationError) as exc:
        print(f"eds: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT[Status.FAIL]
    report = build_report(args.command, status, spec.digest, args.spec, spec.chart.policy.seed, body,
                          checks, timestamp=args.timestamp)
    text = dumps(report)
    writes_report = args.out and args.command not in ("lift", "reciprocal")
    if writes_report:
        Path(args.out).write_text(text)
    if args.json:
        sys.stdout.write(text)
    elif not writes_report:
        print(_summary(report))
    return EXIT[status]


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
