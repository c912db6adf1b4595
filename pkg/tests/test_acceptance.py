"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python3 tests/test_acceptance.py``.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from edskit.checks import Status  # noqa: E402
from edskit.darboux import (InvariantSet, check_darboux, check_reciprocal, derived_tangential_frame,  # noqa: E402
                            fingerprint, lift_frame, normalize_structure, presentation_from_frame,
                            reciprocal_frame, system_symmetries, verify_tangential_symmetry)
from edskit.decomposable import check_decomposable, prolong  # noqa: E402
from edskit.expr import Sym, SymbolTable, Verdict, is_zero, parse_expr  # noqa: E402
from edskit.geometry import Chart, Submersion, count_invariants, lie_bracket, project_field  # noqa: E402
from edskit.solver import Curve, integrate_surface, residual_check, restrict_to_lift, start_point  # noqa: E402

from conftest import load, projection_of, system_of  # noqa: E402
from randfields import jacobi_sum, random_chart, random_field, random_projectable, seeded  # noqa: E402

ODE_TOL = 1e-10


def report(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({detail})"
    capman = _CAPTURE.get("capsys")
    if capman is not None:
        with capman.disabled():
            print(line)
    else:
        print(line)


_CAPTURE: dict = {}


@pytest.fixture(autouse=True)
def _uncaptured(capsys):
    _CAPTURE["capsys"] = capsys
    yield
    _CAPTURE.pop("capsys", None)


def _lift(spec, n=21, gamma1=None, gamma2=None, start=None):
    sys_, proj = projection_of(spec)
    ur = spec.lift_u or (0.5, 1.5)
    vr = spec.lift_v or (0.5, 1.5)
    g1 = Curve("u", gamma1 or spec.lift_gamma1, ur)
    g2 = Curve("v", gamma2 or spec.lift_gamma2, vr)
    dirs = restrict_to_lift(sys_, proj, g1, g2)
    m0 = start_point(dirs, start or spec.lift_start, ur[0], vr[0])
    return integrate_surface(dirs, m0, np.linspace(*ur, n), np.linspace(*vr, n), atol=ODE_TOL, rtol=ODE_TOL)


def _wave_lift():
    # x = u, p = sin(u) and y = v, q = v^2
    spec = load("wave")
    sin_u = parse_expr("sin(u)", SymbolTable.of(("u",)))
    U, V = Sym("u"), Sym("v")
    start = {c: 0.0 for c in spec.chart.coordinates}
    return _lift(spec, 21, (U, sin_u), (V, V * V), start)


def _fibers(chart, guard, count=4):
    env = chart.sample(guard, count=count, salt=7)
    return [{k: float(v[i]) for k, v in env.items()} for i in range(count)]


# ---- criteria ---------------------------------------------------------------------

def criterion_1():
    spec = load("liouville")
    sys_ = system_of(spec)
    dec = check_decomposable(sys_)
    inv = InvariantSet(tuple(spec.invariants_F), tuple(spec.invariants_G))
    dar = check_darboux(sys_, inv)
    nF, nG = count_invariants(sys_.F), count_invariants(sys_.G)
    c = sys_.chart
    expected = ([c.expr("y"), c.expr("t - q^2/2")], [c.expr("x"), c.expr("r - p^2/2")])
    same = all(len(got) == len(want) and all(any(is_zero(g - w).verdict is Verdict.ZERO for g in got)
                                             for w in want)
               for got, want in zip((inv.of_F, inv.of_G), expected))
    symbolic = all(c.certification == "symbolic" for c in dar.checks if "annihilates" in c.name)
    ok = dec.ok and dec.klass == (3, 2, 2) and dar.ok and nF == 2 and nG == 2 and symbolic and same
    report(1, "Liouville pipeline", ok, f"class {dec.klass}, darboux {dar.status.value}, "
           f"count_invariants F={nF} G={nG}, expected invariants={same}, symbolic verdicts={symbolic}")
    return ok


def criterion_2():
    spec = load("wave")
    sys_, proj = projection_of(spec)
    comps = proj.components()
    pi = (tuple(str(comps[n]) for n in proj.base1), tuple(str(comps[n]) for n in proj.base2))
    pres = derived_tangential_frame(lift_frame(proj), "F")
    fp = fingerprint(pres)
    norm = normalize_structure(pres, proj)
    syms = system_symmetries(norm.presentation, sys_, proj)
    c = sys_.chart
    ok = (pi == (("x", "p"), ("y", "q")) and pres.frame == (c.field("-d/dz"),)
          and fp.dimension == 1 and fp.abelian and syms.fields == [c.field("d/dz")])
    report(2, "wave pipeline", ok, f"projection {pi}, f' = {[X.text() for X in pres.frame]}, "
           f"dim {fp.dimension} abelian={fp.abelian}, symmetries {[X.text() for X in syms.fields]}")
    return ok


def criterion_3():
    spec = load("goursat_k2").with_sampling(samples=8, tolerance=1e-9)
    sys_, proj = projection_of(spec)
    L = spec.symmetries_F
    verified = [verify_tangential_symmetry(X, sys_, proj, "F") for X in L]
    brackets = [lie_bracket(L[i], L[j]).zero_test(sys_.chart.policy).verdict
                for i in range(len(L)) for j in range(i + 1, len(L))]
    fp = fingerprint(presentation_from_frame(L))
    ok = (len(L) == 5 and all(v.ok for v in verified) and all(b is Verdict.ZERO for b in brackets)
          and fp.dimension == 5 and fp.abelian)
    report(3, "k=2 Goursat symmetries", ok, f"{sum(v.ok for v in verified)}/5 verified, "
           f"{sum(b is Verdict.ZERO for b in brackets)}/10 brackets Zero, dim {fp.dimension} abelian={fp.abelian}")
    return ok


def criterion_4():
    spec = load("sine_gordon")
    sys_ = system_of(spec)
    dar = check_darboux(sys_, InvariantSet(tuple(spec.invariants_F), tuple(spec.invariants_G)))
    nF = count_invariants(sys_.F)
    ok = dar.status is Status.FAIL and nF == 1
    report(4, "sine-Gordon negative control", ok, f"check_darboux {dar.status.value}, count_invariants(F)={nF}")
    return ok


def criterion_5():
    spec = load("affine1")
    rep = check_reciprocal(spec.frame, spec.reciprocal)
    box = {"x1": (-1.0, 1.0), "x2": (-1.0, 1.0)}
    grid = reciprocal_frame(spec.frame, {"x1": 0.0, "x2": 0.0}, (21, 21), box)
    err = grid.reference_error(spec.reciprocal)
    exact = rep.sign_flip.status is Status.OK and rep.sign_flip.certification == "symbolic"
    ok = rep.ok and err < 1e-6 and exact
    report(5, "affine(1) reciprocal pair", ok, f"check_reciprocal {rep.status.value}, "
           f"max coefficient error {err:.2e}, exact sign flip={exact}")
    return ok


def criterion_6():
    spec = load("liouville")
    surf = _lift(spec)
    x, y, z = (surf.coordinate(c) for c in "xyz")
    exact = np.log(2 / (x + y) ** 2)
    shift = z[0, 0] - exact[0, 0]
    dz = float(np.max(np.abs(z - exact - shift)))
    res = residual_check(surf, spec.pde).max_residual
    ok = dz < 1e-6 and res < 1e-5
    report(6, "Liouville solution lifting", ok, f"max |dz| {dz:.2e} (shift {shift:.1e}), residual {res:.2e}")
    return ok


def _antisymmetry(rng, trials=50):
    for _ in range(trials):
        chart = random_chart(rng)
        X, Y = random_field(rng, chart), random_field(rng, chart)
        if not (lie_bracket(X, Y) + lie_bracket(Y, X)).is_zero_literal():
            return False
    return True


def _jacobi(rng, trials=50):
    good = 0
    for _ in range(trials):
        chart = random_chart(rng)
        X, Y, Z = (random_field(rng, chart) for _ in range(3))
        good += jacobi_sum(X, Y, Z).zero_test().verdict is Verdict.ZERO
    return good


def _homomorphism(rng, trials=20):
    chart = Chart.make("x y z")
    pi = Submersion(chart, ("a", "b"), (chart.expr("x"), chart.expr("y")))
    good = 0
    for _ in range(trials):
        X, Y = (random_projectable(rng, chart, ("x", "y")) for _ in range(2))
        px, py, pb = (project_field(W, pi) for W in (X, Y, lie_bracket(X, Y)))
        if px.projectable and py.projectable and pb.projectable:
            diff = pb.field - lie_bracket(px.field, py.field)
            good += diff.zero_test().verdict is Verdict.ZERO
    return good


def _fingerprints_agree(name):
    spec = load(name)
    sys_, proj = projection_of(spec)
    lift = lift_frame(proj)
    for side in ("F", "G"):
        pres = derived_tangential_frame(lift, side)
        prints = [fingerprint(pres, p) for p in _fibers(sys_.chart, sys_.V.guard_exprs())]
        if any(fp != prints[0] for fp in prints):
            return False
    return True


def criterion_7():
    rng = seeded(2024)
    anti = _antisymmetry(rng)
    jac = _jacobi(rng)
    hom = _homomorphism(rng)
    wave = load("wave")
    wave_defect = _wave_lift().path_defect
    liou_defect = _lift(load("liouville")).path_defect
    fps = {n: _fingerprints_agree(n) for n in ("wave", "liouville", "goursat_k2")}
    pro = check_decomposable(prolong(system_of(wave)))
    ok = (anti and jac == 50 and hom == 20 and wave_defect < 10 * ODE_TOL and liou_defect < 10 * ODE_TOL
          and all(fps.values()) and pro.ok and pro.klass == (3, 2, 2))
    report(7, "property suites", ok, f"antisymmetry={anti}, Jacobi {jac}/50, homomorphism {hom}/20, "
           f"path defect wave {wave_defect:.1e} liouville {liou_defect:.1e} (bound {10 * ODE_TOL:.0e}), "
           f"fingerprints {fps}, prolong(wave) {pro.status.value} class {pro.klass}")
    return ok


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i + 1}" for i in range(len(CRITERIA))])
def test_acceptance(criterion):
    assert criterion()


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    sys.exit(0 if all(results) else 1)
