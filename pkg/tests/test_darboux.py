from fractions import Fraction

import numpy as np
import pytest

from edskit.checks import Status
from edskit.darboux import (InvariantSet, LieAlgebraPresentation, NotImplementedForType, build_projection,
                            check_darboux, coefficients_depend_only_on_base1, derived_tangential_frame,
                            fingerprint, fingerprint_constants, lift_frame, normalize_structure,
                            presentation_from_frame, system_symmetries, verify_tangential_symmetry)
from edskit.darboux.algebra import JacobiViolation, NotClosed
from edskit.decomposable import DecomposableSystem
from edskit.expr import Const, Verdict, is_zero
from edskit.geometry import Chart, count_invariants, lie_bracket

from conftest import projection_of, system_of


def fibers(chart, guard, count=4, salt=7):
    env = chart.sample(guard, count=count, salt=salt)
    return [{k: float(v[i]) for k, v in env.items()} for i in range(count)]


# ---- Darboux integrability ---------------------------------------------------------

def test_liouville_is_darboux(liouville):
    rep = check_darboux(system_of(liouville), InvariantSet(tuple(liouville.invariants_F),
                                                           tuple(liouville.invariants_G)))
    assert rep.ok and rep.counted_F == 2 and rep.counted_G == 2
    assert all(c.certification == "symbolic" for c in rep.checks if "annihilates" in c.name)


def test_sine_gordon_is_not_darboux(sine_gordon):
    sys_ = system_of(sine_gordon)
    rep = check_darboux(sys_, InvariantSet(tuple(sine_gordon.invariants_F), tuple(sine_gordon.invariants_G)))
    assert rep.status is Status.FAIL
    assert count_invariants(sys_.F) == 1 and rep.counted_F == 1


def test_wrong_invariant_is_rejected(wave):
    sys_ = system_of(wave)
    rep = check_darboux(sys_, InvariantSet.parse(sys_.chart, ["y", "p"], ["x", "p"]))
    assert rep.status is Status.FAIL


# ---- projection and lifts ----------------------------------------------------------

def test_wave_projection(wave):
    _, proj = projection_of(wave)
    comps = proj.components()
    assert [str(comps[n]) for n in proj.base1] == ["x", "p"]
    assert [str(comps[n]) for n in proj.base2] == ["y", "q"]
    assert proj.s == 1
    assert all(c.ok for c in proj.checks)


def test_wave_derived_frame(wave):
    sys_, proj = projection_of(wave)
    lift = lift_frame(proj)
    pres = derived_tangential_frame(lift, "F")
    assert pres.frame == (sys_.chart.field("-d/dz"),)
    fp = fingerprint(pres)
    assert fp.dimension == 1 and fp.abelian
    norm = normalize_structure(pres, proj)
    syms = system_symmetries(norm.presentation, sys_, proj)
    assert syms.fields == [sys_.chart.field("d/dz")]


def test_vertical_frame_and_nonvertical_field(wave):
    sys_, proj = projection_of(wave)
    assert proj.pi.is_vertical(sys_.chart.field("d/dz")).verdict is Verdict.ZERO
    assert proj.pi.is_vertical(sys_.chart.field("d/dp")).verdict is Verdict.NONZERO
    check = verify_tangential_symmetry(sys_.chart.field("d/dp"), sys_, proj, "F")
    assert check.status is Status.FAIL


def test_liouville_derived_algebra_is_sl2(liouville):
    sys_, proj = projection_of(liouville)
    pres = derived_tangential_frame(lift_frame(proj), "F")
    assert pres.dim == 3
    assert coefficients_depend_only_on_base1(pres, proj).verdict is Verdict.ZERO
    prints = [fingerprint(pres, p) for p in fibers(sys_.chart, sys_.V.guard_exprs())]
    assert all(fp == prints[0] for fp in prints)
    assert prints[0].killing_signature == (2, 1, 0) and prints[0].derived_series == (3,)
    with pytest.raises(NotImplementedForType):
        normalize_structure(pres, proj)


def test_fiber_dependent_coefficient_is_detected(wave):
    # a frame on the wave chart whose structure depends on q, a B2 coordinate
    sys_, proj = projection_of(wave)
    c = sys_.chart
    pres = presentation_from_frame([c.field("d/dz"), c.field("exp(q*z)*d/dz + d/dy")])
    assert coefficients_depend_only_on_base1(pres, proj).verdict is Verdict.NONZERO


def test_restricted_structure_is_constant_along_fibers(liouville):
    sys_, proj = projection_of(liouville)
    pres = derived_tangential_frame(lift_frame(proj), "F")
    m1 = {"x": 0.3, "y": 0.1, "z": 0.2, "p": 0.5, "q": -0.4, "r": 0.7, "t": 0.2}
    # same x and r - p^2/2, everything else moved
    m2 = {"x": 0.3, "y": -0.6, "z": -0.5, "p": 1.0, "q": 0.9, "r": 0.7 - 0.125 + 0.5, "t": -1.1}
    pi = proj.pi
    b1 = [pi.components[pi.target.coordinates.index(n)] for n in proj.base1]
    from edskit.expr import eval_at
    assert np.allclose([eval_at(e, m1) for e in b1], [eval_at(e, m2) for e in b1])
    assert np.allclose(pres.constants_at(m1), pres.constants_at(m2), atol=1e-12)


@pytest.mark.parametrize("name", ["wave", "liouville"])
def test_fingerprint_ignores_choice_of_base_frame(name, request):
    spec = request.getfixturevalue(name)
    sys_, proj = projection_of(spec)
    t = proj.pi.target
    b1, b2 = proj.base1, proj.base2
    alt_F = [t.field(f"d/d{b1[0]} + d/d{b1[1]}"), t.field(f"d/d{b1[1]}")]
    alt_G = [t.field(f"2*d/d{b2[0]}"), t.field(f"d/d{b2[0]} - d/d{b2[1]}")]
    pt = fibers(sys_.chart, sys_.V.guard_exprs(), 1)[0]
    for side in ("F", "G"):
        a = derived_tangential_frame(lift_frame(proj), side)
        b = derived_tangential_frame(lift_frame(proj, alt_F, alt_G), side)
        assert fingerprint(a, pt) == fingerprint(b, pt)


# ---- Goursat k = 2 -----------------------------------------------------------------

def test_goursat_symmetries_verify(goursat):
    sys_, proj = projection_of(goursat)
    for X in goursat.symmetries_F:
        assert verify_tangential_symmetry(X, sys_, proj, "F").ok


def test_goursat_symmetries_commute(goursat):
    L = goursat.symmetries_F
    for i in range(len(L)):
        for j in range(i + 1, len(L)):
            assert lie_bracket(L[i], L[j]).zero_test().verdict is Verdict.ZERO
    fp = fingerprint(presentation_from_frame(L))
    assert fp.dimension == 5 and fp.abelian


def test_printed_signs_of_higher_symmetries_are_rejected(goursat):
    sys_, proj = projection_of(goursat)
    c = sys_.chart
    printed = [
        "H*d/dz - H^2*d/dp - 3*H^2*d/dq + 2*H^3*d/dr + 10*H^3*d/dt + 6*H^4*d/dzxxx + 42*H^4*d/dzyyy",
        "H^2*d/dz - 2*H^3*d/dp - 2*H^3*d/dq + 6*H^4*d/dr + 6*H^4*d/dt - 24*H^4*d/dzxxx - 24*H^4*d/dzyyy",
    ]
    for text in printed:
        X = c.field(text)
        assert verify_tangential_symmetry(X, sys_, proj, "F").status is Status.FAIL


def test_goursat_derived_algebras_are_abelian(goursat):
    sys_, proj = projection_of(goursat)
    lift = lift_frame(proj)
    for side in ("F", "G"):
        pres = derived_tangential_frame(lift, side)
        fp = fingerprint(pres)
        assert fp.dimension == 5 and fp.abelian


def test_goursat_center_keeps_only_common_symmetries(goursat):
    sys_, proj = projection_of(goursat)
    pres = derived_tangential_frame(lift_frame(proj), "F")
    rep = system_symmetries(normalize_structure(pres, proj).presentation, sys_, proj)
    assert len(rep.fields) + len(rep.rejected) == 5
    for X in rep.fields:
        for side in ("F", "G"):
            assert verify_tangential_symmetry(X, sys_, proj, side).ok
    for X in rep.rejected:
        assert not all(verify_tangential_symmetry(X, sys_, proj, side).ok for side in ("F", "G"))


# ---- fingerprints on their own ----------------------------------------------------

def _constants(m, brackets):
    c = [[[Fraction(0)] * m for _ in range(m)] for _ in range(m)]
    for (i, j), vec in brackets.items():
        for k, v in enumerate(vec):
            c[i][j][k] = Fraction(v)
            c[j][i][k] = -Fraction(v)
    return c


def test_fingerprint_of_heisenberg_constants():
    fp = fingerprint_constants(_constants(3, {(0, 1): (0, 0, 1)}))
    assert fp.derived_series == (3, 1, 0) and fp.lower_central_series == (3, 1, 0)
    assert fp.center_dimension == 1 and fp.center_basis == ((0, 0, 1),)
    assert fp.killing_signature == (0, 0, 3) and not fp.abelian


def test_fingerprint_of_sl2_constants():
    # [h, e] = 2e, [h, f] = -2f, [e, f] = h
    fp = fingerprint_constants(_constants(3, {(0, 1): (0, 2, 0), (0, 2): (0, 0, -2), (1, 2): (1, 0, 0)}))
    assert fp.killing_signature == (2, 1, 0) and fp.center_dimension == 0


def test_float_and_exact_fingerprints_agree():
    c = _constants(3, {(0, 1): (0, 2, 0), (0, 2): (0, 0, -2), (1, 2): (1, 0, 0)})
    assert fingerprint_constants(c) == fingerprint_constants(np.array(c, dtype=float), tol=1e-9)


def test_fingerprint_rejects_jacobi_violation():
    c = _constants(3, {(0, 1): (0, 0, 1), (0, 2): (0, 0, 1), (1, 2): (1, 0, 0)})
    with pytest.raises(JacobiViolation):
        fingerprint_constants(c)


def test_frame_that_does_not_close():
    c = Chart.make("x y z")
    with pytest.raises(NotClosed):
        presentation_from_frame([c.field("d/dx"), c.field("d/dy + x*d/dz")])


# ---- normalization -------------------------------------------------------------------

def test_two_dimensional_normalization():
    c = Chart.make("b u1 u2", box={"b": (0.5, 1.5)})
    X1 = c.field("d/du2")
    X2 = c.field("-(1+b^2)*u2*d/du2 + d/du1")
    pres = presentation_from_frame([X1, X2])
    assert pres.constants is None
    norm = normalize_structure(pres)
    assert all(ch.ok for ch in norm.checks)
    const = norm.presentation.constants
    assert const is not None
    assert norm.reference["b"] == 1
    assert [const[0][1][k] for k in range(2)] == [Fraction(-2), Fraction(0)]


def test_trivial_fiber_gives_empty_algebra():
    c = Chart.make("x y")
    sys_ = DecomposableSystem(c, [c.field("d/dx")], [c.field("d/dy")])
    proj = build_projection(sys_, InvariantSet.parse(c, ["y"], ["x"]))
    assert proj.s == 0
    pres = derived_tangential_frame(lift_frame(proj), "F")
    assert pres.dim == 0
    assert system_symmetries(pres, sys_, proj).fields == []
