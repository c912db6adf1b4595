import json
import math

import numpy as np
import pytest

from edskit.expr import Const, Sym, SymbolTable, parse_expr
from edskit.solver import (Curve, DegenerateCurve, GridTooCoarse, IntegralSurface, integrate_surface,
                           residual_check, restrict_to_lift, start_point)

from conftest import projection_of

U, V = Sym("u"), Sym("v")
XY = SymbolTable.of(("x", "y", "z"))


def lift(spec, g1, g2, ur=(0.5, 1.5), vr=(0.5, 1.5), n=21, tol=1e-10):
    sys_, proj = projection_of(spec)
    dirs = restrict_to_lift(sys_, proj, Curve("u", g1, ur), Curve("v", g2, vr))
    m0 = start_point(dirs, spec.lift_start or {c: 0.0 for c in sys_.chart.coordinates}, ur[0], vr[0])
    return integrate_surface(dirs, m0, np.linspace(*ur, n), np.linspace(*vr, n), atol=tol, rtol=tol)


def test_wave_surface_with_flat_data_is_constant(wave):
    surf = lift(wave, (U, Const(0)), (V, Const(0)), n=11)
    z = surf.coordinate("z")
    assert np.max(np.abs(z - z[0, 0])) < 1e-12
    assert np.allclose(surf.coordinate("x")[:, 0], surf.u)
    assert surf.path_defect < 1e-9


def test_wave_surface_is_a_sum_of_profiles(wave):
    # p = sin(u) along x = u and q = v^2 along y = v give z = -cos(x) + y^3/3 + const
    sin_u = parse_expr("sin(u)", SymbolTable.of(("u",)))
    surf = lift(wave, (U, sin_u), (V, V * V), n=11)
    x, y, z = (surf.coordinate(c) for c in "xyz")
    expected = -np.cos(x) + y ** 3 / 3
    shift = z[0, 0] - expected[0, 0]
    assert np.max(np.abs(z - expected - shift)) < 1e-8
    assert surf.tangency["failures"] == 0


def test_liouville_surface_matches_closed_form(liouville):
    surf = lift(liouville, liouville.lift_gamma1, liouville.lift_gamma2)
    x, y, z = (surf.coordinate(c) for c in "xyz")
    exact = np.log(2 / (x + y) ** 2)
    assert np.max(np.abs(z - exact)) < 1e-6
    assert residual_check(surf, liouville.pde).max_residual < 1e-5
    assert surf.path_defect < 1e-9
    assert surf.projection_error < 1e-9


def test_single_node_grid(liouville):
    sys_, proj = projection_of(liouville)
    dirs = restrict_to_lift(sys_, proj, Curve("u", liouville.lift_gamma1, (0.5, 1.5)),
                            Curve("v", liouville.lift_gamma2, (0.5, 1.5)))
    m0 = start_point(dirs, liouville.lift_start, 0.5, 0.5)
    surf = integrate_surface(dirs, m0, [0.5], [0.5])
    assert surf.points.shape == (1, 1, 7)
    assert np.array_equal(surf.points[0, 0], m0)


def test_constant_curve_is_degenerate(wave):
    sys_, proj = projection_of(wave)
    with pytest.raises(DegenerateCurve):
        restrict_to_lift(sys_, proj, Curve("u", (Const(1), Const(0)), (0, 1)), Curve("v", (V, Const(0)), (0, 1)))


def test_curve_rejects_foreign_symbols():
    with pytest.raises(ValueError):
        Curve("u", (U, V), (0, 1))


def test_start_point_lands_on_the_fiber(liouville):
    sys_, proj = projection_of(liouville)
    dirs = restrict_to_lift(sys_, proj, Curve("u", liouville.lift_gamma1, (0.5, 1.5)),
                            Curve("v", liouville.lift_gamma2, (0.5, 1.5)))
    guess = {**liouville.lift_start, "r": 3.0, "t": 1.0}
    m0 = start_point(dirs, guess, 0.5, 0.5)
    assert np.allclose(dirs.project(m0), dirs.target(0.5, 0.5), atol=1e-12)


def _closed(z_of):
    u = np.linspace(0.1, 1.1, 21)
    return IntegralSurface.from_functions(("x", "y", "z"), u, u, {"x": lambda a, b: a, "y": lambda a, b: b,
                                                                   "z": z_of})


def test_residual_of_closed_form_surfaces():
    pde = parse_expr("z_xy", SymbolTable.of(("x", "y", "z", "z_xy")))
    assert abs(residual_check(_closed(lambda a, b: a * b), pde).max_residual - 1.0) < 1e-9
    assert residual_check(_closed(lambda a, b: 0 * a), pde).max_residual == 0.0


def test_residual_in_skewed_parameters():
    # x = u + v, y = u - v: the inverse Jacobian has to be applied
    u = np.linspace(0.1, 1.1, 21)
    surf = IntegralSurface.from_functions(("x", "y", "z"), u, u, {
        "x": lambda a, b: a + b, "y": lambda a, b: a - b, "z": lambda a, b: np.log(2 / (2 * a + 1) ** 2)})
    pde = parse_expr("z_xy - exp(z)", SymbolTable.of(("x", "y", "z", "z_xy")))
    assert residual_check(surf, pde).max_residual < 1e-5


def test_coarse_grid_warns():
    u = np.linspace(0, 1, 2)
    surf = IntegralSurface.from_functions(("x", "y", "z"), u, u, {"x": lambda a, b: a, "y": lambda a, b: b,
                                                                  "z": lambda a, b: a * b})
    pde = parse_expr("z_xy", SymbolTable.of(("x", "y", "z", "z_xy")))
    with pytest.warns(GridTooCoarse):
        rep = residual_check(surf, pde)
    assert math.isnan(rep.max_residual)


def test_surface_csv_and_sidecar(wave, tmp_path):
    surf = lift(wave, (U, Const(0)), (V, Const(0)), n=3)
    out = tmp_path / "s.csv"
    surf.to_csv(out)
    lines = out.read_text().splitlines()
    assert lines[0] == "u,v,x,y,z,p,q" and len(lines) == 10
    meta = json.loads((tmp_path / "s.csv.json").read_text())
    assert meta["grid"] == [3, 3]
