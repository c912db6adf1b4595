import numpy as np
import pytest

from edskit.checks import Status
from edskit.decomposable import (DecomposableSystem, FrameDegeneracy, IntegralElement, check_decomposable,
                                 is_integral_element, prolong)
from edskit.geometry import Chart

from conftest import system_of

PT = {"x": 0.3, "y": -0.2, "z": 0.1, "p": 0.4, "q": -0.6}


def test_wave_class(wave):
    rep = check_decomposable(system_of(wave))
    assert rep.ok and rep.klass == (1, 2, 2) and rep.no_invariants_of_V


def test_liouville_class(liouville):
    rep = check_decomposable(system_of(liouville))
    assert rep.ok and rep.klass == (3, 2, 2)


def test_overlapping_distributions_fail():
    c = Chart.make("x y")
    sys_ = DecomposableSystem(c, [c.field("d/dx")], [c.field("d/dx")])
    rep = check_decomposable(sys_)
    assert rep.status is Status.FAIL
    assert any("intersect" in f.name for f in rep.failures)


def test_cross_bracket_outside_sum_fails():
    c = Chart.make("x y z")
    sys_ = DecomposableSystem(c, [c.field("d/dx")], [c.field("d/dy + x*d/dz")])
    rep = check_decomposable(sys_)
    assert rep.status is Status.FAIL
    assert any("[F1,G1]" in f.name for f in rep.failures)


def test_swap_reports_transposed_class(liouville):
    sys_ = system_of(liouville)
    a, b = check_decomposable(sys_), check_decomposable(sys_.swapped())
    assert a.status is b.status
    assert b.klass == (a.klass[0], a.klass[2], a.klass[1])


def test_integral_elements(wave):
    sys_ = system_of(wave)
    f = sys_.F.generators[0].at(PT)
    g = sys_.G.generators[0].at(PT)
    assert is_integral_element(sys_, IntegralElement(PT, f, g))
    assert not is_integral_element(sys_, IntegralElement(PT, f, sys_.F.generators[1].at(PT)))
    off = np.zeros(5)
    off[2] = 1.0  # d/dz is not in F+G
    assert not is_integral_element(sys_, IntegralElement(PT, f, off))


def test_random_spans_are_integral_elements(wave):
    sys_ = system_of(wave)
    rng = np.random.default_rng(11)
    for _ in range(20):
        a, b = rng.normal(size=2), rng.normal(size=2)
        f = sum(ai * X.at(PT) for ai, X in zip(a, sys_.F.generators))
        g = sum(bi * Y.at(PT) for bi, Y in zip(b, sys_.G.generators))
        assert is_integral_element(sys_, IntegralElement(PT, f, g))
        # a mixed basis spans the same plane
        assert is_integral_element(sys_, IntegralElement(PT, f + g, f - 2 * g))


def test_prolong_wave(wave):
    pro = prolong(system_of(wave))
    rep = check_decomposable(pro)
    assert rep.ok and rep.klass == (3, 2, 2)


def test_prolong_liouville(liouville):
    pro = prolong(system_of(liouville))
    assert pro.klass == (5, 2, 2)
    assert check_decomposable(pro).ok


def test_prolong_needs_nonvanishing_first_generator():
    c = Chart.make("x y z")
    sys_ = DecomposableSystem(c, [c.field("d/dx"), c.field("d/dz")], [c.field("0*d/dy")])
    with pytest.raises(FrameDegeneracy):
        prolong(sys_)
