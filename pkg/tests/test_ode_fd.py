import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from edskit.fd import derivative, fornberg_weights
from edskit.ode import DomainExit, OdeStats, integrate, sweep


def test_exponential_decay():
    ts = np.linspace(0.1, 2.0, 7)
    y = integrate(lambda t, y: -y, 0.0, [1.0], ts, atol=1e-12, rtol=1e-12)
    assert np.allclose(y[:, 0], np.exp(-ts), atol=1e-10)


def test_output_times_are_hit_exactly():
    # y' = 1 is integrated exactly by any Runge-Kutta step
    ts = [0.3, 0.7, 1.9]
    y = integrate(lambda t, y: np.ones(1), 0.0, [0.0], ts)
    assert list(y[:, 0]) == pytest.approx(ts, abs=1e-14)


def test_backward_integration():
    y = integrate(lambda t, y: np.array([y[1], -y[0]]), 0.0, [0.0, 1.0], [-1.0, -2.0], atol=1e-12, rtol=1e-12)
    assert np.allclose(y[:, 0], np.sin([-1.0, -2.0]), atol=1e-10)


def test_sweep_goes_both_ways():
    grid = np.linspace(-1, 1, 9)
    y = sweep(lambda t, y: y, 0.0, [1.0], grid, atol=1e-12, rtol=1e-12)
    assert np.allclose(y[:, 0], np.exp(grid), atol=1e-10)


def test_stats_are_counted():
    stats = OdeStats()
    integrate(lambda t, y: -y, 0.0, [1.0], [1.0], stats=stats)
    assert stats.steps > 0 and stats.evaluations >= 6 * stats.steps


def test_domain_exit_propagates():
    def f(t, y):
        if t > 0.5:
            raise DomainExit("pole")
        return y

    with pytest.raises(DomainExit):
        integrate(f, 0.0, [1.0], [1.0])


@settings(max_examples=30, deadline=None)
@given(st.floats(-1, 1), st.integers(3, 7))
def test_fornberg_weights_are_exact_on_polynomials(x0, n):
    xs = np.linspace(-1.5, 1.5, n)
    w = fornberg_weights(x0, xs, 2)
    for deg in range(n):
        f = xs ** deg
        d1 = deg * x0 ** (deg - 1) if deg >= 1 else 0.0
        d2 = deg * (deg - 1) * x0 ** (deg - 2) if deg >= 2 else 0.0
        assert w[1] @ f == pytest.approx(d1, abs=1e-8)
        assert w[2] @ f == pytest.approx(d2, abs=1e-7)


def test_grid_derivative_of_sine():
    x = np.linspace(0, math.pi, 41)
    d = derivative(np.sin(x), x)
    assert np.max(np.abs(d - np.cos(x))) < 1e-8


def test_grid_derivative_along_axis():
    x = np.linspace(0, 1, 11)
    y = np.linspace(0, 2, 13)
    X, Y = np.meshgrid(x, y, indexing="ij")
    d = derivative(X ** 2 * Y ** 3, y, axis=1)
    assert np.allclose(d, 3 * X ** 2 * Y ** 2, atol=1e-9)
