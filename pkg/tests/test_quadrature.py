import math

import numpy as np
import pytest

from nlbvp.quadrature import (
    QuadratureError, UniformGrid, cumulative_simpson, integrate_adaptive, simpson,
)


def test_cubics_exact():
    rng = np.random.default_rng(1)
    for _ in range(50):
        c = rng.normal(size=4)
        a, b = sorted(rng.uniform(-2, 2, size=2))
        poly = np.polynomial.Polynomial(c)
        exact = poly.integ()(b) - poly.integ()(a)
        grid = UniformGrid(a, b, 2)
        assert simpson(poly(grid.nodes), grid) == pytest.approx(exact, rel=1e-13, abs=1e-13)


def test_fourth_order():
    errs = []
    for n in (8, 16, 32, 64):
        g = UniformGrid(0.0, 2.0, n)
        errs.append(abs(simpson(np.exp(g.nodes), g) - (math.exp(2) - 1)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 3.9)


def test_linearity_and_batches():
    g = UniformGrid(0.0, 1.0, 10)
    x = g.nodes
    f, h = np.sin(x), x**2
    assert simpson(2 * f + 3 * h, g) == pytest.approx(2 * simpson(f, g) + 3 * simpson(h, g), rel=1e-15)
    batch = simpson(np.column_stack([f, h]), g)
    assert np.allclose(batch, [simpson(f, g), simpson(h, g)], rtol=1e-15)


def test_cumulative_matches_endpoints_and_cubics():
    g = UniformGrid(0.0, 3.0, 12)
    x = g.nodes
    c = cumulative_simpson(x**3 - x, g, initial=1.0)
    assert c[0] == 1.0
    assert c[-1] == pytest.approx(1.0 + simpson(x**3 - x, g), rel=1e-14)
    exact = 1.0 + x**4 / 4 - x**2 / 2
    # even nodes are full Simpson panels: exact for cubics
    assert np.allclose(c[::2], exact[::2], rtol=1e-12, atol=1e-12)
    # odd nodes use a half-panel rule that is exact for quadratics
    q = cumulative_simpson(3 * x**2 - 2 * x, g)
    assert np.allclose(q, x**3 - x**2, rtol=1e-12, atol=1e-12)


def test_adaptive_reaches_tolerance():
    res = integrate_adaptive(lambda t: np.exp(-t) * np.cos(3 * t), 0.0, 4.0)
    exact = (1 + math.exp(-4) * (3 * math.sin(12) - math.cos(12))) / 10
    assert res.converged
    assert res.value == pytest.approx(exact, rel=1e-10)


def test_grid_validation():
    with pytest.raises(QuadratureError):
        UniformGrid(0.0, 1.0, 3)
    with pytest.raises(QuadratureError):
        integrate_adaptive(np.sin, 1.0, 0.0)
    with pytest.raises(QuadratureError), np.errstate(divide="ignore"):
        integrate_adaptive(lambda t: 1 / t, 0.0, 1.0)
