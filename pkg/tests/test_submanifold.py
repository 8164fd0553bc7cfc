import math

import numpy as np
import pytest

from horolab.errors import DomainError, UnsupportedError
from horolab.poly import MAX_DEGREE, Polynomial
from horolab.submanifold import (PolyGraphMap, RadialWindow, SurfaceMeasure, box_integral,
                                 integrate_against, localize, unit_points)

PARABOLOID = PolyGraphMap.from_terms(2, [[((2, 0), 1.0), ((0, 2), 1.0)]])
PARABOLA = PolyGraphMap.from_terms(1, [[((2,), 1.0)]])


def test_polynomial_basics():
    p = Polynomial.from_terms(2, [((2, 0), 1.0), ((0, 1), 3.0), ((2, 0), 1.0), ((1, 1), 0.0)])
    assert p.terms() == [((0, 1), 3.0), ((2, 0), 2.0)]
    assert p.degree == 2
    t = np.array([[0.5, -1.0], [2.0, 0.0]])
    assert np.allclose(p(t), [2 * 0.25 - 3, 8.0])
    assert p.diff(0).terms() == [((1, 0), 4.0)]
    assert p.diff(1).terms() == [((0, 0), 3.0)]
    assert Polynomial.zero(2).is_zero()
    assert (p * 2.0)(t[0]) == pytest.approx(2 * p(t[0]))
    q = Polynomial.coordinate(2, 0) * Polynomial.coordinate(2, 1)
    assert not q.is_separable() and p.is_separable()
    assert (p + q)(t[0]) == pytest.approx(p(t[0]) + q(t[0]))
    with pytest.raises(DomainError):
        Polynomial.from_terms(1, [((MAX_DEGREE + 1,), 1.0)])
    with pytest.raises(DomainError):
        p(np.zeros(3))


def test_graph_map_derivatives_match_finite_differences():
    phi = PolyGraphMap.from_terms(2, [[((2, 0), 1.0), ((1, 1), 0.5)],
                                      [((0, 3), 1.0), ((1, 0), -2.0)]])
    t = np.array([0.3, -0.2])
    h = 1e-6
    J = phi.jacobian(t)
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        fd = (phi.eval_graph(t + e) - phi.eval_graph(t - e)) / (2 * h)
        assert np.allclose(J[:, i], fd, atol=1e-8)
    H = phi.hessians(t)
    for r in range(2):
        for i in range(2):
            e = np.zeros(2)
            e[i] = h
            fd = (phi.dw(t + e)[r] - phi.dw(t - e)[r]) / (2 * h)
            assert np.allclose(H[r, :, i], fd, atol=1e-6)
    assert np.allclose(phi.hessian_z([1.0, 0.0], t), [[2, 0.5], [0.5, 0]])
    assert np.allclose(H, np.swapaxes(H, -1, -2))


def test_gram_volume():
    t = np.array([[0.1, 0.4], [0.0, 0.0]])
    J = PARABOLOID.jacobian(t)
    want = np.sqrt(np.linalg.det(np.swapaxes(J, -1, -2) @ J))
    assert np.allclose(PARABOLOID.gram_volume(t), want)
    assert PARABOLA.gram_volume(np.array([[0.5]]))[0] == pytest.approx(math.sqrt(2))


def test_graph_map_validation():
    with pytest.raises(DomainError):
        PolyGraphMap(2, 2, (Polynomial.zero(2),))
    with pytest.raises(DomainError):
        PolyGraphMap(2, 1, (Polynomial.zero(1),))
    with pytest.raises(DomainError):
        PARABOLOID.eval_graph(np.zeros(3))


def test_box_integral():
    val = box_integral(lambda p: np.exp(p[:, 0]) * np.cos(p[:, 1]), ((0, 1), (0, 1)))
    assert val == pytest.approx((math.e - 1) * math.sin(1), abs=1e-12)


def test_surface_measure_is_probability():
    mu = SurfaceMeasure(PARABOLOID)
    assert box_integral(mu.density, mu.support_box()) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(DomainError):
        SurfaceMeasure(PARABOLA, halfwidth=0.6, center=(0.5,))


def test_radial_window_unit_mass():
    for d in (2, 3):
        w = RadialWindow(d)
        box = ((-1, 1),) * d
        assert box_integral(w, box, tol=1e-6) == pytest.approx(1.0, abs=2e-3)
        assert w(np.full(d, 1.0)) == 0.0


def test_localized_measure():
    mu = SurfaceMeasure(PARABOLOID)
    loc = localize(mu, (0.1, 0.05, 0.0125), 0.5)
    assert 0 < loc.mass() <= 1.0
    far = localize(mu, (5.0, 5.0, 0.0), 0.25)
    assert far.support_box() is None and far.mass() == 0.0
    with pytest.raises(DomainError):
        localize(mu, (0.0, 0.0, 0.0), 0.75)
    with pytest.raises(DomainError):
        localize(mu, (0.0, 0.0), 0.25)


def test_unit_points():
    for method in ("halton", "mc", "lattice"):
        u = unit_points(method, 1000, 2, 0, 0)
        assert u.shape[1] == 2 and np.all((0 <= u) & (u < 1))
        assert np.array_equal(u, unit_points(method, 1000, 2, 0, 0))
    assert unit_points("lattice", 1000, 2, 0, 0).shape[0] == 1597
    with pytest.raises(UnsupportedError):
        unit_points("lattice", 10, 3, 0, 0)
    with pytest.raises(DomainError):
        unit_points("sobol", 10, 2, 0, 0)


def test_integrate_against():
    mu = SurfaceMeasure(PARABOLOID)
    one = integrate_against(mu, lambda x: np.ones(x.shape[0]), n_points=1 << 14)
    assert one.value == pytest.approx(1.0, abs=1e-12)
    # the density is even in each coordinate, so the first moment vanishes
    first = integrate_against(mu, lambda x: x[:, 0], n_points=1 << 16)
    assert abs(first.value) < 4 * first.stderr + 1e-6
    # second moment against a box quadrature of the density
    want = box_integral(lambda t: mu.density(t) * t[:, 0] ** 2, mu.support_box())
    got = integrate_against(mu, lambda x: x[:, 0] ** 2, n_points=1 << 16)
    assert abs(got.value - want) < 4 * got.stderr + 1e-6
