import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from horolab.curvature import (analytic_diagonalize, certify_region, char_poly_batch,
                               char_poly_coeffs, coeff_system_min, e_star, e_star_values,
                               eigen_abs_sorted, jacobi_eigvals, noncurved_exponent,
                               primitive_dimension, quadratic_form, sphere_minimize,
                               sublevel_exponent)
from horolab.errors import DomainError, FitError, UnsupportedError
from horolab.poly import Polynomial
from horolab.submanifold import PolyGraphMap

PARABOLOID = PolyGraphMap.from_terms(2, [[((2, 0), 1.0), ((0, 2), 1.0)]])
SADDLE = PolyGraphMap.from_terms(2, [[((2, 0), 1.0), ((0, 2), -1.0)]])
CYLINDER = PolyGraphMap.from_terms(2, [[((2, 0), 1.0)]])
CUBIC = PolyGraphMap.from_terms(2, [[((3, 0), 1.0), ((0, 2), 1.0)]])
# codimension 2 in R^4: w = (t1^2 - t2^2, 2 t1 t2); H_z is z1 diag(2,-2) + z2 [[0,2],[2,0]]
COMPLEX_SQUARE = PolyGraphMap.from_terms(2, [[((2, 0), 1.0), ((0, 2), -1.0)], [((1, 1), 2.0)]])


def sym(gen, m):
    A = gen.standard_normal((m, m))
    return A + A.T


def test_char_poly_matches_numpy():
    gen = np.random.default_rng(0)
    for m in (1, 2, 3, 4):
        H = sym(gen, m)
        want = np.poly(H)[::-1][:m]   # coefficients of lambda^0 .. lambda^(m-1)
        assert np.allclose(char_poly_coeffs(H).s, want, atol=1e-10)
    assert np.allclose(char_poly_batch(np.diag([2.0, 3.0])), [6.0, -5.0])
    with pytest.raises(DomainError):
        char_poly_coeffs(np.array([[0.0, 1.0], [0.0, 0.0]]))


@settings(max_examples=50, deadline=None)
@given(arrays(float, (4, 4), elements=st.floats(-10, 10)))
def test_jacobi_matches_eigvalsh(A):
    H = A + A.T
    got = np.sort(jacobi_eigvals(H))
    want = np.linalg.eigvalsh(H)
    assert np.allclose(got, want, atol=1e-9 * max(1.0, np.abs(want).max()))


def test_jacobi_batch_and_abs_sort():
    gen = np.random.default_rng(1)
    H = np.stack([sym(gen, 3) for _ in range(100)])
    assert np.allclose(np.sort(jacobi_eigvals(H), -1), np.linalg.eigvalsh(H), atol=1e-9)
    assert np.allclose(eigen_abs_sorted(np.diag([-3.0, 1.0, 2.0])), [1, 2, 3])


def test_sphere_minimize_circle():
    # minimum of |z . (1, 2)| on the circle is 0, attained at z ~ (2, -1)/sqrt5
    res = sphere_minimize(lambda Z: np.abs(Z @ np.array([1.0, 2.0])), 2, grid_size=64)
    assert res.value < 1e-10
    assert abs(abs(res.argmin @ np.array([2.0, -1.0])) / math.sqrt(5) - 1) < 1e-8


def test_e_star_examples():
    t = np.array([0.3, -0.4])
    assert e_star(PARABOLOID, t)[0] == pytest.approx(2.0, abs=1e-12)
    assert e_star(SADDLE, t)[0] == pytest.approx(2.0, abs=1e-12)
    assert e_star(CYLINDER, t)[0] == pytest.approx(0.0, abs=1e-12)
    # the CUBIC Hessian is diag(6 t1, 2)
    assert e_star(CUBIC, t)[0] == pytest.approx(1.8, abs=1e-12)
    assert np.allclose(e_star_values(CUBIC, [[0.1, 0.0], [0.5, 0.0]]), [0.6, 2.0])


def test_codimension_two():
    t = np.array([0.2, 0.1])
    # H_z has eigenvalues +-2|z| so the second smallest modulus is 2 for every unit z
    val, z = e_star(COMPLEX_SQUARE, t)
    assert val == pytest.approx(2.0, abs=1e-9)
    assert np.linalg.norm(z) == pytest.approx(1.0)
    assert coeff_system_min(COMPLEX_SQUARE, t) == pytest.approx(16.0, rel=1e-9)
    flat = PolyGraphMap.from_terms(2, [[((2, 0), 1.0)], [((2, 0), 2.0)]])
    assert e_star(flat, t)[0] == pytest.approx(0.0, abs=1e-10)
    assert coeff_system_min(flat, t) < 1e-18


def test_e_star_and_coeff_system_vanish_together():
    gen = np.random.default_rng(2)
    for _ in range(10):
        a, b = gen.uniform(0.2, 2, 2)
        gmap = PolyGraphMap.from_terms(2, [[((2, 0), a), ((0, 2), b)]])
        t = gen.uniform(-0.9, 0.9, 2)
        assert e_star(gmap, t)[0] == pytest.approx(2 * min(a, b), rel=1e-9)
        assert coeff_system_min(gmap, t) == pytest.approx((4 * a * b) ** 2, rel=1e-9)


def test_codimension_cap():
    big = PolyGraphMap.from_terms(1, [[((2,), 1.0)]] * 5)
    with pytest.raises(UnsupportedError):
        e_star(big, [0.0])


def test_primitive_dimension():
    assert primitive_dimension(PARABOLOID, [0.3, 0.2]) == 2
    # at the origin the gradient of w vanishes, so not even every single gradient is nonzero
    assert primitive_dimension(PARABOLOID, [0.0, 0.0]) == 0
    assert primitive_dimension(PolyGraphMap.from_terms(1, [[((2,), 1.0)]]), [0.5]) == 1


def test_certify_region_summary():
    grid = np.array([[0.1, 0.1], [0.5, 0.0], [-0.5, 0.2]])
    reports, summary = certify_region(CUBIC, grid, 1.0, grid_size=64)
    assert [r.is_delta_curved for r in reports] == [False, True, True]
    assert summary.noncurved_fraction == pytest.approx(1 / 3)
    assert summary.min_e_star == pytest.approx(0.6)
    with pytest.raises(DomainError):
        certify_region(CUBIC, [[1.0, 0.0]], 1.0)


def test_noncurved_exponent_cubic():
    # e_star = min(6 |t1|, 2): the fraction below delta < 2 is delta / 6
    axis = (np.arange(20_000) + 0.5) / 10_000 - 1
    grid = np.stack(np.meshgrid(axis, [0.0], indexing="ij"), -1).reshape(-1, 2)
    frac, fit = noncurved_exponent(CUBIC, grid, [0.05, 0.1, 0.2, 0.4])
    assert np.allclose(frac, np.array([0.05, 0.1, 0.2, 0.4]) / 6, atol=3e-3)
    assert fit.slope == pytest.approx(1.0, abs=0.05)


def test_sublevel_exponent():
    u = Polynomial.from_terms(1, [((1,), 1.0)])
    fit = sublevel_exponent(u, [1e-3, 1e-2, 1e-1], samples=100_000)
    assert fit.exponent == pytest.approx(1.0, abs=0.01)
    assert fit.fractions[-1] == pytest.approx(0.1, rel=0.01)
    sq = Polynomial.from_terms(1, [((2,), 1.0)])
    assert sublevel_exponent(sq, [1e-4, 1e-3, 1e-2], samples=200_000).exponent == \
        pytest.approx(0.5, abs=0.01)
    with pytest.raises(DomainError):
        sublevel_exponent(Polynomial.zero(1), [0.1, 0.2])
    with pytest.raises(FitError):
        sublevel_exponent(u, [1e-9, 1e-8], samples=1000)


def test_diagonalization():
    lams = [1.0, 2.0, 3.0]
    p = Polynomial.from_terms(3, [((1, 0, 0), 1.0), ((0, 1, 1), 0.5)])
    phi = {(0, 0): 0.3, (0, 1): p, (1, 2): -0.7, (2, 2): p * 2.0}
    gen = np.random.default_rng(3)
    for _ in range(20):
        x = gen.uniform(-1, 1, 3)
        res = analytic_diagonalize(lams, phi, 0.05, x)
        assert res.residual < 1e-12
        F = quadratic_form(lams, phi, 0.05, x)
        assert F == pytest.approx(float(np.sum(np.array(lams) * np.array(res.y) ** 2)), abs=1e-12)
        assert res.jacobian_det == pytest.approx(1.0, abs=0.5)
    # constant phi: the map is linear with det = prod sqrt(D_i / lam_i) * 1
    const = {(0, 0): 0.5}
    r = analytic_diagonalize([1.0], const, 0.1, [0.7])
    assert r.y[0] == pytest.approx(0.7 * math.sqrt(1.1))
    with pytest.raises(DomainError):
        analytic_diagonalize([1.0], {(0, 0): -10.0}, 0.1, [0.5])
    with pytest.raises(DomainError):
        analytic_diagonalize([0.0, 1.0], {}, 0.1, [0.5, 0.5])
