import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from horolab.errors import DomainError, ResourceError
from horolab.sl2 import (IDENTITY, S, T, Mat2, a_batch, coset_point,
                         haar_integrate_sl2, in_fundamental_domain, iwasawa_decompose,
                         iwasawa_matrix, iwasawa_recompose, lattice_enumerate, make_a,
                         make_u, moebius, quotient_norm, quotient_norm_batch, reduce, reduce_batch,
                         t_power, u_batch)


def random_mat(gen) -> Mat2:
    x, th = gen.uniform(-3, 3), gen.uniform(0, 2 * np.pi)
    y = math.exp(gen.uniform(-2, 2))
    return Mat2.from_array(iwasawa_matrix(x, y, th))


finite = st.floats(-5, 5, allow_nan=False)
positive = st.floats(1e-3, 1e3, allow_nan=False)
angle = st.floats(0, 2 * math.pi, allow_nan=False)


def test_constructors_identity():
    assert make_a(1).allclose(IDENTITY)
    assert make_u(0).allclose(IDENTITY)
    with pytest.raises(DomainError):
        make_a(0)
    with pytest.raises(DomainError):
        Mat2(1, 1, 1, 1)


def test_commutation_examples():
    gen = np.random.default_rng(0)
    y = gen.uniform(1e-4, 1, 10_000)
    w = gen.uniform(-1, 1, 10_000)
    assert np.max(np.abs(a_batch(y) @ u_batch(w) - u_batch(w / y) @ a_batch(y))) < 1e-12
    assert (make_a(0.3) @ make_u(0.7)).allclose(make_u(0.7 / 0.3) @ make_a(0.3), 1e-12)


def test_group_law_and_det():
    gen = np.random.default_rng(1)
    for _ in range(200):
        g1, g2, g3 = (random_mat(gen) for _ in range(3))
        assert ((g1 @ g2) @ g3).allclose(g1 @ (g2 @ g3), 1e-10)
        assert abs((g1 @ g2).det - 1) < 1e-9
        assert g1.frob2() >= 2 - 1e-12


def test_moebius_examples():
    assert moebius(IDENTITY, 1j) == 1j
    assert abs(moebius(make_a(3.0), 1j) - 3j) < 1e-12
    assert abs(moebius(make_u(1.0), 1j) - (1 + 1j) / 2) < 1e-12
    with pytest.raises(DomainError):
        moebius(IDENTITY, -1j)
    with pytest.raises(DomainError):
        moebius(IDENTITY, complex(math.nan, 1))


@settings(max_examples=50, deadline=None)
@given(finite, positive, angle, finite, positive, angle, finite, positive)
def test_moebius_is_left_action(x1, y1, t1, x2, y2, t2, zx, zy):
    g1 = Mat2.from_array(iwasawa_matrix(x1, y1, t1))
    g2 = Mat2.from_array(iwasawa_matrix(x2, y2, t2))
    z = complex(zx, zy)
    lhs = moebius(g1 @ g2, z)
    rhs = moebius(g1, moebius(g2, z))
    assert lhs.imag > 0
    assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs))


def test_iwasawa_examples():
    c = iwasawa_decompose(IDENTITY)
    assert (c.x, c.y, c.theta) == pytest.approx((0, 1, 0), abs=1e-12)
    c = iwasawa_decompose(make_a(4))
    assert (c.x, c.y, c.theta) == pytest.approx((0, 4, 0), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(finite, positive, angle)
def test_iwasawa_round_trip(x, y, th):
    g = Mat2.from_array(iwasawa_matrix(x, y, th))
    c = iwasawa_decompose(g)
    assert 0 <= c.theta < 2 * math.pi and c.y > 0
    assert iwasawa_recompose(c).allclose(g, 1e-9 * max(1.0, g.frob()))


def test_reduce_examples():
    # coset point z = 5 + i
    g = Mat2(1.0, 5.0, 0.0, 1.0)
    assert abs(coset_point(g) - (5 + 1j)) < 1e-12
    r = reduce(g)
    assert abs(r.z - 1j) < 1e-12
    assert r.gamma.allclose(t_power(-5), 0) or r.gamma.allclose(-t_power(-5), 0)

    g = Mat2.from_array([[1 / math.sqrt(0.1), 0.0], [0.0, math.sqrt(0.1)]])
    assert abs(coset_point(g) - 0.1j) < 1e-12
    r = reduce(g)
    assert abs(r.z - 10j) < 1e-9
    assert r.gamma.allclose(S, 0) or r.gamma.allclose(-S, 0)

    r = reduce(IDENTITY)
    assert r.gamma.allclose(IDENTITY, 0)


def test_reduce_invariants_and_idempotence():
    gen = np.random.default_rng(2)
    g = iwasawa_matrix(gen.uniform(-20, 20, 5000), np.exp(gen.uniform(-6, 6, 5000)),
                       gen.uniform(0, 6.3, 5000))
    rep, gamma, z = reduce_batch(g)
    assert np.all(in_fundamental_domain(z))
    assert gamma.dtype.kind == "i"
    det = gamma[:, 0, 0] * gamma[:, 1, 1] - gamma[:, 0, 1] * gamma[:, 1, 0]
    assert np.all(det == 1)
    assert np.allclose(rep, g @ gamma, atol=1e-9, rtol=1e-9)
    _, gamma2, _ = reduce_batch(rep)
    eye = np.eye(2, dtype=np.int64)
    # on the open interior the second reduction is the identity up to sign
    interior = (np.abs(z.real) < 0.5 - 1e-6) & (np.abs(z) > 1 + 1e-6)
    assert all(np.array_equal(m, eye) or np.array_equal(m, -eye) for m in gamma2[interior])


def _brute(R2):
    R = int(math.floor(math.sqrt(R2)))
    out = set()
    for p in range(-R, R + 1):
        for q in range(-R, R + 1):
            for r in range(-R, R + 1):
                for s in range(-R, R + 1):
                    if p * s - q * r == 1 and p * p + q * q + r * r + s * s <= R2:
                        out.add((p, q, r, s))
    return out


@pytest.mark.parametrize("R2", [2, 3, 5, 10, 20])
def test_enumeration_matches_brute_force(R2):
    got = {tuple(int(v) for v in m) for m in lattice_enumerate(IDENTITY, math.sqrt(R2) + 1e-12)}
    assert got == _brute(R2)


def test_enumeration_examples():
    four = {tuple(int(v) for v in m) for m in lattice_enumerate(IDENTITY, math.sqrt(2) + 1e-12)}
    assert four == {(1, 0, 0, 1), (-1, 0, 0, -1), (0, -1, 1, 0), (0, 1, -1, 0)}
    assert lattice_enumerate(IDENTITY, math.sqrt(1.9)) == []
    out = lattice_enumerate(IDENTITY, math.sqrt(3) + 1e-12)
    assert len(out) == 20
    # canonical lexicographic order
    keys = [tuple(m) for m in out]
    assert keys == sorted(keys)


def test_enumeration_nonidentity_basepoint():
    gen = np.random.default_rng(3)
    g = random_mat(gen)
    R = 4.0
    got = {tuple(int(v) for v in m) for m in lattice_enumerate(g, R)}
    bound = int(math.ceil(g.inverse().frob() * R))
    want = set()
    G = g.to_array()
    rng = range(-bound, bound + 1)
    for p in rng:
        for q in rng:
            for r in rng:
                for s in rng:
                    if p * s - q * r == 1:
                        if np.sum((G @ np.array([[p, q], [r, s]])) ** 2) <= R * R:
                            want.add((p, q, r, s))
    assert got == want


def test_enumeration_cap():
    with pytest.raises(ResourceError):
        lattice_enumerate(IDENTITY, 1e4, cap=10)


def test_quotient_norm():
    assert quotient_norm(IDENTITY) == pytest.approx(math.sqrt(2), abs=1e-12)
    for y in (1.0, 2.0, 7.5):
        assert quotient_norm(make_a(y)) == pytest.approx(math.sqrt(y + 1 / y), rel=1e-12)
    gen = np.random.default_rng(4)
    g = random_mat(gen)
    base = quotient_norm(g)
    for gam in (T, S, T @ S @ T @ T, Mat2(1, 0, -2, 1)):
        assert quotient_norm(g @ gam) == pytest.approx(base, rel=1e-9)
    pts = np.stack([random_mat(gen).to_array() for _ in range(20)])
    assert np.allclose(quotient_norm_batch(pts),
                       [quotient_norm(Mat2.from_array(p)) for p in pts], rtol=1e-9)


def test_haar_integrate_examples():
    box = ((0.0, 1.0), (1.0, 2.0), (0.0, 1.0))
    one = lambda g: np.ones(g.shape[0])
    assert haar_integrate_sl2(one, box) == pytest.approx(0.5, abs=1e-12)
    assert haar_integrate_sl2(lambda g: np.zeros(g.shape[0]), box) == 0.0
    with pytest.raises(DomainError):
        haar_integrate_sl2(one, ((0, 1), (0, 1), (0, 1)))


def test_haar_integrate_smooth_bump_refinement():
    from horolab.homspace import AutoBumpFactor

    fac = AutoBumpFactor.at(0.2, 1.1, 0.3, radius=0.4)
    box = fac.support_box()
    coarse = haar_integrate_sl2(fac.raw, box, resolution=48, tol=1e-8)
    fine = haar_integrate_sl2(fac.raw, box, resolution=256)
    assert coarse == pytest.approx(fine, abs=1e-6)


def test_iwasawa_angle_stays_below_two_pi():
    # a rotation by a tiny negative angle must not decompose to theta = 2 pi
    g = Mat2.from_array(iwasawa_matrix(0.0, 1.0, -1e-17))
    assert 0 <= iwasawa_decompose(g).theta < 2 * math.pi
