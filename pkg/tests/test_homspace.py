import math

import numpy as np
import pytest

from horolab.errors import DomainError, UnsupportedError
from horolab.homspace import (ONE, AutoBumpFactor, FactorizableTestFn, GElem, QuotientSampler,
                              a_y, constant_testfn, covolume, eval_testfn,
                              fundamental_domain_area, haar_integral_quotient, identity,
                              quotient_mean, sample_quotient, sobolev_estimate, translate, u_t)
from horolab.sl2 import Mat2, coset_point_batch, iwasawa_matrix, make_a, make_u

BUMP = AutoBumpFactor.at(0.1, 1.3, 0.5, radius=0.6)
SMALL = AutoBumpFactor.at(0.05, 1.4, 1.0, radius=0.3)


def random_gelem(gen, d) -> GElem:
    return GElem(tuple(Mat2.from_array(iwasawa_matrix(gen.uniform(-2, 2),
                                                      math.exp(gen.uniform(-1, 1)),
                                                      gen.uniform(0, 6.28)))
                       for _ in range(d)))


def test_translate_examples():
    gen = np.random.default_rng(0)
    x0 = random_gelem(gen, 2)
    out = translate(x0, a_y(1.0, 2))
    assert all(a.allclose(b, 1e-15) for a, b in zip(out.factors, x0.factors))
    t = (0.3, -0.7)
    g = translate(translate(x0, u_t(t)), a_y(0.25, 2))
    for j in range(2):
        want = make_a(0.25) @ make_u(t[j]) @ x0.factors[j]
        assert g.factors[j].allclose(want, 1e-12)
    lhs = a_y(0.25, 2) @ u_t(t)
    rhs = u_t(np.array(t) / 0.25) @ a_y(0.25, 2)
    assert all(a.allclose(b, 1e-12) for a, b in zip(lhs.factors, rhs.factors))
    with pytest.raises(DomainError):
        translate(x0, identity(3))


def test_constant_testfn_is_one():
    gen = np.random.default_rng(1)
    f = constant_testfn(2)
    assert eval_testfn(f, random_gelem(gen, 2)) == 1.0
    pts = np.stack([random_gelem(gen, 2).to_array() for _ in range(10)])
    assert np.all(eval_testfn(f, pts) == 1.0)
    assert haar_integral_quotient(f) == 1.0


def test_gamma_invariance():
    gen = np.random.default_rng(2)
    f = FactorizableTestFn((BUMP, SMALL))
    gammas = [Mat2(1, 1, 0, 1), Mat2(0, -1, 1, 0), Mat2(2, 1, 1, 1), Mat2(1, 0, -3, 1)]
    for _ in range(20):
        p = random_gelem(gen, 2)
        base = eval_testfn(f, p)
        for g1 in gammas:
            for g2 in gammas:
                q = GElem((p.factors[0] @ g1, p.factors[1] @ g2))
                assert abs(eval_testfn(f, q) - base) < 1e-9


def test_batch_matches_scalar_path():
    gen = np.random.default_rng(3)
    f = FactorizableTestFn((BUMP, SMALL))
    pts = [random_gelem(gen, 2) for _ in range(50)]
    # include points inside the support
    pts += [GElem((BUMP.center @ make_u(0.05 * k), SMALL.center)) for k in range(5)]
    batch = eval_testfn(f, np.stack([p.to_array() for p in pts]))
    scalar = np.array([eval_testfn(f, p) for p in pts])
    assert np.allclose(batch, scalar, atol=1e-12)
    assert np.any(batch > 0)


def test_single_term_bump():
    # a small bump centred at a reduced point: only gamma = +-I can contribute,
    # and -I moves the centre far away, so the sum is the single bump value
    fac = AutoBumpFactor.at(0.05, 1.6, 0.2, radius=0.2)
    c = fac.center
    for k in range(5):
        g = c @ make_u(0.02 * k)
        assert fac.automorphized_scalar(g) == pytest.approx(float(fac.raw(g.to_array()[None])[0]),
                                                           abs=1e-15)


def test_fundamental_domain_area_and_covolume():
    assert fundamental_domain_area() == pytest.approx(math.pi / 3, abs=1e-6)
    # the y >= 2 part of the strip: int_{-1/2}^{1/2} int_2^inf y^-2 = 1/2
    from scipy import integrate

    val, _ = integrate.dblquad(lambda y, x: y ** -2, -0.5, 0.5, lambda x: 2.0, lambda x: math.inf)
    assert val == pytest.approx(0.5, abs=1e-10)
    assert covolume() == pytest.approx(math.pi ** 2 / 3, rel=1e-8)


def test_covolume_by_haar_unfolding():
    # unfolding check of the covolume: a bump's quotient mean (exact unfolding)
    # agrees with Monte Carlo sampling on the quotient
    f = FactorizableTestFn((BUMP,))
    exact = haar_integral_quotient(f)
    mean, se = quotient_mean(f, QuotientSampler(7, 1), 1_000_000)
    assert abs(mean - exact) < 3 * se + 1e-12


def test_haar_integral_quotient_single_factor():
    f = FactorizableTestFn((BUMP, ONE))
    assert haar_integral_quotient(f) == pytest.approx(BUMP.haar_integral() / covolume(), rel=1e-12)


def test_sampler_invariants_and_reproducibility(monkeypatch):
    s = QuotientSampler(3, 2)
    pts = sample_quotient(s, 40_000)
    z = coset_point_batch(pts.reshape(-1, 2, 2))
    assert np.all(np.abs(z.real) <= 0.5 + 1e-12)
    assert np.all(np.abs(z) >= 1 - 1e-12)
    monkeypatch.setenv("HOROLAB_WORKERS", "3")
    again = sample_quotient(QuotientSampler(3, 2), 40_000)
    assert np.array_equal(pts, again)
    tail = s.sample(1000, start=20_000)
    assert np.array_equal(tail, pts[20_000:21_000])
    mean, se = quotient_mean(constant_testfn(2), s, 1000)
    assert mean == 1.0 and se == 0.0


def test_sobolev_estimate():
    gen = np.random.default_rng(4)
    f = FactorizableTestFn((BUMP,))
    pts = np.stack([GElem((BUMP.center @ make_u(0.1 * gen.standard_normal()),)).to_array()
                    for _ in range(20)])
    one = constant_testfn(1)
    for j in (0, 1, 2):
        assert sobolev_estimate(one, j, pts) == pytest.approx(1.0, abs=1e-6)
    s0 = sobolev_estimate(f, 0, pts)
    assert 0 < s0 <= f.sup_bound()
    s1 = sobolev_estimate(f, 1, pts)
    assert sobolev_estimate(f.scaled(3.0), 1, pts) == pytest.approx(3 * s1, rel=1e-12)
    assert s1 > s0
    with pytest.raises(UnsupportedError):
        sobolev_estimate(f, 3, pts)
