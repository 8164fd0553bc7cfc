import math

import numpy as np
import pytest
from scipy import integrate

from horolab.equidist import (Schedule, TranslateExperiment, discrepancy_curve,
                              horocycle_integral, mixing_probe, psi_bump, rate_fit,
                              translate_integral)
from horolab.errors import DomainError, FitError, ResourceError
from horolab.homspace import (ONE, AutoBumpFactor, FactorizableTestFn, GElem, constant_testfn,
                              eval_testfn, haar_integral_quotient, identity)
from horolab.sl2 import Mat2, make_a, make_u
from horolab.submanifold import PolyGraphMap, SurfaceMeasure, box_integral

PARABOLA = PolyGraphMap.from_terms(1, [[((2,), 1.0)]])
BUMP_A = AutoBumpFactor.at(0.1, 1.3, 0.5, radius=0.6)
BUMP_B = AutoBumpFactor.at(-0.2, 1.0, 2.0, radius=0.6)
X0 = GElem((Mat2.from_array([[1.0, 0.0], [0.0, 1.0]]), Mat2(1.0, 0.3, 0.0, 1.0)))


def experiment(f=None, ys=(0.5, 0.25), **kw):
    mu = SurfaceMeasure(PARABOLA, halfwidth=0.45, center=(0.5,))
    return TranslateExperiment(mu, X0, f or FactorizableTestFn((BUMP_A, BUMP_B)), ys, **kw)


def test_schedule():
    s = Schedule(n0=64, n_max=10_000)
    assert s.count(0.25, 1) == 256
    assert s.count(0.3, 1) == 64 * 4
    assert s.count(0.01, 2) == 10_000
    assert s.scaled(0.5).n0 == 32


def test_experiment_validation():
    with pytest.raises(DomainError):
        experiment(ys=())
    with pytest.raises(DomainError):
        experiment(ys=(0.25, 0.5))
    with pytest.raises(DomainError):
        experiment(ys=(1.5,))
    with pytest.raises(DomainError):
        experiment(f=FactorizableTestFn((BUMP_A,)))


def test_translate_integral_of_constant_is_mass():
    exp = experiment(f=constant_testfn(2))
    v = translate_integral(exp, 0.25)
    assert v.value == pytest.approx(1.0, abs=1e-10)
    assert v.stderr < 1e-10


def test_translate_integral_matches_scalar_quadrature():
    exp = experiment(schedule=Schedule(n0=512))
    y = 0.5
    mu = exp.measure
    a = make_a(y)

    def integrand(t):
        out = []
        for s in t[:, 0]:
            x = mu.map.eval_graph(np.array([s]))
            g = GElem(tuple(a @ make_u(xi) @ f for xi, f in zip(x, X0.factors)))
            out.append(eval_testfn(exp.testfn, g))
        return np.array(out) * mu.density(t)

    want = box_integral(integrand, mu.support_box(), tol=1e-9, start=256, cap=4096)
    got = translate_integral(exp, y)
    assert abs(got.value - want) < 4 * got.stderr + 1e-9


def test_translate_integral_is_worker_independent(monkeypatch):
    exp = experiment()
    monkeypatch.setenv("HOROLAB_WORKERS", "1")
    a = translate_integral(exp, 0.125)
    monkeypatch.setenv("HOROLAB_WORKERS", "3")
    b = translate_integral(exp, 0.125)
    assert a.replicates == b.replicates


def test_rate_fit_recovers_exponent():
    ys = 2.0 ** -np.arange(2, 10)
    s = 1 / ys
    vals = 3.0 * s ** -0.5
    gen = np.random.default_rng(0)
    se = 0.01 * vals
    noisy = vals * (1 + 0.01 * gen.standard_normal(vals.size))
    fit = rate_fit(ys, s, noisy, se)
    assert fit.exponent == pytest.approx(0.5, abs=0.02)
    assert fit.ci[0] < 0.5 < fit.ci[1]
    assert fit.excludes_zero
    # points with large relative error are dropped
    se2 = se.copy()
    se2[-1] = vals[-1]
    assert rate_fit(ys, s, noisy, se2).used[-1] is False
    with pytest.raises(FitError):
        rate_fit(ys[:3], s[:3], noisy[:3], se[:3])


def test_rate_fit_flat_curve_contains_zero():
    ys = 2.0 ** -np.arange(2, 10)
    gen = np.random.default_rng(1)
    vals = 0.05 * (1 + 0.02 * gen.standard_normal(ys.size))
    fit = rate_fit(ys, 1 / ys, vals, np.full(ys.size, 0.001))
    assert abs(fit.exponent) < 0.02
    assert not fit.excludes_zero


def test_discrepancy_curve_reports_fit_error():
    curve = discrepancy_curve(experiment(), boot=50)
    assert curve.target == pytest.approx(haar_integral_quotient(experiment().testfn))
    assert curve.fit is None and "usable points" in curve.fit_error
    assert len(curve.values) == 2


def test_horocycle_integral_constant_and_centering():
    f = FactorizableTestFn((ONE,))
    for c in (0.0, 1.0):
        want_re = integrate.quad(lambda t: float(psi_bump(t)) * math.cos(2 * math.pi * c * t),
                                 -1, 1, epsabs=1e-13)[0]
        v = horocycle_integral(f, identity(1).factors[0], 0.5, c)
        assert abs(v.value - want_re) < 1e-9
        assert v.stderr < 1e-9
    g = FactorizableTestFn((BUMP_A,))
    raw = horocycle_integral(g, Mat2(1.0, 0.0, 0.0, 1.0), 0.25, 1.0)
    cen = horocycle_integral(g, Mat2(1.0, 0.0, 0.0, 1.0), 0.25, 1.0, centered=True)
    base = horocycle_integral(f, Mat2(1.0, 0.0, 0.0, 1.0), 0.25, 1.0)
    assert abs(raw.value - cen.value - haar_integral_quotient(g) * base.value) < 1e-9
    with pytest.raises(ResourceError):
        horocycle_integral(g, Mat2(1.0, 0.0, 0.0, 1.0), 1e-6, 1.0, cap=1000)
    with pytest.raises(DomainError):
        horocycle_integral(FactorizableTestFn((BUMP_A, BUMP_B)), Mat2(1, 0, 0, 1), 0.5, 1.0)


def test_mixing_probe():
    vals, _ = mixing_probe(BUMP_A, BUMP_A, [1.0], samples=50_000)
    # at y = 1 the covariance is the variance of f, which is positive
    assert vals[0].value.real > 3 * vals[0].stderr
    const, _ = mixing_probe(BUMP_A, ONE, [1.0, 0.5], samples=20_000)
    assert all(abs(v.value) < 1e-12 for v in const)
    again, _ = mixing_probe(BUMP_A, BUMP_A, [1.0], samples=50_000)
    assert again[0].value == vals[0].value
