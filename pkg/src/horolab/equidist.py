"""Equidistribution of translated submanifolds and the rate experiments.

The headline quantity is the discrepancy

    D(y) = | int f(a_y u_phi(t) x0) d lambda_S(t) - int_{G/Gamma} f d mu_G |

for automorphized factorizable bumps ``f``, together with its decay rate in
``y``.  The translate integral uses randomly shifted lattice rules in the
parameter ``t`` (independent shifts give the replicate standard error); the
target is computed by unfolding, not sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from horolab import rng as _rng
from horolab.errors import DomainError, FitError, ResourceError
from horolab.fitting import weighted_line
from horolab.homspace import (FactorizableTestFn, GElem, QuotientSampler,
                              bump_profile, eval_testfn, haar_integral_quotient,
                              horosphere_translates)
from horolab.sl2 import Mat2, a_batch, make_a, u_batch
from horolab.submanifold import SurfaceMeasure, unit_points

# log-space misfit floor added to the replicate variance in rate fits
LOG_FLOOR = 0.05


# --------------------------------------------------------------------------
# sampling schedule and experiments

@dataclass(frozen=True)
class Schedule:
    """``N(y) = min(n_max, n0 * ceil(1 / y) ** min(m, 2))`` points per replicate."""

    n0: int = 64
    n_max: int = 1 << 20
    replicates: int = 8
    method: str = "lattice"

    def count(self, y: float, m: int) -> int:
        return int(min(self.n_max, self.n0 * math.ceil(1 / y) ** min(m, 2)))

    def scaled(self, factor: float) -> "Schedule":
        return Schedule(max(1, int(round(self.n0 * factor))),
                        max(1, int(round(self.n_max * factor))), self.replicates, self.method)


@dataclass(frozen=True)
class TranslateExperiment:
    measure: SurfaceMeasure
    x0: GElem
    testfn: FactorizableTestFn
    ys: tuple
    seed: int = 0
    schedule: Schedule = field(default_factory=Schedule)

    def __post_init__(self):
        object.__setattr__(self, "ys", tuple(float(y) for y in self.ys))
        if not self.ys:
            raise DomainError("y grid must be nonempty")
        if any(not 0 < y < 1 for y in self.ys):
            raise DomainError("y grid must lie in (0, 1)")
        if any(b >= a for a, b in zip(self.ys, self.ys[1:])):
            raise DomainError("y grid must be strictly decreasing")
        d = self.measure.d
        if self.x0.d != d or self.testfn.d != d:
            raise DomainError(f"measure lives in R^{d} but x0 / f have d = "
                              f"{self.x0.d} / {self.testfn.d}")


@dataclass(frozen=True)
class TranslateValue:
    value: float
    stderr: float
    samples: int
    replicates: tuple = field(repr=False, default=())


def _translate_sum(exp, y: float, t: np.ndarray) -> float:
    """``sum rho(t) f(a_y u_phi(t) x0)`` over a block of parameters."""
    mu = exp.measure
    rho = mu.density(t)
    keep = rho > 0
    if not np.any(keep):
        return 0.0
    phi = mu.map.eval_graph(t[keep])
    g = horosphere_translates(y, phi, exp.x0.to_array())
    return float(np.sum(rho[keep] * eval_testfn(exp.testfn, g)))


def translate_integral(exp: TranslateExperiment, y: float, count: int | None = None,
                       replicates: int | None = None) -> TranslateValue:
    """Replicated lattice-rule value of ``int f(a_y u_phi(t) x0) d lambda_S(t)``."""
    if not 0 < y <= 1:
        raise DomainError("y must lie in (0, 1]")
    mu = exp.measure
    sched = exp.schedule
    n = count or sched.count(y, mu.m)
    reps = replicates or sched.replicates
    box = mu.support_box()
    lo = np.array([b[0] for b in box])
    width = np.array([b[1] - b[0] for b in box])
    vol = float(np.prod(width))
    values = []
    for r in range(reps):
        u = unit_points(sched.method, n, mu.m, exp.seed, r, stream="translate")
        t = lo + width * u
        parts = _rng.ordered_map(lambda b: _translate_sum(exp, y, t[b[0]:b[1]]),
                                 _rng.blocks(t.shape[0]))
        values.append(vol * _rng.pairwise_sum(parts) / t.shape[0])
    values = np.array(values)
    se = float(np.std(values, ddof=1) / math.sqrt(reps)) if reps > 1 else math.nan
    return TranslateValue(float(np.mean(values)), se, int(n * reps), tuple(values.tolist()))


# --------------------------------------------------------------------------
# rate fits

@dataclass(frozen=True)
class RateFit:
    """``value ~ C * scale^(-exponent)``; ``ci`` is a bootstrap 95% interval."""

    ys: tuple
    scales: tuple
    values: tuple
    stderr: tuple
    exponent: float
    ci: tuple
    used: tuple
    intercept: float

    @property
    def excludes_zero(self) -> bool:
        return self.ci[0] > 0 or self.ci[1] < 0


def _fit_exponent(scales, values, stderr):
    values = np.asarray(values, dtype=float)
    rel = np.asarray(stderr, dtype=float) / values
    w = 1 / (rel ** 2 + LOG_FLOOR ** 2)
    line = weighted_line(np.log(scales), np.log(values), w)
    return -line.slope, line.intercept


def rate_fit(ys, scales, values, stderr, replicates=None, seed: int = 0,
             boot: int = 2000, min_points: int = 4) -> RateFit:
    """Weighted log-log fit with a bootstrap interval.

    Only points with ``stderr < 0.25 |value|`` are used.  Each bootstrap draw
    resamples the used points with replacement and perturbs every value,
    either by resampling its replicates (when ``replicates`` is given as a
    list of arrays of signed deviations) or by a normal draw with its stderr.
    """
    ys = np.asarray(ys, dtype=float)
    scales = np.asarray(scales, dtype=float)
    values = np.abs(np.asarray(values, dtype=float))
    stderr = np.nan_to_num(np.asarray(stderr, dtype=float), nan=0.0)
    used = (values > 0) & (stderr < 0.25 * values)
    idx = np.nonzero(used)[0]
    if idx.size < min_points:
        raise FitError(f"only {idx.size} usable points (need {min_points})")
    c, b = _fit_exponent(scales[idx], values[idx], stderr[idx])
    gen = _rng.substream(seed, "bootstrap")
    draws = []
    for _ in range(boot):
        pick = gen.choice(idx, size=idx.size, replace=True)
        if np.unique(scales[pick]).size < 2:
            continue
        if replicates is not None:
            vals = []
            for j in pick:
                rep = np.asarray(replicates[j], dtype=float)
                vals.append(abs(np.mean(gen.choice(rep, size=rep.size, replace=True))))
            vals = np.array(vals)
        else:
            vals = np.abs(values[pick] + stderr[pick] * gen.standard_normal(pick.size))
        if np.any(vals <= 0):
            continue
        draws.append(_fit_exponent(scales[pick], vals, stderr[pick])[0])
    draws = np.array(draws)
    ci = (float(np.quantile(draws, 0.025)), float(np.quantile(draws, 0.975)))
    return RateFit(tuple(ys.tolist()), tuple(scales.tolist()), tuple(values.tolist()),
                   tuple(stderr.tolist()), float(c), ci, tuple(used.tolist()), float(b))


@dataclass(frozen=True)
class DiscrepancyCurve:
    target: float
    values: tuple
    fit: RateFit | None
    fit_error: str | None = None


def discrepancy_curve(exp: TranslateExperiment, target: float | None = None,
                      boot: int = 2000) -> DiscrepancyCurve:
    """``D(y)`` over the experiment's grid and its fitted decay exponent in ``1/y``."""
    target = haar_integral_quotient(exp.testfn) if target is None else target
    vals = [translate_integral(exp, y) for y in exp.ys]
    D = np.array([v.value - target for v in vals])
    se = np.array([v.stderr for v in vals])
    reps = [np.asarray(v.replicates) - target for v in vals]
    ys = np.array(exp.ys)
    try:
        fit = rate_fit(ys, 1 / ys, D, se, reps, exp.seed, boot)
        err = None
    except FitError as e:
        fit, err = None, str(e)
    return DiscrepancyCurve(float(target), tuple(vals), fit, err)


# --------------------------------------------------------------------------
# probes on a single factor

def _single_factor(f):
    if isinstance(f, FactorizableTestFn):
        if f.d != 1:
            raise DomainError("probe test functions have one factor")
        return f
    return FactorizableTestFn((f,))


def _mat(x0) -> np.ndarray:
    if isinstance(x0, Mat2):
        return x0.to_array()
    arr = np.asarray(x0, dtype=float)
    return arr.reshape(2, 2)


@dataclass(frozen=True)
class ProbeValue:
    y: float
    value: complex
    stderr: float
    samples: int


def psi_bump(t) -> np.ndarray:
    """The probe window ``psi``: the standard bump profile on ``[-1, 1]``."""
    return bump_profile(np.asarray(t, dtype=float))


def horocycle_integral(f0, x0, y: float, c: float, centered: bool = False,
                       per_unit: int = 32, base: int = 256, cap: int = 1 << 23) -> ProbeValue:
    """``int f0(a(y) u(t) x0) psi(t) e(c t) dt`` by the midpoint rule on ``[-1, 1]``.

    The node count is ``base + per_unit * 2 * (1/y + |c|)``; ``centered``
    subtracts the quotient mean of ``f0``.  The error estimate is the change
    against a rule with 2/3 of the nodes.
    """
    f = _single_factor(f0)
    g0 = _mat(x0)
    mean = haar_integral_quotient(f) if centered else 0.0
    n = int(base + per_unit * math.ceil(2 * (1 / y + abs(c))))
    if n > cap:
        raise ResourceError(f"horocycle quadrature needs {n} nodes, cap is {cap}")

    def rule(count):
        h = 2.0 / count
        parts = []
        for lo, hi in _rng.blocks(count):
            t = -1 + (np.arange(lo, hi) + 0.5) * h
            g = u_batch(t / y) @ a_batch(np.full(t.shape, y)) @ g0
            vals = eval_testfn(f, g[:, None]) - mean
            parts.append(np.sum(vals * psi_bump(t) * np.exp(2j * math.pi * c * t)))
        return h * complex(_rng.pairwise_sum(parts))

    fine = rule(n)
    coarse = rule(int(math.ceil(2 * n / 3)))
    return ProbeValue(y, fine, float(abs(fine - coarse)), n)


def horocycle_character_probe(f0, x0, c: float, ys, centered: bool = False,
                              seed: int = 0, **kw):
    """Values over a y grid and the fitted decay of ``|value|`` in ``1/y``."""
    ys = np.asarray(ys, dtype=float)
    vals = [horocycle_integral(f0, x0, y, c, centered, **kw) for y in ys]
    mags = np.array([abs(v.value) for v in vals])
    se = np.array([v.stderr for v in vals])
    try:
        fit = rate_fit(ys, 1 / ys, mags, se, seed=seed)
    except FitError:
        fit = None
    return vals, fit


def mixing_probe(f1, f2, ys, samples: int = 1_000_000, seed: int = 0):
    """Sample covariance of ``f1(a(y) g)`` and ``f2(g)`` under quotient Haar measure.

    The same Haar samples are used for every ``y``; the fit is against
    ``||a(y)||`` (Frobenius), so the exponent is the decay rate in the
    matrix-coefficient form ``<a . f1, f2> << ||a||^-r``.
    """
    f1, f2 = _single_factor(f1), _single_factor(f2)
    ys = np.asarray(ys, dtype=float)
    sampler = QuotientSampler(seed, 1, "mixing")
    bounds = list(_rng.chunk_bounds(0, samples))

    def second(kb):
        k, lo, hi = kb
        g = sampler._chunk(k)[lo:hi]
        return eval_testfn(f2, g)

    f2v = np.concatenate(_rng.ordered_map(second, bounds))
    m2 = _chunked_mean(f2v)
    out = []
    for y in ys:
        a = make_a(y).to_array()

        def first(kb):
            k, lo, hi = kb
            g = sampler._chunk(k)[lo:hi]
            return eval_testfn(f1, a[None, None] @ g)

        f1v = np.concatenate(_rng.ordered_map(first, bounds))
        m1 = _chunked_mean(f1v)
        prod = (f1v - m1) * (f2v - m2)
        cov = _chunked_mean(prod)
        se = float(np.std(prod) / math.sqrt(samples))
        out.append(ProbeValue(float(y), complex(cov), se, samples))
    mags = np.array([abs(v.value) for v in out])
    se = np.array([v.stderr for v in out])
    scales = np.sqrt(ys + 1 / ys)
    try:
        fit = rate_fit(ys, scales, mags, se, seed=seed)
    except FitError:
        fit = None
    return out, fit


def _chunked_mean(v: np.ndarray) -> float:
    parts = [float(np.sum(v[lo:lo + _rng.CHUNK])) for lo in range(0, v.size, _rng.CHUNK)]
    return _rng.pairwise_sum(parts) / v.size
