"""The product group G = SL2(R)^d, its lattice SL2(Z)^d and test functions on G/Gamma.

Batches of group elements are arrays of shape ``(N, d, 2, 2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

from horolab import rng as _rng
from horolab.errors import DomainError, UnsupportedError
from horolab.sl2 import (
    Mat2,
    a_batch,
    frob2_batch,
    haar_integrate_sl2,
    iwasawa_decompose,
    iwasawa_matrix,
    lattice_enumerate,
    lattice_enumerate_array,
    make_a,
    make_u,
    reduce,
    reduce_batch,
    u_batch,
)


@dataclass(frozen=True)
class GElem:
    """A point of G (or of G/Gamma through a representative)."""

    factors: tuple

    def __post_init__(self):
        if len(self.factors) < 1:
            raise DomainError("GElem needs at least one factor")
        object.__setattr__(self, "factors", tuple(self.factors))

    @property
    def d(self) -> int:
        return len(self.factors)

    def to_array(self) -> np.ndarray:
        return np.stack([f.to_array() for f in self.factors])

    @classmethod
    def from_array(cls, arr) -> "GElem":
        return cls(tuple(Mat2.from_array(m) for m in np.asarray(arr)))

    def __matmul__(self, other: "GElem") -> "GElem":
        if self.d != other.d:
            raise DomainError(f"dimension mismatch {self.d} vs {other.d}")
        return GElem(tuple(x @ y for x, y in zip(self.factors, other.factors)))


def identity(d: int) -> GElem:
    return GElem(tuple(Mat2(1, 0, 0, 1) for _ in range(d)))


def a_y(y: float, d: int) -> GElem:
    return GElem(tuple(make_a(y) for _ in range(d)))


def u_t(t) -> GElem:
    return GElem(tuple(make_u(float(tj)) for tj in np.atleast_1d(t)))


def translate(g: GElem, by: GElem) -> GElem:
    """Componentwise left multiplication ``by_j g_j``."""
    if g.d != by.d:
        raise DomainError(f"dimension mismatch {g.d} vs {by.d}")
    return by @ g


def horosphere_translates(y: float, t: np.ndarray, x0) -> np.ndarray:
    """``a_y u_t x0`` for a batch of parameters ``t`` of shape (N, d).

    Uses ``a(y) u(t) = u(t / y) a(y)`` so no large intermediate entries appear.
    """
    t = np.atleast_2d(np.asarray(t, dtype=float))
    x0 = x0.to_array() if isinstance(x0, GElem) else np.asarray(x0, dtype=float)
    left = u_batch(t / y) @ a_batch(np.full(t.shape, y))
    return left @ x0[None]


# --------------------------------------------------------------------------
# test functions

def bump_profile(s, sharpness: float = 1.0):
    """``exp(sharpness (1 - 1 / (1 - s^2)))`` on ``|s| < 1``, zero outside; equals 1 at 0."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1
    out[inside] = np.exp(sharpness * (1.0 - 1.0 / (1.0 - s[inside] ** 2)))
    return out


@dataclass(frozen=True)
class AutoBumpFactor:
    """Bump ``F(h) = amplitude * profile(||h - center|| / radius)`` on SL2(R),
    automorphized over SL2(Z)."""

    center: Mat2
    radius: float = 0.4
    amplitude: float = 1.0
    sharpness: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError("bump radius must be positive")
        if self.amplitude < 0:
            raise DomainError("bump amplitude must be non-negative")

    @classmethod
    def at(cls, x: float, y: float, theta: float = 0.0, **kw) -> "AutoBumpFactor":
        """Bump centred at ``n(x) a(y) k(theta)``."""
        return cls(Mat2.from_array(iwasawa_matrix(x, y, theta)), **kw)

    @property
    def reach(self) -> float:
        """Norm bound ``||center|| + radius`` of the support."""
        return self.center.frob() + self.radius

    def raw(self, h: np.ndarray) -> np.ndarray:
        """The compactly supported bump on SL2(R) (not automorphized)."""
        diff = np.asarray(h) - self.center.to_array()
        dist = np.sqrt(frob2_batch(diff))
        return self.amplitude * bump_profile(dist / self.radius, self.sharpness)

    def candidates(self) -> np.ndarray:
        # reduced rep r with ||r|| <= reach and ||r gamma|| <= reach force
        # ||gamma|| <= ||r^-1|| ||r gamma|| <= reach^2
        return _candidates(self.reach)

    def automorphized_reduced(self, rep: np.ndarray) -> np.ndarray:
        """``sum_gamma F(rep gamma)`` for reduced representatives (N, 2, 2)."""
        rep = np.asarray(rep, dtype=float)
        out = np.zeros(rep.shape[0])
        active = np.nonzero(frob2_batch(rep) <= self.reach ** 2)[0]
        if active.size == 0:
            return out
        gam = self.candidates().astype(float)
        prods = rep[active][:, None] @ gam[None]
        out[active] = self.raw(prods).sum(axis=1)
        return out

    def automorphized(self, g: np.ndarray) -> np.ndarray:
        rep, _, _ = reduce_batch(g)
        return self.automorphized_reduced(rep)

    def automorphized_scalar(self, g: Mat2) -> float:
        """Reference path: reduce, then sum over ``lattice_enumerate(rep, reach)``."""
        rep = reduce(g).rep
        gams = lattice_enumerate(rep, self.reach)
        if not gams:
            return 0.0
        mats = np.stack([(rep @ gm).to_array() for gm in gams])
        return float(self.raw(mats).sum())

    def support_box(self):
        """A box in Iwasawa coordinates containing the support of the raw bump."""
        return _support_box(self)

    def haar_integral(self) -> float:
        """``int_{SL2(R)} F dh`` with ``dh = dx dy dtheta / y^2``."""
        return _bump_integral(self)


@lru_cache(maxsize=32)
def _candidates(reach: float) -> np.ndarray:
    return lattice_enumerate_array(np.eye(2), reach * reach)


class ConstantOne:
    """The constant function 1 on SL2(R)/SL2(Z)."""

    amplitude = 1.0

    def automorphized(self, g):
        return np.ones(np.asarray(g).shape[0])

    def automorphized_reduced(self, rep):
        return np.ones(np.asarray(rep).shape[0])

    def automorphized_scalar(self, g):
        return 1.0

    def haar_integral(self):
        return None

    def __eq__(self, other):
        return isinstance(other, ConstantOne)

    def __hash__(self):
        return hash("ConstantOne")

    def __repr__(self):
        return "ConstantOne()"


ONE = ConstantOne()


@dataclass(frozen=True)
class FactorizableTestFn:
    """``f(g Gamma) = prod_j f_j(g_j Gamma)`` with automorphized bump factors."""

    factors: tuple
    scale: float = 1.0
    _integrals: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))

    @property
    def d(self) -> int:
        return len(self.factors)

    def scaled(self, c: float) -> "FactorizableTestFn":
        return FactorizableTestFn(self.factors, self.scale * c)

    def factor_integral(self, j: int):
        if j not in self._integrals:
            self._integrals[j] = self.factors[j].haar_integral()
        return self._integrals[j]

    def sup_bound(self) -> float:
        return self.scale * math.prod(f.amplitude for f in self.factors)


def constant_testfn(d: int) -> FactorizableTestFn:
    return FactorizableTestFn(tuple(ONE for _ in range(d)))


def eval_testfn(f: FactorizableTestFn, p) -> np.ndarray | float:
    """Evaluate ``f`` at one point (GElem) or a batch (N, d, 2, 2)."""
    if isinstance(p, GElem):
        if p.d != f.d:
            raise DomainError("dimension mismatch")
        return f.scale * math.prod(fac.automorphized_scalar(g)
                                   for fac, g in zip(f.factors, p.factors))
    p = np.asarray(p, dtype=float)
    if p.ndim != 4 or p.shape[1] != f.d:
        raise DomainError(f"expected a batch (N, {f.d}, 2, 2), got {p.shape}")
    out = np.full(p.shape[0], f.scale)
    for j, fac in enumerate(f.factors):
        if isinstance(fac, ConstantOne):
            continue
        nz = np.nonzero(out)[0]
        if nz.size == 0:
            break
        out[nz] *= fac.automorphized(p[nz, j])
    return out


# --------------------------------------------------------------------------
# Haar measure on the quotient

@lru_cache(maxsize=1)
def fundamental_domain_area() -> float:
    """Hyperbolic area of ``{|x| <= 1/2, x^2 + y^2 >= 1}`` by adaptive quadrature."""
    val, _ = integrate.dblquad(lambda y, x: y ** -2, -0.5, 0.5,
                               lambda x: math.sqrt(1 - x * x), lambda x: math.inf,
                               epsabs=1e-13, epsrel=1e-13)
    return val


@lru_cache(maxsize=1)
def covolume() -> float:
    """Haar volume of SL2(R)/SL2(Z) for ``dx dy dtheta / y^2``, theta in [0, 2 pi).

    The preimage of the fundamental domain in SL2(R) has volume
    ``2 pi * area``; it holds every coset twice (``g`` and ``-g``) because
    ``-I`` lies in SL2(Z), hence the division by 2.
    """
    return 2 * math.pi * fundamental_domain_area() / 2


def haar_integral_quotient(f: FactorizableTestFn) -> float:
    """Exact Haar expectation of ``f`` on G/Gamma via unfolding."""
    val = f.scale
    v0 = covolume()
    for j, fac in enumerate(f.factors):
        if isinstance(fac, ConstantOne):
            continue
        val *= f.factor_integral(j) / v0
    return val


def _support_box(fac: AutoBumpFactor):
    R2 = fac.reach ** 2
    # ||n(x) a(y) k||^2 = (x^2 + y^2 + 1) / y <= R2
    disc = math.sqrt(max(R2 * R2 - 4, 0.0))
    ylo, yhi = (R2 - disc) / 2, (R2 + disc) / 2
    xmax = math.sqrt(max(R2 * yhi, 0.0))
    c = iwasawa_decompose(fac.center)
    box = ((-xmax, xmax), (ylo, yhi), (c.theta - math.pi, c.theta + math.pi))
    n = 64
    axes = [np.linspace(lo, hi, n) for lo, hi in box]
    X, Y, TH = np.meshgrid(*axes, indexing="ij")
    vals = fac.raw(iwasawa_matrix(X, Y, TH).reshape(-1, 2, 2)).reshape(X.shape)
    hit = np.nonzero(vals > 0)
    tight = []
    for ax, idx in zip(axes, hit):
        step = ax[1] - ax[0]
        tight.append((ax[max(idx.min() - 1, 0)] - step, ax[min(idx.max() + 1, n - 1)] + step))
    (x0, x1), (y0, y1), (t0, t1) = tight
    return ((x0, x1), (max(y0, ylo * 0.5), y1), (t0, t1))


@lru_cache(maxsize=64)
def _bump_integral(fac: AutoBumpFactor) -> float:
    box = fac.support_box()
    return haar_integrate_sl2(fac.raw, box, resolution=48, tol=1e-8 * fac.amplitude)


# --------------------------------------------------------------------------
# sampling the quotient

@dataclass(frozen=True)
class QuotientSampler:
    """Haar-distributed points of (SL2(R)/SL2(Z))^d from a counter-based stream.

    Per factor the modular point is drawn exactly (no rejection): the
    ``x``-marginal of ``y^-2 dx dy`` on the fundamental domain is
    ``1/sqrt(1 - x^2)``, so ``x = sin(u)`` with ``u`` uniform on
    ``[-pi/6, pi/6]``; then ``y = sqrt(1 - x^2) / v`` with ``v`` uniform on
    ``(0, 1]``, and ``theta`` is uniform.  The returned matrix ``g`` satisfies
    ``coset_point(g) = x + i y``.
    """

    seed: int
    d: int = 1
    stream: str = "quotient"

    def _chunk(self, k: int) -> np.ndarray:
        gen = _rng.substream(self.seed, self.stream, k)
        u = gen.random((_rng.CHUNK, self.d, 3))
        x = np.sin((u[..., 0] - 0.5) * (math.pi / 3))
        y = np.sqrt(1 - x * x) / (1.0 - u[..., 1])
        theta = 2 * math.pi * u[..., 2]
        h = iwasawa_matrix(x, y, theta)
        # g = flip(h): swap the diagonal entries
        g = h.copy()
        g[..., 0, 0], g[..., 1, 1] = h[..., 1, 1], h[..., 0, 0]
        return g

    def sample(self, count: int, start: int = 0) -> np.ndarray:
        parts = _rng.ordered_map(lambda kb: self._chunk(kb[0])[kb[1]:kb[2]],
                                 list(_rng.chunk_bounds(start, count)))
        if not parts:
            return np.zeros((0, self.d, 2, 2))
        return np.concatenate(parts)

    def chunks(self, count: int, start: int = 0):
        for k, lo, hi in _rng.chunk_bounds(start, count):
            yield self._chunk(k)[lo:hi]


def sample_quotient(s: QuotientSampler, count: int) -> np.ndarray:
    return s.sample(count)


def quotient_mean(f: FactorizableTestFn, sampler: QuotientSampler, count: int):
    """Monte Carlo mean and standard error of ``f`` under quotient Haar measure."""

    def part(kb):
        k, lo, hi = kb
        v = eval_testfn(f, sampler._chunk(k)[lo:hi])
        return v.sum(), (v * v).sum()

    res = _rng.ordered_map(part, list(_rng.chunk_bounds(0, count)))
    s1 = _rng.pairwise_sum(r[0] for r in res)
    s2 = _rng.pairwise_sum(r[1] for r in res)
    mean = s1 / count
    var = max(s2 / count - mean * mean, 0.0)
    return mean, math.sqrt(var / count)


# --------------------------------------------------------------------------
# Sobolev norms

_GENERATORS = ("a", "u", "ut")


def _flow(kind: str, s: float) -> np.ndarray:
    if kind == "a":
        e = math.exp(s / 2)
        return np.array([[e, 0.0], [0.0, 1.0 / e]])
    if kind == "u":
        return np.array([[1.0, 0.0], [s, 1.0]])
    return np.array([[1.0, s], [0.0, 1.0]])


def _moved(points: np.ndarray, j: int, kind: str, s: float) -> np.ndarray:
    out = points.copy()
    out[:, j] = _flow(kind, s) @ points[:, j]
    return out


def sobolev_estimate(f: FactorizableTestFn, j: int, points: np.ndarray,
                     h1: float = 1e-4, h2: float = 2e-3) -> float:
    """Sampled lower bound for the L-infinity Sobolev norm of order ``j``.

    Sums, over all monomials of degree ``<= j`` in the basis of one-parameter
    flows ``a(e^s)``, ``u(s)``, ``u(s)^T`` of every factor, the maximum over
    ``points`` of the corresponding central finite-difference derivative of
    ``f`` under left translation.
    """
    if j not in (0, 1, 2):
        raise UnsupportedError("Sobolev estimates are only available for j <= 2")
    points = np.asarray(points, dtype=float)
    basis = [(k, kind) for k in range(f.d) for kind in _GENERATORS]
    ev = lambda p: eval_testfn(f, p)
    total = float(np.max(np.abs(ev(points))))
    if j >= 1:
        for k, kind in basis:
            d1 = (ev(_moved(points, k, kind, h1)) - ev(_moved(points, k, kind, -h1))) / (2 * h1)
            total += float(np.max(np.abs(d1)))
    if j >= 2:
        for k1, kind1 in basis:
            for k2, kind2 in basis:
                # X1 X2 f(g) = d/ds d/dt f(exp(t X2) exp(s X1) g)
                acc = 0.0
                for s1 in (1, -1):
                    for s2 in (1, -1):
                        p = _moved(_moved(points, k1, kind1, s1 * h2), k2, kind2, s2 * h2)
                        acc = acc + s1 * s2 * ev(p)
                total += float(np.max(np.abs(acc / (4 * h2 * h2))))
    return total
