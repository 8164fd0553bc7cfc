"""Polynomial graph submanifolds of R^d and smooth measures on them.

A submanifold is ``S = phi((-1, 1)^m)`` with ``phi(t) = (t, w(t))`` and
``w: R^m -> R^n`` polynomial.  Measures are described by a density in the
parameter ``t``; the volume element ``sqrt(det(J'J))`` is part of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate, special
from scipy.stats import qmc

from horolab import rng as _rng
from horolab.errors import DomainError, UnsupportedError
from horolab.homspace import bump_profile
from horolab.poly import Polynomial


@dataclass(frozen=True)
class PolyGraphMap:
    m: int
    n: int
    w: tuple

    def __post_init__(self):
        object.__setattr__(self, "w", tuple(self.w))
        if self.m < 1 or self.n < 1:
            raise DomainError("need m >= 1 and n >= 1")
        if len(self.w) != self.n:
            raise DomainError(f"expected {self.n} graph functions, got {len(self.w)}")
        for p in self.w:
            if p.nvars != self.m:
                raise DomainError("graph function has the wrong number of variables")

    @classmethod
    def from_terms(cls, m: int, rows) -> "PolyGraphMap":
        """``rows[r]`` lists ``(exponent, coefficient)`` pairs of ``w_r``."""
        return cls(m, len(rows), tuple(Polynomial.from_terms(m, r) for r in rows))

    @property
    def d(self) -> int:
        return self.m + self.n

    @cached_property
    def first(self):
        return [[p.diff(i) for i in range(self.m)] for p in self.w]

    @cached_property
    def second(self):
        return [[[q.diff(j) for j in range(self.m)] for q in row] for row in self.first]

    def _check(self, t):
        t = np.asarray(t, dtype=float)
        if t.shape[-1] != self.m:
            raise DomainError(f"parameter must have {self.m} coordinates")
        return t

    def is_separable(self) -> bool:
        return all(p.is_separable() for p in self.w)

    def eval_graph(self, t) -> np.ndarray:
        t = self._check(t)
        return np.concatenate([t, np.stack([p(t) for p in self.w], -1)], -1)

    def eval_w(self, t) -> np.ndarray:
        t = self._check(t)
        return np.stack([p(t) for p in self.w], -1)

    def dw(self, t) -> np.ndarray:
        """``Dw(t)`` of shape (..., n, m)."""
        t = self._check(t)
        return np.stack([np.stack([q(t) for q in row], -1) for row in self.first], -2)

    def jacobian(self, t) -> np.ndarray:
        t = self._check(t)
        top = np.broadcast_to(np.eye(self.m), t.shape[:-1] + (self.m, self.m))
        return np.concatenate([top, self.dw(t)], -2)

    def hessians(self, t) -> np.ndarray:
        """All Hessians of ``w_r``, shape (..., n, m, m)."""
        t = self._check(t)
        return np.stack([np.stack([np.stack([q(t) for q in row], -1) for row in block], -2)
                         for block in self.second], -3)

    def hessian_z(self, z, t) -> np.ndarray:
        """Hessian of ``z . w`` at ``t``; linear in ``z``."""
        z = np.asarray(z, dtype=float)
        if z.shape[-1] != self.n:
            raise DomainError(f"normal coefficient vector must have {self.n} entries")
        return np.einsum("...r,...rij->...ij", z, self.hessians(t))

    def gram_volume(self, t) -> np.ndarray:
        J = self.dw(t)
        G = np.einsum("...ri,...rj->...ij", J, J)
        if self.m == 1:
            return np.sqrt(1 + G[..., 0, 0])
        if self.m == 2:
            a, b, c = 1 + G[..., 0, 0], G[..., 0, 1], 1 + G[..., 1, 1]
            return np.sqrt(a * c - b * b)
        return np.sqrt(np.linalg.det(G + np.eye(self.m)))

    def gradient_bound(self, box) -> float:
        """Upper estimate of ``||D phi||`` on a box (sampled on a grid, padded 10%)."""
        axes = [np.linspace(lo, hi, 17) for lo, hi in box]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, self.m)
        J = self.jacobian(pts)
        return 1.1 * float(np.max(np.linalg.norm(J, ord=2, axis=(-2, -1))))


# --------------------------------------------------------------------------
# measures

def _gauss_box(box, n):
    nodes, weights = np.polynomial.legendre.leggauss(n)
    axes, ws = [], []
    for lo, hi in box:
        axes.append(0.5 * (hi - lo) * nodes + 0.5 * (hi + lo))
        ws.append(0.5 * (hi - lo) * weights)
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, len(box))
    W = ws[0]
    for w in ws[1:]:
        W = np.multiply.outer(W, w)
    return pts, W.ravel()


def box_integral(fn, box, tol=1e-12, start=64, cap=None):
    """Tensor Gauss-Legendre integral of a smooth function on a box, doubled to ``tol``."""
    m = len(box)
    cap = cap or {1: 1 << 15, 2: 1024, 3: 128}.get(m, 32)
    n = min(start, cap)
    pts, W = _gauss_box(box, n)
    val = np.dot(fn(pts), W)
    while 2 * n <= cap:
        n *= 2
        pts, W = _gauss_box(box, n)
        new = np.dot(fn(pts), W)
        if abs(new - val) <= tol * max(1.0, abs(new)):
            return new
        val = new
    return val


@dataclass(frozen=True)
class SurfaceMeasure:
    """Probability measure on S with density (in t)
    ``prod_i profile((t_i - c_i) / h) * weight(t) * sqrt(det J'J) / Z``."""

    map: PolyGraphMap
    halfwidth: float = 1.0
    center: tuple = None
    weight: Polynomial = None
    sharpness: float = 1.0

    def __post_init__(self):
        c = (0.0,) * self.map.m if self.center is None else tuple(float(v) for v in self.center)
        object.__setattr__(self, "center", c)
        if len(c) != self.map.m:
            raise DomainError("density centre has the wrong dimension")
        if not 0 < self.halfwidth:
            raise DomainError("halfwidth must be positive")
        for ci in c:
            if ci - self.halfwidth < -1 - 1e-12 or ci + self.halfwidth > 1 + 1e-12:
                raise DomainError("density support must lie in (-1, 1)^m")

    @property
    def m(self) -> int:
        return self.map.m

    @property
    def d(self) -> int:
        return self.map.d

    def support_box(self):
        return tuple((c - self.halfwidth, c + self.halfwidth) for c in self.center)

    def raw_density(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        s = (t - np.asarray(self.center)) / self.halfwidth
        out = np.prod(bump_profile(s, self.sharpness), axis=-1)
        if self.weight is not None:
            out = out * self.weight(t)
        return out * self.map.gram_volume(t)

    @cached_property
    def normalization(self) -> float:
        z = box_integral(self.raw_density, self.support_box())
        if not z > 0:
            raise DomainError("density has zero or negative mass")
        return float(z)

    def density(self, t) -> np.ndarray:
        return self.raw_density(t) / self.normalization

    def mass(self) -> float:
        return 1.0


@dataclass(frozen=True)
class RadialWindow:
    """``psi(x) = profile(|x|) / C_d`` on the unit ball of R^d, ``int psi = 1``."""

    dim: int
    sharpness: float = 1.0

    @cached_property
    def constant(self) -> float:
        sphere = 2 * math.pi ** (self.dim / 2) / special.gamma(self.dim / 2)
        radial, _ = integrate.quad(
            lambda r: float(bump_profile(r, self.sharpness)) * r ** (self.dim - 1), 0, 1,
            epsabs=1e-14, epsrel=1e-13)
        return sphere * radial

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return bump_profile(np.linalg.norm(x, axis=-1), self.sharpness) / self.constant


@dataclass(frozen=True)
class LocalizedMeasure:
    """``lambda_{S, x0, beta}(f) = int f(x) beta^-m psi((x - x0) / beta) d lambda_S(x)``."""

    base: SurfaceMeasure
    x0: tuple
    beta: float
    window: RadialWindow = None

    def __post_init__(self):
        object.__setattr__(self, "x0", tuple(float(v) for v in self.x0))
        if len(self.x0) != self.base.d:
            raise DomainError("localization centre must lie in R^d")
        # the closed endpoint 1/2 is accepted: the mass bound is unaffected
        if not 0 < self.beta <= 0.5:
            raise DomainError(f"beta must lie in (0, 1/2], got {self.beta}")
        if self.window is None:
            object.__setattr__(self, "window", RadialWindow(self.base.d))

    @property
    def map(self) -> PolyGraphMap:
        return self.base.map

    @property
    def m(self) -> int:
        return self.base.m

    @property
    def d(self) -> int:
        return self.base.d

    def support_box(self):
        """Parameter box containing the support, or None for the zero measure."""
        out = []
        for (lo, hi), c in zip(self.base.support_box(), self.x0[: self.m]):
            a, b = max(lo, c - self.beta), min(hi, c + self.beta)
            if a >= b:
                return None
            out.append((a, b))
        return tuple(out)

    def density(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        x = self.map.eval_graph(t)
        loc = self.window((x - np.asarray(self.x0)) / self.beta) / self.beta ** self.m
        return self.base.density(t) * loc

    @cached_property
    def _mass(self) -> float:
        box = self.support_box()
        if box is None:
            return 0.0
        return float(box_integral(self.density, box))

    def mass(self) -> float:
        return self._mass


def localize(mu: SurfaceMeasure, x0, beta: float) -> LocalizedMeasure:
    return LocalizedMeasure(mu, tuple(x0), beta)


# --------------------------------------------------------------------------
# randomized quasi-Monte Carlo integration

@dataclass(frozen=True)
class Estimate:
    value: complex
    stderr: float
    n: int
    replicates: tuple = field(default=(), repr=False)


def _fib_pair(n):
    a, b = 1, 1
    while b < n:
        a, b = b, a + b
    return b, a


def unit_points(method: str, count: int, m: int, seed: int, replicate: int,
                stream: str = "qmc") -> np.ndarray:
    """``count`` randomized points in ``[0, 1)^m`` for one replicate.

    ``lattice`` is a randomly shifted rank-1 lattice (a shifted uniform grid
    for ``m = 1``, a Fibonacci lattice for ``m = 2``; the Fibonacci rule
    rounds ``count`` up to a Fibonacci number).  ``halton`` is a scrambled
    Halton sequence, ``mc`` plain Monte Carlo.
    """
    gen = _rng.substream(seed, f"{stream}:{method}", replicate)
    if method == "halton":
        return qmc.Halton(d=m, scramble=True, seed=gen).random(count)
    if method == "mc":
        return gen.random((count, m))
    if method == "lattice":
        shift = gen.random(m)
        if m == 1:
            return ((np.arange(count)[:, None] + shift) / count) % 1.0
        if m == 2:
            N, g2 = _fib_pair(count)
            k = np.arange(N)[:, None]
            return (k * np.array([1, g2]) / N + shift) % 1.0
        raise UnsupportedError("lattice rules are implemented for m <= 2")
    raise DomainError(f"unknown point set {method!r}")


def integrate_against(mu, f, n_points: int = 1 << 20, replicates: int = 8, seed: int = 0,
                      method: str = "halton", chunk: int = 1 << 16) -> Estimate:
    """Randomized QMC estimate of ``int f d mu`` with a replication standard error.

    ``f`` maps points of R^d (array (N, d)) to real or complex values.  Each
    replicate returns ``mass * sum(f * rho) / sum(rho)`` over its points,
    which reproduces the exact mass for ``f = 1``.
    """
    box = mu.support_box()
    if box is None:
        return Estimate(0.0, 0.0, 0)
    mass = mu.mass()
    lo = np.array([b[0] for b in box])
    width = np.array([b[1] - b[0] for b in box])
    per = max(1, n_points // replicates)
    reps = []
    for r in range(replicates):
        u = unit_points(method, per, mu.m, seed, r)
        t = lo + width * u

        def part(sl):
            tt = t[sl]
            rho = mu.density(tt)
            vals = f(mu.map.eval_graph(tt))
            return np.sum(vals * rho), np.sum(rho)

        res = _rng.ordered_map(part, [slice(i, i + chunk) for i in range(0, t.shape[0], chunk)])
        num = _rng.pairwise_sum(x[0] for x in res)
        den = _rng.pairwise_sum(x[1] for x in res)
        reps.append(mass * num / den if den != 0 else 0.0)
    reps = np.array(reps)
    value = reps.mean()
    stderr = float(np.std(reps, ddof=1) / math.sqrt(replicates)) if replicates > 1 else math.inf
    return Estimate(value, stderr, per * replicates, tuple(reps.tolist()))
