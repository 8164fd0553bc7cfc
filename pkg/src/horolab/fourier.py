"""Fourier transforms of submanifold measures.

``mu^(xi) = int e(-xi . phi(t)) rho(t) dt`` with ``e(s) = exp(2 pi i s)``.
The parameter integral is evaluated with the midpoint (periodic trapezoid)
rule on the support box of ``rho``.  The integrand is smooth and vanishes to
all orders at the box faces, so the rule converges spectrally once the grid
resolves the oscillation; the node count per axis is
``n0 + width_i * |xi| * sup ||d phi / d t_i||``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import special
from scipy.interpolate import CubicSpline

from horolab.errors import DomainError, ResourceError
from horolab.fitting import loglog_fit
from horolab.homspace import bump_profile
from horolab.policy import POLICY
from horolab.rng import substream
from horolab.submanifold import LocalizedMeasure, box_integral

TWO_PI = 2 * math.pi
BASE_NODES = 192
_CHUNK_BYTES = 1 << 26


# --------------------------------------------------------------------------
# transforms of measures

@dataclass(frozen=True)
class FourierValue:
    value: complex
    stderr: float
    nodes: int


def _box(mu):
    box = mu.support_box()
    return None if box is None else tuple((float(a), float(b)) for a, b in box)


def column_bounds(mu) -> np.ndarray:
    """``sup_t ||d phi / d t_i||`` over the support box, per parameter axis (padded 10%)."""
    box = _box(mu)
    axes = [np.linspace(lo, hi, 17) for lo, hi in box]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, mu.m)
    J = mu.map.jacobian(pts)
    return 1.1 * np.max(np.linalg.norm(J, axis=-2), axis=0)


def resolution(mu, radius: float, n0: int = BASE_NODES) -> tuple:
    """Nodes per parameter axis for frequencies of norm ``<= radius``."""
    box = _box(mu)
    g = column_bounds(mu)
    return tuple(int(n0 + math.ceil((hi - lo) * radius * gi)) for (lo, hi), gi in zip(box, g))


def _axes(box, counts):
    axes, steps = [], []
    for (lo, hi), n in zip(box, counts):
        h = (hi - lo) / n
        axes.append(lo + (np.arange(n) + 0.5) * h)
        steps.append(h)
    return axes, steps


def _weight_tensor(mu, axes, steps) -> np.ndarray:
    """``rho(t) * prod h_i`` on the tensor grid, evaluated in row blocks."""
    scale = float(np.prod(steps))
    if len(axes) == 1:
        return mu.density(axes[0][:, None]) * scale
    rest = np.stack(np.meshgrid(*axes[1:], indexing="ij"), -1).reshape(-1, len(axes) - 1)
    out = np.empty((axes[0].size, rest.shape[0]))
    rows = max(1, (1 << 21) // rest.shape[0])
    for lo in range(0, axes[0].size, rows):
        a = axes[0][lo:lo + rows]
        pts = np.concatenate([np.repeat(a, rest.shape[0])[:, None],
                              np.tile(rest, (a.size, 1))], axis=1)
        out[lo:lo + a.size] = mu.density(pts).reshape(a.size, -1) * scale
    return out.reshape([a.size for a in axes])


def _separable_tables(gmap):
    """Constant and per-axis coefficient matrices of a separable ``w``.

    Returns ``(const (n,), [C_i (n, deg+1)])`` with
    ``w_r(t) = const_r + sum_i sum_p C_i[r, p] t_i^p``.
    """
    deg = max(max(p.degree for p in gmap.w), 1)
    const = np.zeros(gmap.n)
    tables = [np.zeros((gmap.n, deg + 1)) for _ in range(gmap.m)]
    for r, p in enumerate(gmap.w):
        c, parts = p.univariate_parts()
        const[r] = c
        for i, part in enumerate(parts):
            for k, v in part.items():
                tables[i][r, k] = v
    return const, tables


def _cexp_matmul(E: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Complex-times-real product as two real products."""
    re = np.ascontiguousarray(E.real) @ P
    im = np.ascontiguousarray(E.imag) @ P
    return re + 1j * im


class FourierEvaluator:
    """Transform of one measure at many frequencies, on a fixed node grid."""

    def __init__(self, mu, counts: tuple):
        self.mu = mu
        self.box = _box(mu)
        self.counts = tuple(int(c) for c in counts)
        total = int(np.prod(self.counts))
        if total > POLICY.fourier_budget:
            raise ResourceError(f"quadrature needs {total} nodes per frequency, "
                                f"budget is {POLICY.fourier_budget}")
        self.axes, self.steps = _axes(self.box, self.counts)
        self.separable = mu.map.is_separable() and mu.m <= 2

    @cached_property
    def weights(self) -> np.ndarray:
        return _weight_tensor(self.mu, self.axes, self.steps)

    @cached_property
    def _flat(self):
        pts = np.stack(np.meshgrid(*self.axes, indexing="ij"), -1).reshape(-1, self.mu.m)
        return self.mu.map.eval_graph(pts), self.weights.ravel()

    def _axis_phase(self, xis, i, tables):
        s = self.axes[i]
        powers = s[:, None] ** np.arange(tables[i].shape[1])
        return np.outer(xis[:, i], s) + (xis[:, self.mu.m:] @ tables[i]) @ powers.T

    def __call__(self, xis) -> np.ndarray:
        xis = np.atleast_2d(np.asarray(xis, dtype=float))
        if xis.shape[-1] != self.mu.d:
            raise DomainError(f"frequencies must lie in R^{self.mu.d}")
        out = np.empty(xis.shape[0], dtype=complex)
        if self.separable:
            const, tables = _separable_tables(self.mu.map)
            step = max(1, _CHUNK_BYTES // (16 * max(self.counts)))
            for lo in range(0, xis.shape[0], step):
                X = xis[lo:lo + step]
                E1 = np.exp(-1j * TWO_PI * self._axis_phase(X, 0, tables))
                if self.mu.m == 1:
                    val = _cexp_matmul(E1, self.weights)
                else:
                    E2 = np.exp(-1j * TWO_PI * self._axis_phase(X, 1, tables))
                    val = np.sum(_cexp_matmul(E1, self.weights) * E2, axis=1)
                out[lo:lo + step] = val * np.exp(-1j * TWO_PI * (X[:, self.mu.m:] @ const))
            return out
        phis, w = self._flat
        step = max(1, _CHUNK_BYTES // (16 * phis.shape[0]))
        for lo in range(0, xis.shape[0], step):
            X = xis[lo:lo + step]
            out[lo:lo + step] = np.exp(-1j * TWO_PI * (X @ phis.T)) @ w
        return out


def measure_fourier_batch(mu, xis, n0: int = BASE_NODES) -> np.ndarray:
    """Transform at many frequencies sharing one grid sized for the largest."""
    xis = np.atleast_2d(np.asarray(xis, dtype=float))
    if _box(mu) is None:
        return np.zeros(xis.shape[0], dtype=complex)
    radius = float(np.max(np.linalg.norm(xis, axis=-1), initial=0.0))
    return FourierEvaluator(mu, resolution(mu, radius, n0))(xis)


def measure_fourier(mu, xi, n0: int = BASE_NODES) -> FourierValue:
    """``mu^(xi)`` with an error estimate from a 1.5x finer grid.

    The finer value is returned; ``stderr`` is its difference from the base
    grid, a conservative bound for the finer value's quadrature error.
    """
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (mu.d,):
        raise DomainError(f"frequency must lie in R^{mu.d}")
    if _box(mu) is None:
        return FourierValue(0j, 0.0, 0)
    counts = resolution(mu, float(np.linalg.norm(xi)), n0)
    coarse = FourierEvaluator(mu, counts)(xi[None])[0]
    fine_counts = tuple(int(math.ceil(1.5 * c)) for c in counts)
    fine = FourierEvaluator(mu, fine_counts)(xi[None])[0]
    return FourierValue(complex(fine), float(abs(fine - coarse)), int(np.prod(fine_counts)))


# --------------------------------------------------------------------------
# decay fits

@dataclass(frozen=True)
class DecayFit:
    K: tuple
    values: tuple
    stderr: tuple
    slope: float
    residual: float
    slope_stderr: float
    used: tuple


def _check_grid(Ks, min_points: int = 5) -> np.ndarray:
    Ks = np.asarray(Ks, dtype=float)
    if Ks.size < min_points:
        raise DomainError(f"a decay fit needs at least {min_points} K values")
    if np.any(np.diff(Ks) <= 0):
        raise DomainError("K grid must be strictly increasing")
    e = np.log2(Ks)
    if np.any(np.abs(e - np.round(e)) > 1e-9):
        raise DomainError("K grid must be dyadic (powers of two)")
    return Ks


def _decay_fit(Ks, vals, errs, floor: float) -> DecayFit:
    vals = np.asarray(vals, dtype=float)
    used = vals > floor
    fit = loglog_fit(Ks[used], vals[used])
    return DecayFit(tuple(Ks.tolist()), tuple(vals.tolist()), tuple(np.asarray(errs).tolist()),
                    fit.slope, fit.residual, fit.slope_stderr, tuple(used.tolist()))


def _ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / special.gamma(d / 2 + 1)


def shell_samples(d: int, count: int, seed: int, index: int) -> np.ndarray:
    """Uniform points of the shell ``1 <= |xi| <= 2`` in R^d."""
    gen = substream(seed, "shell", index)
    v = gen.standard_normal((count, d))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    r = (1 + gen.random(count) * (2 ** d - 1)) ** (1 / d)
    return v * r[:, None]


def shell_norm(mu, K: float, samples: int = 2048, seed: int = 0, index: int = 0,
               n0: int = BASE_NODES):
    """Monte Carlo ``|| 1_[1,2](|xi|) mu^(K xi) ||_2`` and its standard error."""
    d = mu.d
    vol = _ball_volume(d) * (2 ** d - 1)
    xis = shell_samples(d, samples, seed, index)
    sq = np.abs(measure_fourier_batch(mu, K * xis, n0)) ** 2
    mean = float(np.mean(sq))
    se_sq = vol * float(np.std(sq, ddof=1)) / math.sqrt(samples)
    norm = math.sqrt(vol * mean)
    return norm, (se_sq / (2 * norm) if norm > 0 else 0.0)


def l2_shell_decay(mu, Ks, samples: int = 2048, seed: int = 0, check_scale: bool = True,
                   n0: int = BASE_NODES) -> DecayFit:
    """Shell ``L^2`` norms of ``xi -> mu^(K xi)`` and their log-log slope in ``K``."""
    Ks = _check_grid(Ks)
    beta = getattr(mu, "beta", 1.0)
    if check_scale and np.min(Ks) * beta < 4:
        raise DomainError("l2_shell_decay needs K * beta >= 4")
    norms, errs = [], []
    for j, K in enumerate(Ks):
        nv, se = shell_norm(mu, K, samples, seed, int(round(math.log2(K))) + 64, n0)
        norms.append(nv)
        errs.append(se)
    return _decay_fit(Ks, norms, errs, 0.0)


def shell_norm_quadrature(mu, K: float, n_r: int = 24, n_polar: int = 128,
                          n_azimuth: int = 256, axis=None, cap: float = math.pi / 2,
                          n0: int = BASE_NODES) -> float:
    """Deterministic product-rule value of the shell norm (an oracle for ``shell_norm``).

    Gauss-Legendre in the radius, and for ``d = 3`` in the polar angle about
    ``axis`` restricted to ``theta <= cap`` (both hemispheres, using
    ``|mu^(-xi)| = |mu^(xi)|``); periodic trapezoid in the remaining angle.
    The cap is only safe when ``|mu^|`` is negligible outside it.
    """
    d = mu.d
    xr, wr = np.polynomial.legendre.leggauss(n_r)
    r = 1.5 + 0.5 * xr
    wr = 0.5 * wr
    if d == 2:
        th = (np.arange(n_azimuth) + 0.5) * math.pi / n_azimuth
        dirs = np.stack([np.cos(th), np.sin(th)], -1)
        wd = np.full(n_azimuth, 2 * math.pi / n_azimuth)
    elif d == 3:
        xp, wp = np.polynomial.legendre.leggauss(n_polar)
        th = 0.5 * cap * (xp + 1)
        wp = 0.5 * cap * wp * np.sin(th)
        ph = np.arange(n_azimuth) * TWO_PI / n_azimuth
        T, P = np.meshgrid(th, ph, indexing="ij")
        local = np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], -1).reshape(-1, 3)
        axis = np.array([0.0, 0.0, 1.0]) if axis is None else np.asarray(axis, float)
        axis = axis / np.linalg.norm(axis)
        # orthonormal frame with third vector = axis
        helper = np.eye(3)[np.argmin(np.abs(axis))]
        e1 = np.cross(axis, helper)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(axis, e1)
        dirs = local @ np.stack([e1, e2, axis])
        wd = 2 * np.repeat(wp, n_azimuth) * (TWO_PI / n_azimuth)
    else:
        raise DomainError("shell quadrature oracle supports d = 2, 3")
    xis = (r[:, None, None] * dirs[None]).reshape(-1, d)
    W = (wr[:, None] * r[:, None] ** (d - 1) * wd[None]).ravel()
    sq = np.abs(measure_fourier_batch(mu, K * xis, n0)) ** 2
    return math.sqrt(float(np.dot(sq, W)))


def _center_parameter(mu) -> np.ndarray:
    if isinstance(mu, LocalizedMeasure):
        return np.asarray(mu.x0[: mu.m])
    return np.asarray(mu.center)


def normal_angle(mu, direction) -> float:
    """Angle between ``direction`` and the normal space of S at the measure's centre."""
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    t0 = _center_parameter(mu)
    Dw = mu.map.dw(t0)                                   # (n, m)
    N = np.concatenate([-Dw.T, np.eye(mu.map.n)], 0)     # columns span the normal space
    Q, _ = np.linalg.qr(N)
    proj = np.linalg.norm(Q.T @ direction)
    return float(math.acos(min(1.0, proj)))


def stationary_scaling(mu, direction, Ks, require_normal: bool = True,
                       floor: float = 1e-13, n0: int = BASE_NODES) -> DecayFit:
    """``|mu^(K direction)|`` against ``K`` and its log-log slope.

    Values below ``floor * mass`` (rounding level) are kept in the table but
    left out of the fit.
    """
    Ks = _check_grid(Ks)
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    if require_normal and normal_angle(mu, direction) > 0.2:
        raise DomainError("direction is not within 0.2 rad of a normal direction")
    vals, errs = [], []
    for K in Ks:
        fv = measure_fourier(mu, K * direction, n0)
        vals.append(abs(fv.value))
        errs.append(fv.stderr)
    return _decay_fit(Ks, vals, errs, floor * max(mu.mass(), 1e-300))


# --------------------------------------------------------------------------
# frequency splitting

def _smooth_h(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1 / s[pos])
    return out


def eta(r) -> np.ndarray:
    """Radial cutoff: 1 on ``|r| <= 1``, 0 on ``|r| >= 2``, ``C^infinity``.

    ``eta(r) = h(2 - |r|) / (h(2 - |r|) + h(|r| - 1))`` with ``h(s) = exp(-1/s)``
    for ``s > 0`` and 0 otherwise.
    """
    r = np.abs(np.asarray(r, dtype=float))
    a, b = _smooth_h(2 - r), _smooth_h(r - 1)
    return a / (a + b)


@dataclass(frozen=True)
class FrequencySplit:
    rho: float
    T: float

    def __post_init__(self):
        if not 0 < self.rho < 1:
            raise DomainError("rho must lie in (0, 1)")
        if not self.T > 1:
            raise DomainError("T must exceed 1")

    def low(self, r):
        return eta(np.asarray(r) / (self.rho * self.T))

    def mid(self, r):
        return eta(np.asarray(r) / (self.T / self.rho)) - self.low(r)

    def high(self, r):
        return 1 - eta(np.asarray(r) / (self.T / self.rho))

    def parts(self, r):
        return self.low(r), self.mid(r), self.high(r)

    @property
    def cutoff(self) -> float:
        return 4 * self.T / self.rho


@dataclass(frozen=True)
class GaussianWave:
    """``f(x) = exp(-pi |x - a|^2 / sigma^2) e(k . x)``."""

    center: tuple
    sigma: float
    k: tuple

    @property
    def d(self):
        return len(self.center)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        a, k = np.asarray(self.center), np.asarray(self.k)
        return np.exp(-math.pi * np.sum((x - a) ** 2, -1) / self.sigma ** 2) * np.exp(
            1j * TWO_PI * (x @ k))

    def ft(self, xi):
        xi = np.asarray(xi, dtype=float)
        a, k = np.asarray(self.center), np.asarray(self.k)
        q = xi - k
        return self.sigma ** self.d * np.exp(-math.pi * self.sigma ** 2 * np.sum(q * q, -1)) * \
            np.exp(-1j * TWO_PI * (q @ a))

    def extent(self):
        """Box outside which ``|f|`` is below ``exp(-25 pi)``."""
        return tuple((c - 5 * self.sigma, c + 5 * self.sigma) for c in self.center)

    def tail(self, R: float) -> float:
        """``int_{|xi| > R} |f^(xi)| d xi`` (exact, via the incomplete gamma function)."""
        R0 = R - float(np.linalg.norm(self.k))
        if R0 <= 0:
            return math.inf
        return float(special.gammaincc(self.d / 2, math.pi * self.sigma ** 2 * R0 ** 2))


class BumpWave:
    """``f(x) = profile(|x - a| / R) e(k . x)`` with the standard bump profile.

    The transform ``f^(xi) = R^d psi^(R |xi - k|) e(-(xi - k) . a)`` uses the
    radial (Hankel) transform ``psi^`` of the unit profile, tabulated once by
    Gauss-Legendre quadrature and interpolated with a cubic spline.
    """

    def __init__(self, center, radius: float, k, rho_max: float = 200.0, table: int = 20001):
        self.center = tuple(float(v) for v in center)
        self.radius = float(radius)
        self.k = tuple(float(v) for v in k)
        self.d = len(self.center)
        if self.d not in (1, 2, 3):
            raise DomainError("bump waves are implemented for d <= 3")
        self.rho_max = rho_max
        grid = np.linspace(0, rho_max, table)
        self._grid = grid
        self._vals = self._radial_ft(grid)
        self._spline = CubicSpline(grid, self._vals)

    def _radial_ft(self, rho):
        x, w = np.polynomial.legendre.leggauss(2000)
        s = 0.5 * (x + 1)
        w = 0.5 * w
        prof = bump_profile(s)
        arg = TWO_PI * np.outer(rho, s)
        if self.d == 1:
            kern = 2 * np.cos(arg)
        elif self.d == 2:
            kern = TWO_PI * special.j0(arg) * s
        else:
            kern = 4 * math.pi * np.sinc(2 * np.outer(rho, s)) * s ** 2
        return kern @ (w * prof)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        a, k = np.asarray(self.center), np.asarray(self.k)
        r = np.linalg.norm(x - a, axis=-1) / self.radius
        return bump_profile(r) * np.exp(1j * TWO_PI * (x @ k))

    def radial(self, rho):
        rho = np.asarray(rho, dtype=float)
        out = self._spline(np.minimum(rho, self.rho_max))
        return np.where(rho > self.rho_max, 0.0, out)

    def ft(self, xi):
        xi = np.asarray(xi, dtype=float)
        a, k = np.asarray(self.center), np.asarray(self.k)
        q = xi - k
        return self.radius ** self.d * self.radial(self.radius * np.linalg.norm(q, axis=-1)) * \
            np.exp(-1j * TWO_PI * (q @ a))

    def extent(self):
        return tuple((c - self.radius, c + self.radius) for c in self.center)

    def tail(self, R: float) -> float:
        """Numerical ``int_{|xi| > R} |f^(xi)| d xi`` from the tabulated radial transform."""
        R0 = (R - float(np.linalg.norm(self.k))) * self.radius
        if R0 <= 0:
            return math.inf
        if R0 >= self.rho_max:
            return 0.0
        r = np.linspace(R0, self.rho_max, 20001)
        area = 2 * math.pi ** (self.d / 2) / special.gamma(self.d / 2)
        vals = np.abs(self.radial(r)) * r ** (self.d - 1) * area
        return float(np.trapezoid(vals, r))


@dataclass(frozen=True)
class SplitResult:
    low: complex
    mid: complex
    high: complex
    direct: complex
    truncation: float
    frequencies: int

    @property
    def total(self) -> complex:
        return self.low + self.mid + self.high


def _image_box(mu):
    box = _box(mu)
    axes = [np.linspace(lo, hi, 65) for lo, hi in box]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, mu.m)
    x = mu.map.eval_graph(pts)[mu.density(pts) > 0]
    return x.min(0), x.max(0)


def direct_pairing(mu, f) -> complex:
    """``int f(phi(t)) rho(t) dt`` by Gauss-Legendre quadrature on the support box."""
    box = _box(mu)
    if box is None:
        return 0j
    re = box_integral(lambda t: np.real(f(mu.map.eval_graph(t))) * mu.density(t), box)
    im = box_integral(lambda t: np.imag(f(mu.map.eval_graph(t))) * mu.density(t), box)
    return complex(re, im)


def split_eval(mu, f, split: FrequencySplit, tol: float = 1e-3, n0: int = BASE_NODES) -> SplitResult:
    """``mu^*(f) = int f^(xi) conj(mu^(xi)) eta_*(|xi|) d xi`` for ``* = l, m, h``.

    The frequency integral runs over the cube ``|xi_j| <= 4 T / rho`` (which
    contains the ball of that radius) with the periodic trapezoid rule.  Its
    spacing is chosen so that the period exceeds the spread of
    ``supp f - supp mu``, which makes the rule exact up to the truncation
    tail ``mass * int_{|xi| > 4T/rho} |f^|``; that tail is reported and must
    stay below ``tol * |mu(f)|``.
    """
    d = mu.d
    if f.d != d:
        raise DomainError("test function and measure live in different dimensions")
    direct = direct_pairing(mu, f)
    Xi = split.cutoff
    mass = mu.mass()
    tail = mass * f.tail(Xi)
    if tail > tol * max(abs(direct), 1e-12):
        raise ResourceError(f"frequency truncation residual {tail:.3g} exceeds tolerance")
    lo_mu, hi_mu = _image_box(mu)
    ext = f.extent()
    spread = np.array([max(abs(e[1] - lo), abs(hi - e[0]))
                       for e, lo, hi in zip(ext, lo_mu, hi_mu)])
    period = 1.1 * spread + 2.0 / (split.rho * split.T)
    counts = np.ceil(2 * Xi * period).astype(int)
    steps = 2 * Xi / counts
    axes = [-Xi + (np.arange(c) + 0.5) * h for c, h in zip(counts, steps)]
    total = int(np.prod(counts))
    if mu.m == 1 and d == 2:
        muhat = _grid_transform_curve(mu, axes[0], axes[1], n0)
    else:
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, d)
        muhat = measure_fourier_batch(mu, grid, n0).reshape(counts)
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), -1)
    r = np.linalg.norm(grid, axis=-1)
    integrand = f.ft(grid) * np.conj(muhat) * float(np.prod(steps))
    el, em, eh = split.parts(r)
    return SplitResult(complex(np.sum(integrand * el)), complex(np.sum(integrand * em)),
                       complex(np.sum(integrand * eh)), direct, float(tail), total)


def _grid_transform_curve(mu, ax1, ax2, n0):
    """``mu^`` on a tensor frequency grid for a curve in the plane (one gemm)."""
    radius = float(np.hypot(np.max(np.abs(ax1)), np.max(np.abs(ax2))))
    counts = resolution(mu, radius, n0)
    ev = FourierEvaluator(mu, counts)
    t = ev.axes[0]
    w = ev.weights
    wt = mu.map.eval_w(t[:, None])[:, 0]
    A = np.exp(-1j * TWO_PI * np.outer(ax1, t)) * w[None]
    B = np.exp(-1j * TWO_PI * np.outer(wt, ax2))
    return A @ B
