"""SL2(R) arithmetic, the modular quotient SL2(R)/SL2(Z), and Haar quadrature.

Conventions
-----------
* Mobius action: ``g . z = (a z + b) / (c z + d)``.
* ``make_a(y) = diag(sqrt(y), 1/sqrt(y))``, ``make_u(t) = [[1, 0], [t, 1]]``
  (lower unipotent), ``make_n(x) = [[1, x], [0, 1]]``,
  ``make_k(theta) = [[cos, -sin], [sin, cos]]``.
* The lattice acts on the right: a point of the quotient is a coset ``g Gamma``.
  Its position on the modular surface is ``coset_point(g) = flip(g) . i`` where
  ``flip([[a, b], [c, d]]) = [[d, b], [c, a]]``.  Because ``flip`` is an
  anti-automorphism fixing ``T`` and ``S``, ``coset_point(g T^k) = z + k`` and
  ``coset_point(g S) = -1/z``; the classical reduction algorithm therefore
  runs unchanged on ``z`` while ``gamma`` is accumulated on the right.
* ``||g||`` is the Frobenius norm and ``||g||^2 = (|z|^2 + 1) / Im z`` with
  ``z = coset_point(g)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from horolab.errors import ConvergenceError, DomainError, ResourceError
from horolab.policy import POLICY


@dataclass(frozen=True)
class Mat2:
    """A unit-determinant 2x2 real matrix ``[[a, b], [c, d]]``."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        vals = (self.a, self.b, self.c, self.d)
        if not all(math.isfinite(v) for v in vals):
            raise DomainError(f"non-finite matrix entries {vals}")
        det = self.a * self.d - self.b * self.c
        scale = max(1.0, abs(self.a * self.d), abs(self.b * self.c))
        if abs(det - 1) > POLICY.structural * scale:
            raise DomainError(f"determinant {det!r} is not 1")

    @classmethod
    def from_array(cls, arr) -> "Mat2":
        arr = np.asarray(arr)
        return cls(*(x.item() if hasattr(x, "item") else x for x in arr.reshape(4)))

    def to_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=float)

    def __matmul__(self, other: "Mat2") -> "Mat2":
        return Mat2(self.a * other.a + self.b * other.c,
                    self.a * other.b + self.b * other.d,
                    self.c * other.a + self.d * other.c,
                    self.c * other.b + self.d * other.d)

    def __neg__(self) -> "Mat2":
        return Mat2(-self.a, -self.b, -self.c, -self.d)

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def inverse(self) -> "Mat2":
        return Mat2(self.d, -self.b, -self.c, self.a)

    def frob2(self) -> float:
        return self.a ** 2 + self.b ** 2 + self.c ** 2 + self.d ** 2

    def frob(self) -> float:
        return math.sqrt(self.frob2())

    def is_integral(self) -> bool:
        return all(float(v).is_integer() for v in (self.a, self.b, self.c, self.d))

    def allclose(self, other: "Mat2", tol: float = POLICY.structural) -> bool:
        return max(abs(self.a - other.a), abs(self.b - other.b),
                   abs(self.c - other.c), abs(self.d - other.d)) <= tol

    def __iter__(self):
        return iter((self.a, self.b, self.c, self.d))


IDENTITY = Mat2(1, 0, 0, 1)
T = Mat2(1, 1, 0, 1)
S = Mat2(0, -1, 1, 0)


def make_a(y: float) -> Mat2:
    if not y > 0 or not math.isfinite(y):
        raise DomainError(f"make_a needs y > 0, got {y!r}")
    r = math.sqrt(y)
    return Mat2(r, 0.0, 0.0, 1.0 / r)


def make_u(t: float) -> Mat2:
    return Mat2(1.0, 0.0, t, 1.0)


def make_n(x: float) -> Mat2:
    return Mat2(1.0, x, 0.0, 1.0)


def make_k(theta: float) -> Mat2:
    c, s = math.cos(theta), math.sin(theta)
    return Mat2(c, -s, s, c)


def t_power(k: int) -> Mat2:
    return Mat2(1, int(k), 0, 1)


def flip(g: Mat2) -> Mat2:
    return Mat2(g.d, g.b, g.c, g.a)


def moebius(g: Mat2, z: complex) -> complex:
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"non-finite point {z!r}")
    if not z.imag > 0:
        raise DomainError(f"point {z!r} is not in the upper half-plane")
    return (g.a * z + g.b) / (g.c * z + g.d)


def coset_point(g: Mat2) -> complex:
    """Position of the coset ``g Gamma`` on the modular surface (before reduction)."""
    return complex(g.b, g.d) / complex(g.a, g.c)


# --------------------------------------------------------------------------
# batch helpers on arrays of shape (..., 2, 2)

def as_batch(g) -> np.ndarray:
    if isinstance(g, Mat2):
        return g.to_array()
    return np.asarray(g, dtype=float)


def frob2_batch(g: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...ij->...", g, g)


def coset_point_batch(g: np.ndarray) -> np.ndarray:
    return (g[..., 0, 1] + 1j * g[..., 1, 1]) / (g[..., 0, 0] + 1j * g[..., 1, 0])


def a_batch(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    out = np.zeros(y.shape + (2, 2))
    r = np.sqrt(y)
    out[..., 0, 0] = r
    out[..., 1, 1] = 1.0 / r
    return out


def u_batch(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape + (2, 2))
    out[..., 0, 0] = 1.0
    out[..., 1, 1] = 1.0
    out[..., 1, 0] = t
    return out


# --------------------------------------------------------------------------
# Iwasawa coordinates

@dataclass(frozen=True)
class IwasawaCoords:
    x: float
    y: float
    theta: float


def iwasawa_matrix(x, y, theta) -> np.ndarray:
    """Vectorised ``n(x) a(y) k(theta)`` as an array (..., 2, 2)."""
    x, y, theta = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, theta)))
    r = np.sqrt(y)
    c, s = np.cos(theta), np.sin(theta)
    out = np.empty(x.shape + (2, 2))
    # n(x) a(y) = [[r, x / r], [0, 1 / r]]
    out[..., 0, 0] = r * c + x / r * s
    out[..., 0, 1] = -r * s + x / r * c
    out[..., 1, 0] = s / r
    out[..., 1, 1] = c / r
    return out


def iwasawa_decompose(g: Mat2) -> IwasawaCoords:
    z = moebius(g, 1j)
    x, y = z.real, z.imag
    k = make_a(1.0 / y) @ make_n(-x) @ g
    theta = math.atan2(k.c, k.a) % (2 * math.pi)
    if theta >= 2 * math.pi:    # a tiny negative angle rounds up to 2 pi
        theta = 0.0
    return IwasawaCoords(x, y, theta)


def iwasawa_recompose(coords: IwasawaCoords) -> Mat2:
    return Mat2.from_array(iwasawa_matrix(coords.x, coords.y, coords.theta))


# --------------------------------------------------------------------------
# reduction to the fundamental domain

@dataclass(frozen=True)
class ReducedPoint:
    rep: Mat2
    gamma: Mat2
    z: complex


def _reduce_points(z: np.ndarray, max_steps: int):
    """Reduce points ``z`` into the closed fundamental domain.

    Returns the reduced points and the accumulated right factors as integer
    arrays ``(p, q, r, s)`` of ``gamma = [[p, q], [r, s]]``.
    """
    z = np.array(z, dtype=complex, copy=True)
    n = z.shape[0]
    p = np.ones(n, dtype=np.int64)
    q = np.zeros(n, dtype=np.int64)
    r = np.zeros(n, dtype=np.int64)
    s = np.ones(n, dtype=np.int64)
    eps = POLICY.structural * 1e-3
    active = np.arange(n)
    steps = 0
    while active.size:
        steps += 1
        if steps > max_steps:
            raise ConvergenceError(f"reduction did not terminate after {max_steps} steps")
        za = z[active]
        k = np.floor(za.real + 0.5).astype(np.int64)
        za = za - k
        q[active] -= k * p[active]
        s[active] -= k * r[active]
        inv = (za.real ** 2 + za.imag ** 2) < 1.0 - eps
        idx = active[inv]
        za[inv] = -1.0 / za[inv]
        p_old, r_old = p[idx].copy(), r[idx].copy()
        p[idx], r[idx] = q[idx], s[idx]
        q[idx], s[idx] = -p_old, -r_old
        z[active] = za
        done = (np.abs(za.real) <= 0.5 + eps) & ((za.real ** 2 + za.imag ** 2) >= 1.0 - eps)
        active = active[~done]
    return z, (p, q, r, s)


def reduce_batch(g: np.ndarray, max_steps: int | None = None):
    """Vectorised reduction of an array of matrices (N, 2, 2).

    Returns ``(rep, gamma, z)`` with ``rep = g @ gamma`` reduced, ``gamma`` an
    int64 array (N, 2, 2) and ``z = coset_point(rep)``.
    """
    g = np.asarray(g, dtype=float)
    max_steps = POLICY.reduce_max_steps if max_steps is None else max_steps
    shape = g.shape[:-2]
    flat = g.reshape(-1, 2, 2)
    z0 = coset_point_batch(flat)
    _, (p, q, r, s) = _reduce_points(z0, max_steps)
    gamma = np.stack([np.stack([p, q], -1), np.stack([r, s], -1)], -2)
    rep = flat @ gamma
    z = coset_point_batch(rep)
    return rep.reshape(g.shape), gamma.reshape(shape + (2, 2)), z.reshape(shape)


def reduce(g: Mat2, max_steps: int | None = None) -> ReducedPoint:
    rep, gamma, z = reduce_batch(g.to_array()[None], max_steps)
    gam = Mat2(*(int(v) for v in gamma[0].reshape(4)))
    return ReducedPoint(g @ gam, gam, complex(z[0]))


def in_fundamental_domain(z, tol: float = POLICY.structural):
    z = np.asarray(z)
    return (np.abs(z.real) <= 0.5 + tol) & (np.abs(z) >= 1 - tol)


# --------------------------------------------------------------------------
# lattice enumeration

def _ext_gcd(a: int, b: int):
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        qt = a // b
        a, b = b, a - qt * b
        x0, x1 = x1, x0 - qt * x1
        y0, y1 = y1, y0 - qt * y1
    return a, x0, y0


def lattice_enumerate_array(g, radius: float, cap: int | None = None) -> np.ndarray:
    """All ``gamma`` in SL2(Z) with ``||g gamma|| <= radius`` as an int array (K, 2, 2).

    Columns ``v1 = (p, r)``, ``v2 = (q, s)`` of ``gamma`` satisfy
    ``||g gamma||^2 = v1' M v1 + v2' M v2`` with ``M = g' g``.  For each
    primitive ``v1`` the admissible ``v2`` form an arithmetic progression
    ``v2_0 + k v1`` cut out by a quadratic inequality in ``k``.
    """
    if radius < 0:
        raise DomainError("radius must be non-negative")
    cap = POLICY.enumeration_cap if cap is None else cap
    G = as_batch(g)
    M = G.T @ G
    R2 = radius * radius * (1 + 1e-12)
    # ||gamma|| <= ||g^-1|| ||g gamma|| and ||g^-1|| = ||g|| in SL2
    bound = int(math.floor(math.sqrt(float(np.sum(G * G))) * radius * (1 + 1e-12)))
    if (2 * bound + 1) ** 2 > cap:
        raise ResourceError(f"entry bound {bound} exceeds enumeration cap {cap}")
    rng = np.arange(-bound, bound + 1)
    P, Rr = np.meshgrid(rng, rng, indexing="ij")
    P, Rr = P.ravel(), Rr.ravel()
    Q1 = M[0, 0] * P * P + 2 * M[0, 1] * P * Rr + M[1, 1] * Rr * Rr
    keep = (Q1 <= R2) & (np.gcd(P, Rr) == 1)
    out = []
    for p, r, A in zip(P[keep].tolist(), Rr[keep].tolist(), Q1[keep].tolist()):
        # p s - q r = 1
        gcd, x, y = _ext_gcd(p, -r)
        if gcd < 0:
            x, y = -x, -y
        s0, q0 = x, y
        Bc = (p * M[0, 0] * q0 + p * M[0, 1] * s0 + r * M[1, 0] * q0 + r * M[1, 1] * s0)
        C = M[0, 0] * q0 * q0 + 2 * M[0, 1] * q0 * s0 + M[1, 1] * s0 * s0
        rhs = R2 - A
        disc = Bc * Bc - A * (C - rhs)
        if disc < 0:
            continue
        sq = math.sqrt(disc)
        klo = math.floor((-Bc - sq) / A) - 1
        khi = math.ceil((-Bc + sq) / A) + 1
        for k in range(klo, khi + 1):
            q, s = q0 + k * p, s0 + k * r
            if A + M[0, 0] * q * q + 2 * M[0, 1] * q * s + M[1, 1] * s * s <= R2:
                out.append((p, q, r, s))
    out.sort()
    return np.array(out, dtype=np.int64).reshape(-1, 2, 2)


def lattice_enumerate(g: Mat2, radius: float, cap: int | None = None) -> list[Mat2]:
    """All ``gamma`` in SL2(Z) with ``||g gamma||_F <= radius`` in lexicographic order."""
    arr = lattice_enumerate_array(g, radius, cap)
    return [Mat2(*(int(v) for v in m.reshape(4))) for m in arr]


def quotient_norm(g: Mat2) -> float:
    """``min over gamma of ||g gamma||``; at least ``sqrt(2)``."""
    rep = reduce(g).rep
    r = rep.frob()
    best = r
    for gam in lattice_enumerate(rep, r * (1 + 1e-9)):
        best = min(best, (rep @ gam).frob())
    return best


def quotient_norm_batch(g: np.ndarray) -> np.ndarray:
    """Vectorised ``quotient_norm``: the reduced representative is norm-minimal."""
    rep, _, _ = reduce_batch(g)
    return np.sqrt(frob2_batch(rep))


# --------------------------------------------------------------------------
# Haar quadrature

@lru_cache(maxsize=64)
def _gauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def _haar_once(F, box, n, rule="gauss", chunk=1 << 18):
    (x0, x1), (y0, y1), (t0, t1) = box
    if rule == "gauss":
        nodes, weights = _gauss(n)
    else:
        nodes = -1 + (np.arange(n) + 0.5) * (2.0 / n)
        weights = np.full(n, 2.0 / n)
    xs = 0.5 * (x1 - x0) * nodes + 0.5 * (x1 + x0)
    ys = 0.5 * (y1 - y0) * nodes + 0.5 * (y1 + y0)
    ts = 0.5 * (t1 - t0) * nodes + 0.5 * (t1 + t0)
    wx = 0.5 * (x1 - x0) * weights
    wy = 0.5 * (y1 - y0) * weights / ys ** 2
    wt = 0.5 * (t1 - t0) * weights
    Wyt = (wy[:, None] * wt[None, :]).ravel()
    Y, TH = np.meshgrid(ys, ts, indexing="ij")
    Y, TH = Y.ravel(), TH.ravel()
    # slabs of constant x keep memory bounded at high resolution
    slab = max(1, chunk // Y.size)
    parts = []
    for lo in range(0, n, slab):
        xb = xs[lo:lo + slab]
        pts = iwasawa_matrix(np.repeat(xb, Y.size), np.tile(Y, xb.size), np.tile(TH, xb.size))
        vals = np.asarray(F(pts), dtype=float).reshape(xb.size, -1)
        parts.append(float(wx[lo:lo + slab] @ (vals @ Wyt)))
    return math.fsum(parts)


def haar_integrate_sl2(F, box, resolution: int = 32, tol: float | None = None,
                       max_resolution: int = 512) -> float:
    """Integrate ``F`` over SL2(R) against ``dx dy dtheta / y^2``.

    ``F`` takes an array of matrices (N, 2, 2) and returns N values; it must
    vanish outside ``box = ((x0, x1), (y0, y1), (theta0, theta1))``.
    Tensor Gauss-Legendre with ``resolution`` nodes per axis; with ``tol`` the
    resolution is doubled until two successive values agree within ``tol``.
    """
    (_, _), (y0, y1), (_, _) = box
    if y0 <= 0 or y1 <= 0:
        raise DomainError("Haar box needs y > 0")
    val = _haar_once(F, box, resolution)
    if tol is None:
        return val
    n = resolution
    while True:
        n *= 2
        if n > max_resolution:
            raise ConvergenceError(f"Haar quadrature not converged at resolution {n // 2}")
        new = _haar_once(F, box, n)
        if abs(new - val) <= tol:
            return new
        val = new
