"""Curvature certificates for polynomial graph submanifolds.

``e_star`` is the minimum over unit normals ``z`` of the n-th smallest
absolute eigenvalue of ``H_z``, the Hessian of ``z . w``.  ``coeff_system_min``
is the minimum over unit ``z`` of ``sum_{j<n} s_j(z)^2`` where ``s_j`` are the
characteristic polynomial coefficients of ``H_z``; both vanish exactly when
``H_z`` has a kernel of dimension ``>= n`` for some ``z``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from horolab.errors import ConvergenceError, DomainError, FitError, UnsupportedError
from horolab.fitting import loglog_fit
from horolab.policy import POLICY
from horolab.poly import Polynomial
from horolab.submanifold import PolyGraphMap, unit_points


# --------------------------------------------------------------------------
# linear algebra

@dataclass(frozen=True)
class CharPolyCoeffs:
    """``s[j]`` is the coefficient of ``lambda^j`` in ``det(lambda I - H)``."""

    s: tuple

    def __getitem__(self, j):
        return self.s[j]

    def __len__(self):
        return len(self.s)


def char_poly_batch(H: np.ndarray) -> np.ndarray:
    """Coefficients ``s_0 .. s_{m-1}`` for a batch (..., m, m) via Newton's identities."""
    H = np.asarray(H, dtype=float)
    m = H.shape[-1]
    p = []
    P = np.broadcast_to(np.eye(m), H.shape).copy()
    for _ in range(m):
        P = P @ H
        p.append(np.trace(P, axis1=-2, axis2=-1))
    e = [np.ones(H.shape[:-2])]
    for k in range(1, m + 1):
        acc = np.zeros(H.shape[:-2])
        for i in range(1, k + 1):
            acc = acc + (-1) ** (i - 1) * e[k - i] * p[i - 1]
        e.append(acc / k)
    # det(lambda I - H) = sum_k (-1)^k e_k lambda^(m-k)
    s = [(-1) ** (m - j) * e[m - j] for j in range(m)]
    return np.stack(s, -1)


def char_poly_coeffs(H) -> CharPolyCoeffs:
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DomainError("expected a square matrix")
    if np.max(np.abs(H - H.T), initial=0.0) > POLICY.structural * max(1.0, np.max(np.abs(H))):
        raise DomainError("matrix is not symmetric")
    return CharPolyCoeffs(tuple(char_poly_batch(H).tolist()))


def jacobi_eigvals(H: np.ndarray, tol: float | None = None,
                   max_sweeps: int | None = None) -> np.ndarray:
    """Eigenvalues of a batch of symmetric matrices (..., m, m) by cyclic Jacobi.

    Sweeps over all pivots ``(p, q)``, annihilating ``A[p, q]`` with a plane
    rotation in every matrix of the batch at once, until the off-diagonal
    Frobenius norm drops below ``tol * max(1, ||A||)``.
    """
    tol = POLICY.jacobi_offdiag if tol is None else tol
    max_sweeps = POLICY.jacobi_max_sweeps if max_sweeps is None else max_sweeps
    A = np.array(H, dtype=float, copy=True)
    shape = A.shape
    m = shape[-1]
    A = A.reshape(-1, m, m)
    if m == 1:
        return A[:, 0, 0].reshape(shape[:-2] + (1,))
    scale = np.maximum(1.0, np.sqrt(np.einsum("kij,kij->k", A, A)))
    mask_off = ~np.eye(m, dtype=bool)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(A[:, mask_off] ** 2, axis=1))
        if np.all(off <= tol * scale):
            return np.diagonal(A, axis1=1, axis2=2).reshape(shape[:-2] + (m,)).copy()
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = A[:, p, q]
                work = np.abs(apq) > 0
                if not np.any(work):
                    continue
                app, aqq = A[:, p, p], A[:, q, q]
                # tiny pivots overflow theta to inf, which correctly gives t = 0
                with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
                    theta = np.where(work, (aqq - app) / (2 * np.where(work, apq, 1.0)), 0.0)
                    t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
                t = np.where(theta == 0, 1.0, t)
                t = np.where(work, t, 0.0)
                c = 1 / np.sqrt(t * t + 1)
                s = t * c
                # A <- R' A R with R the rotation in the (p, q) plane
                colp, colq = A[:, :, p].copy(), A[:, :, q].copy()
                A[:, :, p] = c[:, None] * colp - s[:, None] * colq
                A[:, :, q] = s[:, None] * colp + c[:, None] * colq
                rowp, rowq = A[:, p, :].copy(), A[:, q, :].copy()
                A[:, p, :] = c[:, None] * rowp - s[:, None] * rowq
                A[:, q, :] = s[:, None] * rowp + c[:, None] * rowq
                A[:, p, q] = 0.0
                A[:, q, p] = 0.0
    raise ConvergenceError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")


def eigen_abs_sorted(H) -> np.ndarray:
    """Absolute eigenvalues sorted ascending, for one matrix or a batch."""
    return np.sort(np.abs(jacobi_eigvals(H)), axis=-1)


# --------------------------------------------------------------------------
# sphere search

def _sphere_grid(n: int, size: int) -> np.ndarray:
    """Points on the unit sphere of R^n, one per antipodal pair (objectives are even)."""
    if n == 1:
        return np.ones((1, 1))
    if n == 2:
        th = (np.arange(size) + 0.5) * math.pi / size
        return np.stack([np.cos(th), np.sin(th)], -1)
    if n == 3:
        k = np.arange(2 * size) + 0.5
        zc = 1 - 2 * k / (2 * size)
        phi = math.pi * (1 + 5 ** 0.5) * k
        r = np.sqrt(1 - zc * zc)
        pts = np.stack([r * np.cos(phi), r * np.sin(phi), zc], -1)
        return pts[pts[:, 2] >= 0]
    if n == 4:
        side = max(6, int(round(size ** (1 / 3))) + 1)
        a = (np.arange(side) + 0.5) * math.pi / side
        b = (np.arange(side) + 0.5) * math.pi / side
        c = (np.arange(2 * side) + 0.5) * math.pi / side
        A, B, C = np.meshgrid(a, b, c, indexing="ij")
        pts = np.stack([np.cos(A), np.sin(A) * np.cos(B),
                        np.sin(A) * np.sin(B) * np.cos(C),
                        np.sin(A) * np.sin(B) * np.sin(C)], -1).reshape(-1, 4)
        return pts[pts[:, 0] >= 0]
    raise UnsupportedError("sphere search is implemented for n <= 4")


def _angles_to_sphere(ang: np.ndarray) -> np.ndarray:
    """Hyperspherical angles (..., n-1) to unit vectors (..., n)."""
    n = ang.shape[-1] + 1
    out = np.ones(ang.shape[:-1] + (n,))
    sin_prod = np.ones(ang.shape[:-1])
    for i in range(n - 1):
        out[..., i] = sin_prod * np.cos(ang[..., i])
        sin_prod = sin_prod * np.sin(ang[..., i])
    out[..., n - 1] = sin_prod
    return out


def _sphere_to_angles(z: np.ndarray) -> np.ndarray:
    n = z.shape[-1]
    ang = np.zeros(n - 1)
    for i in range(n - 1):
        rest = np.linalg.norm(z[i:])
        ang[i] = math.acos(max(-1.0, min(1.0, z[i] / rest))) if rest > 0 else 0.0
    if n >= 2 and z[-1] < 0:
        ang[-1] = 2 * math.pi - ang[-1]
    return ang


@dataclass(frozen=True)
class SphereMin:
    value: float
    argmin: np.ndarray
    grid_value: float
    grid_size: int
    refined_shift: bool   # refinement moved the minimum by more than 10%


def sphere_minimize(obj, n: int, grid_size: int = 1024, tol: float = 1e-12) -> SphereMin:
    """Minimise an even function on the unit sphere of R^n: grid, then coordinate descent.

    ``obj`` maps an array of unit vectors (K, n) to K values.
    """
    grid = _sphere_grid(n, grid_size)
    vals = obj(grid)
    if n == 1:
        return SphereMin(float(vals[0]), grid[0], float(vals[0]), 1, False)
    order = np.argsort(vals)[:3]
    step0 = math.pi / (grid_size if n == 2 else max(8, int(grid.shape[0] ** (1 / (n - 1)))))
    best_val, best_z = float(vals[order[0]]), grid[order[0]]
    for idx in order:
        ang = _sphere_to_angles(grid[idx])
        cur = float(vals[idx])
        step = step0
        while step > tol:
            moved = False
            for i in range(n - 1):
                trial = np.repeat(ang[None], 2, 0)
                trial[0, i] += step
                trial[1, i] -= step
                tv = obj(_angles_to_sphere(trial))
                j = int(np.argmin(tv))
                if tv[j] < cur:
                    cur, ang, moved = float(tv[j]), trial[j], True
            if not moved:
                step /= 2
        if cur < best_val:
            best_val, best_z = cur, _angles_to_sphere(ang)
    grid_best = float(vals[order[0]])
    shift = abs(grid_best - best_val) > 0.1 * max(abs(grid_best), 1e-300)
    return SphereMin(best_val, best_z, grid_best, int(grid.shape[0]), bool(shift))


# --------------------------------------------------------------------------
# certificates

def _check_n(gmap: PolyGraphMap):
    if gmap.n > 4:
        raise UnsupportedError("curvature search supports codimension n <= 4")


def e_star_search(gmap: PolyGraphMap, t, grid_size: int = 1024) -> SphereMin:
    _check_n(gmap)
    Hs = gmap.hessians(np.asarray(t, dtype=float))
    n = gmap.n

    def obj(Z):
        H = np.einsum("kr,rij->kij", Z, Hs)
        return eigen_abs_sorted(H)[:, n - 1]

    return sphere_minimize(obj, n, grid_size)


def e_star(gmap: PolyGraphMap, t, grid_size: int = 1024):
    """``(value, argmin z)``; an upper bound for the infimum over the unit sphere."""
    res = e_star_search(gmap, t, grid_size)
    return res.value, res.argmin


def coeff_system_search(gmap: PolyGraphMap, t, grid_size: int = 1024) -> SphereMin:
    _check_n(gmap)
    Hs = gmap.hessians(np.asarray(t, dtype=float))
    n = gmap.n

    def obj(Z):
        H = np.einsum("kr,rij->kij", Z, Hs)
        s = char_poly_batch(H)[:, :n]
        return np.sum(s * s, axis=-1)

    return sphere_minimize(obj, n, grid_size)


def coeff_system_min(gmap: PolyGraphMap, t, grid_size: int = 1024) -> float:
    return coeff_system_search(gmap, t, grid_size).value


def primitive_dimension(gmap: PolyGraphMap, t, threshold: float | None = None) -> int:
    """Largest k such that every k of the d component gradients are independent."""
    threshold = POLICY.rank_threshold if threshold is None else threshold
    d, m = gmap.d, gmap.m
    if d > 12:
        raise UnsupportedError("primitive dimension needs d <= 12")
    grads = gmap.jacobian(np.asarray(t, dtype=float))  # (d, m)
    best = 0
    for k in range(1, min(m, d) + 1):
        subsets = np.array(list(itertools.combinations(range(d), k)))
        A = grads[subsets]                      # (C, k, m)
        gram = A @ np.swapaxes(A, -1, -2)       # (C, k, k)
        smallest = eigen_abs_sorted(gram)[:, 0]
        if np.all(smallest > threshold):
            best = k
        else:
            break
    return best


@dataclass(frozen=True)
class CurvatureReport:
    t: tuple
    e_star: float
    argmin_z: tuple
    coeff_system_min: float
    delta: float
    is_delta_curved: bool
    primitive_dim: int
    refined_shift: bool


def curvature_report(gmap: PolyGraphMap, t, delta: float, grid_size: int = 1024) -> CurvatureReport:
    t = np.asarray(t, dtype=float)
    es = e_star_search(gmap, t, grid_size)
    cs = coeff_system_search(gmap, t, grid_size)
    return CurvatureReport(tuple(t.tolist()), es.value, tuple(es.argmin.tolist()), cs.value,
                           delta, es.value > delta, primitive_dimension(gmap, t),
                           es.refined_shift or cs.refined_shift)


@dataclass(frozen=True)
class RegionSummary:
    points: int
    delta: float
    noncurved_fraction: float
    min_e_star: float
    max_e_star: float
    flagged: int


def certify_region(gmap: PolyGraphMap, grid, delta: float, grid_size: int = 1024):
    """Per-point reports (in grid order) and a summary for a parameter grid (K, m)."""
    grid = np.asarray(grid, dtype=float).reshape(-1, gmap.m)
    if np.any(np.abs(grid) >= 1):
        raise DomainError("grid points must lie in (-1, 1)^m")
    reports = [curvature_report(gmap, t, delta, grid_size) for t in grid]
    es = np.array([r.e_star for r in reports])
    summary = RegionSummary(len(reports), delta,
                            float(np.mean(es <= delta)) if reports else 0.0,
                            float(es.min()) if reports else math.nan,
                            float(es.max()) if reports else math.nan,
                            sum(r.refined_shift for r in reports))
    return reports, summary


def e_star_values(gmap: PolyGraphMap, grid) -> np.ndarray:
    """``e_star`` on a grid; vectorised for hypersurfaces (n = 1)."""
    grid = np.asarray(grid, dtype=float).reshape(-1, gmap.m)
    if gmap.n == 1:
        H = gmap.hessians(grid)[:, 0]
        return eigen_abs_sorted(H)[:, 0]
    return np.array([e_star(gmap, t)[0] for t in grid])


def noncurved_exponent(gmap: PolyGraphMap, grid, deltas):
    """Fraction of non-delta-curved grid points per delta and its log-log slope."""
    es = e_star_values(gmap, grid)
    deltas = np.asarray(deltas, dtype=float)
    frac = np.array([np.mean(es <= dl) for dl in deltas])
    ok = frac > 0
    fit = loglog_fit(deltas[ok], frac[ok])
    return frac, fit


# --------------------------------------------------------------------------
# sublevel sets

@dataclass(frozen=True)
class SublevelFit:
    deltas: tuple
    fractions: tuple
    hits: tuple
    used: tuple
    exponent: float
    residual: float


def sublevel_exponent(u: Polynomial, deltas, samples: int = 1_000_000, seed: int = 0,
                      min_hits: int | None = None, method: str = "halton") -> SublevelFit:
    """Sampled measure of ``{t in (-1, 1)^m : |u(t)| < delta}`` and its log-log slope.

    ``method`` is ``halton`` (scrambled, the default: the fitted slope then
    sits within ~1e-3 of the exact-measure slope) or ``mc``.
    """
    if u.is_zero():
        raise DomainError("u must not vanish identically")
    min_hits = POLICY.min_sublevel_hits if min_hits is None else min_hits
    deltas = np.sort(np.asarray(deltas, dtype=float))
    t = 2 * unit_points(method, samples, u.nvars, seed, 0, stream="sublevel") - 1
    absval = np.sort(np.abs(u(t)))
    hits = np.searchsorted(absval, deltas, side="left")
    frac = hits / samples
    used = hits >= min_hits
    if used.sum() < 2:
        raise FitError("fewer than two delta values with enough hits")
    fit = loglog_fit(deltas[used], frac[used])
    return SublevelFit(tuple(deltas.tolist()), tuple(frac.tolist()), tuple(hits.tolist()),
                       tuple(used.tolist()), fit.slope, fit.residual)


# --------------------------------------------------------------------------
# analytic diagonalization

@dataclass(frozen=True)
class DiagonalizationResult:
    x: tuple
    y: tuple
    residual: float
    jacobian_det: float


def _phi_values(phi, l, x):
    vals = np.zeros((l, l))
    for i in range(l):
        for j in range(i, l):
            p = phi.get((i, j)) if isinstance(phi, dict) else phi[i][j]
            if p is None:
                continue
            vals[i, j] = float(p(x)) if isinstance(p, Polynomial) else float(p)
    return vals


def quadratic_form(lams, phi, delta, x) -> float:
    """``F(x) = sum lam_i x_i^2 + 2 delta sum_{i<=j} x_i x_j phi_ij(x)``."""
    lams = np.asarray(lams, dtype=float)
    x = np.asarray(x, dtype=float)
    P = _phi_values(phi, len(lams), x)
    return float(np.sum(lams * x * x) + 2 * delta * (x @ P @ x))


def diagonalizing_map(lams, phi, delta, x, min_ratio: float | None = None) -> np.ndarray:
    """The change of variable ``y = psi(x)`` with ``F(x) = sum lam_i y_i^2``.

    Completes the square in ``x_1, x_2, ...`` in turn.  With
    ``D_i = lam_i + 2 delta phi*_ii`` the step for ``x_i`` is
    ``x*_i = x_i + delta sum_{j>i} x_j phi*_ij / D_i`` and the remaining
    coefficients update to ``phi*_jk -= delta phi*_ij phi*_ik / D_i`` off the
    diagonal and ``phi*_jj -= delta phi*_ij^2 / (2 D_i)`` on it.  Finally
    ``y_i = x*_i sqrt(D_i / lam_i)``.
    """
    min_ratio = POLICY.diag_min_ratio if min_ratio is None else min_ratio
    lams = np.asarray(lams, dtype=float)
    x = np.asarray(x, dtype=float)
    l = lams.size
    P = _phi_values(phi, l, x)
    P = np.triu(P)
    xs = np.empty(l)
    D = np.empty(l)
    for i in range(l):
        D[i] = lams[i] + 2 * delta * P[i, i]
        if D[i] / lams[i] < min_ratio:
            raise DomainError("delta too large: completing-the-square denominator "
                              f"{D[i]:.3g} is too close to 0 for lambda={lams[i]:.3g}")
        row = P[i, i + 1:]
        xs[i] = x[i] + delta * np.dot(x[i + 1:], row) / D[i]
        upd = np.outer(row, row) * (delta / D[i])
        upd[np.diag_indices_from(upd)] *= 0.5
        P[i + 1:, i + 1:] -= np.triu(upd)
    return xs * np.sqrt(D / lams)


def analytic_diagonalize(lams, phi, delta: float, x, h: float = 1e-6) -> DiagonalizationResult:
    """Apply the diagonalizing change of variable at ``x``; report residual and det."""
    lams = np.asarray(lams, dtype=float)
    if np.min(np.abs(lams)) <= 0:
        raise DomainError("eigenvalues must be bounded away from 0")
    x = np.asarray(x, dtype=float)
    y = diagonalizing_map(lams, phi, delta, x)
    residual = abs(quadratic_form(lams, phi, delta, x) - float(np.sum(lams * y * y)))
    l = lams.size
    J = np.empty((l, l))
    for j in range(l):
        e = np.zeros(l)
        e[j] = h
        J[:, j] = (diagonalizing_map(lams, phi, delta, x + e)
                   - diagonalizing_map(lams, phi, delta, x - e)) / (2 * h)
    return DiagonalizationResult(tuple(x.tolist()), tuple(y.tolist()), residual,
                                 float(np.linalg.det(J)))
