"""Log-log exponent fits shared by the curvature, Fourier and equidistribution modules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from horolab.errors import FitError


@dataclass(frozen=True)
class LineFit:
    """``log(value) ~ intercept + slope * log(scale)``; ``residual`` is the RMS misfit."""

    slope: float
    intercept: float
    residual: float
    slope_stderr: float


def weighted_line(x, y, w=None) -> LineFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.ptp(x) == 0:
        raise FitError("need at least two distinct abscissae")
    w = np.ones_like(x) if w is None else np.asarray(w, dtype=float)
    A = np.stack([np.ones_like(x), x], -1)
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(A * sw[:, None], y * sw, rcond=None)
    res = y - A @ coef
    rms = float(np.sqrt(np.sum(w * res * res) / np.sum(w)))
    dof = x.size - 2
    if dof > 0:
        cov = np.linalg.inv((A * w[:, None]).T @ A) * (np.sum(w * res * res) / dof)
        se = float(np.sqrt(max(cov[1, 1], 0.0)))
    else:
        se = float("nan")
    return LineFit(float(coef[1]), float(coef[0]), rms, se)


def loglog_fit(scales, values, weights=None) -> LineFit:
    """Least-squares slope of ``log values`` against ``log scales``."""
    scales = np.asarray(scales, dtype=float)
    values = np.asarray(values, dtype=float)
    if np.any(scales <= 0) or np.any(values <= 0):
        raise FitError("log-log fit needs positive data")
    return weighted_line(np.log(scales), np.log(values), weights)
