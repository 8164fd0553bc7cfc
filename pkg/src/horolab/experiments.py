"""Config-driven experiment runners shared by the CLI and the acceptance suite.

Each runner turns a validated :class:`ExperimentConfig` into a table (column
names plus rows) and a flat summary of fitted quantities.  Thresholds declared
in the config are checked against the summary by :func:`check_thresholds`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from horolab import curvature, equidist, fourier
from horolab import rng as _rng
from horolab.config import ExperimentConfig
from horolab.errors import SchemaError
from horolab.homspace import ONE, AutoBumpFactor, FactorizableTestFn, GElem
from horolab.poly import Polynomial
from horolab.sl2 import Mat2, iwasawa_matrix
from horolab.submanifold import PolyGraphMap, SurfaceMeasure, localize


@dataclass
class ExperimentResult:
    kind: str
    columns: tuple
    rows: list
    summary: dict
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


# --------------------------------------------------------------------------
# builders

def build_map(cfg: ExperimentConfig) -> PolyGraphMap:
    return PolyGraphMap(cfg.m, cfg.n, tuple(Polynomial.from_config(cfg.m, row)
                                            for row in cfg.surface))


def build_measure(cfg: ExperimentConfig) -> SurfaceMeasure:
    dens = cfg.density
    return SurfaceMeasure(build_map(cfg), halfwidth=float(dens.get("halfwidth", 1.0)),
                          center=tuple(dens["center"]) if "center" in dens else None,
                          sharpness=float(dens.get("sharpness", 1.0)))


def build_factor(entry):
    if entry == "one":
        return ONE
    kw = {k: float(entry[k]) for k in ("radius", "amplitude", "sharpness") if k in entry}
    return AutoBumpFactor.at(float(entry["x"]), float(entry["y"]), float(entry.get("theta", 0.0)),
                             **kw)


def build_testfn(cfg: ExperimentConfig) -> FactorizableTestFn:
    return FactorizableTestFn(tuple(build_factor(s) for s in cfg.testfn["factors"]))


def build_basepoint(cfg: ExperimentConfig) -> GElem:
    return GElem(tuple(Mat2.from_array(iwasawa_matrix(*map(float, trip)))
                       for trip in cfg.basepoint))


def tensor_grid(axis, m: int) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    return np.array(list(itertools.product(axis, repeat=m)), dtype=float).reshape(-1, m)


def _fit_summary(fit, prefix=""):
    if fit is None:
        return {f"{prefix}exponent": None, f"{prefix}ci_lo": None, f"{prefix}ci_hi": None,
                f"{prefix}ci_excludes_zero": False, f"{prefix}ci_contains_zero": True}
    return {f"{prefix}exponent": fit.exponent, f"{prefix}ci_lo": fit.ci[0],
            f"{prefix}ci_hi": fit.ci[1], f"{prefix}ci_excludes_zero": fit.excludes_zero,
            f"{prefix}ci_contains_zero": not fit.excludes_zero,
            f"{prefix}used_points": int(sum(fit.used))}


# --------------------------------------------------------------------------
# runners

def run_certify(cfg: ExperimentConfig) -> ExperimentResult:
    gmap = build_map(cfg)
    delta = float(cfg.params["delta"])
    grid = tensor_grid(cfg.grids["t"], gmap.m)
    size = int(cfg.budget("sphere_grid", 1024))
    reports, summ = curvature.certify_region(gmap, grid, delta, size)
    eps = float(cfg.params.get("zero_tol", 1e-6))
    cols = tuple(f"t{i + 1}" for i in range(gmap.m)) + (
        "e_star", "coeff_system_min", "primitive_dim", "delta_curved", "refined_shift")
    rows, agree, prim_ok = [], 0, 0
    for r in reports:
        rows.append(tuple(r.t) + (r.e_star, r.coeff_system_min, r.primitive_dim,
                                  int(r.is_delta_curved), int(r.refined_shift)))
        agree += (r.e_star > eps) == (r.coeff_system_min > eps)
        prim_ok += (not r.is_delta_curved) or r.primitive_dim > gmap.m - gmap.n
    n = max(len(reports), 1)
    summary = {"points": summ.points, "delta": delta, "min_e_star": summ.min_e_star,
               "max_e_star": summ.max_e_star,
               "min_coeff_system": float(min(r.coeff_system_min for r in reports)),
               "max_coeff_system": float(max(r.coeff_system_min for r in reports)),
               "noncurved_fraction": summ.noncurved_fraction, "flagged": summ.flagged,
               "agreement_fraction": agree / n, "primitive_ok_fraction": prim_ok / n}
    return ExperimentResult(cfg.kind, cols, rows, summary)


def run_sublevel(cfg: ExperimentConfig) -> ExperimentResult:
    u = Polynomial.from_config(cfg.m, cfg.params["u"])
    samples = int(cfg.budget("samples", 1_000_000))
    fit = curvature.sublevel_exponent(u, cfg.grids["delta"], samples, cfg.seed,
                                      method=cfg.params.get("method", "halton"))
    rows = []
    for dl, p, h, used in zip(fit.deltas, fit.fractions, fit.hits, fit.used):
        rows.append((dl, p, math.sqrt(p * (1 - p) / samples), int(h), int(used)))
    summary = {"exponent": fit.exponent, "residual": fit.residual, "samples": samples}
    return ExperimentResult(cfg.kind, ("delta", "fraction", "stderr", "hits", "used"),
                            rows, summary)


def _phi_from_config(entries, l):
    phi = {}
    for ent in entries:
        key = (int(ent["i"]), int(ent["j"]))
        phi[key] = (float(ent["value"]) if "value" in ent
                    else Polynomial.from_config(l, ent["terms"]))
    return phi


def run_diagonalize(cfg: ExperimentConfig) -> ExperimentResult:
    lams = np.asarray(cfg.params["lams"], dtype=float)
    l = lams.size
    phi = _phi_from_config(cfg.params["phi"], l)
    count = int(cfg.budget("points", 100))
    radius = float(cfg.params.get("radius", 0.5))
    xs = radius * (2 * _rng.substream(cfg.seed, "diagonalize").random((count, l)) - 1)
    cols = ("delta", "point") + tuple(f"x{i + 1}" for i in range(l)) + tuple(
        f"y{i + 1}" for i in range(l)) + ("residual", "jacobian_det")
    rows, res, ratio, dets = [], [], [], []
    for delta in cfg.grids["delta"]:
        for k, x in enumerate(xs):
            r = curvature.analytic_diagonalize(lams, phi, float(delta), x)
            rows.append((float(delta), k) + r.x + r.y + (r.residual, r.jacobian_det))
            res.append(r.residual)
            dets.append(r.jacobian_det)
            ratio.append(abs(r.jacobian_det - 1) / float(delta))
    summary = {"points": count, "max_residual": float(max(res)),
               "min_jacobian_det": float(min(dets)), "max_jacobian_det": float(max(dets)),
               "max_det_deviation_ratio": float(max(ratio))}
    return ExperimentResult(cfg.kind, cols, rows, summary)


def run_fourier(cfg: ExperimentConfig) -> ExperimentResult:
    mu = build_measure(cfg)
    p = cfg.params
    if "localize" in p:
        mu = localize(mu, p["localize"]["x0"], float(p["localize"]["beta"]))
    Ks = cfg.grids["K"]
    if p["mode"] == "shell":
        fit = fourier.l2_shell_decay(mu, Ks, int(cfg.budget("samples", 2048)), cfg.seed,
                                     check_scale=bool(p.get("check_scale", True)))
        name = "norm"
    else:
        fit = fourier.stationary_scaling(mu, p["direction"], Ks,
                                         require_normal=bool(p.get("require_normal", True)))
        name = "magnitude"
    rows = [(K, v, e, int(u)) for K, v, e, u in zip(fit.K, fit.values, fit.stderr, fit.used)]
    summary = {"slope": fit.slope, "residual": fit.residual, "slope_stderr": fit.slope_stderr,
               "mode": p["mode"]}
    return ExperimentResult(cfg.kind, ("K", name, "stderr", "used"), rows, summary)


def schedule_from(cfg: ExperimentConfig) -> equidist.Schedule:
    b = cfg.budgets
    return equidist.Schedule(int(b.get("n0", 64)), int(b.get("n_max", 1 << 20)),
                             int(b.get("replicates", 8)), cfg.params.get("method", "lattice"))


def run_equidistribute(cfg: ExperimentConfig) -> ExperimentResult:
    exp = equidist.TranslateExperiment(build_measure(cfg), build_basepoint(cfg),
                                       build_testfn(cfg), tuple(cfg.grids["y"]), cfg.seed,
                                       schedule_from(cfg))
    target = cfg.params.get("target")
    curve = equidist.discrepancy_curve(exp, None if target is None else float(target),
                                       int(cfg.budget("boot", 2000)))
    used = curve.fit.used if curve.fit is not None else (False,) * len(exp.ys)
    rows, D = [], []
    for y, v, u in zip(exp.ys, curve.values, used):
        disc = abs(v.value - curve.target)
        D.append(disc)
        rows.append((y, v.value, v.stderr, v.samples, disc, int(u)))
    rel = [v.stderr / d if d > 0 else math.inf for v, d in zip(curve.values, D)]
    summary = {"target": curve.target, **_fit_summary(curve.fit),
               "end_ratio": D[-1] / D[0] if D[0] > 0 else math.inf,
               "max_rel_stderr": float(max(rel)), "fit_error": curve.fit_error}
    return ExperimentResult(cfg.kind, ("y", "value", "stderr", "samples", "discrepancy", "used"),
                            rows, summary)


def _probe_result(cfg, vals, fit, complex_cols):
    rows = []
    for v in vals:
        if complex_cols:
            rows.append((v.y, v.value.real, v.value.imag, abs(v.value), v.stderr, v.samples))
        else:
            rows.append((v.y, v.value.real, v.stderr, v.samples))
    first, last = abs(vals[0].value), abs(vals[-1].value)
    summary = {**_fit_summary(fit), "first_magnitude": first, "last_magnitude": last,
               "drop_ratio": first / last if last > 0 else math.inf}
    cols = (("y", "value_re", "value_im", "magnitude", "stderr", "samples") if complex_cols
            else ("y", "value", "stderr", "samples"))
    return ExperimentResult(cfg.kind, cols, rows, summary)


def run_mixing(cfg: ExperimentConfig) -> ExperimentResult:
    f1, f2 = (build_factor(s) for s in cfg.testfn["factors"])
    vals, fit = equidist.mixing_probe(f1, f2, cfg.grids["y"],
                                      int(cfg.budget("samples", 1_000_000)), cfg.seed)
    return _probe_result(cfg, vals, fit, False)


def run_horocycle(cfg: ExperimentConfig) -> ExperimentResult:
    f0 = build_factor(cfg.testfn["factors"][0])
    x0 = iwasawa_matrix(*map(float, cfg.basepoint[0]))
    kw = {k: int(cfg.budgets[k]) for k in ("per_unit", "base", "cap") if k in cfg.budgets}
    vals, fit = equidist.horocycle_character_probe(
        f0, x0, float(cfg.params["c"]), cfg.grids["y"],
        bool(cfg.params.get("centered", False)), cfg.seed, **kw)
    return _probe_result(cfg, vals, fit, True)


RUNNERS = {
    "certify-curvature": run_certify,
    "sublevel": run_sublevel,
    "diagonalize-demo": run_diagonalize,
    "fourier-decay": run_fourier,
    "equidistribute": run_equidistribute,
    "mixing": run_mixing,
    "horocycle": run_horocycle,
}


def check_thresholds(summary: dict, thresholds: dict) -> dict:
    """``{name: passed}`` for every declared threshold."""
    out = {}
    for name, bound in thresholds.items():
        if name not in summary:
            raise SchemaError(f"field 'thresholds.{name}': no summary quantity of that name "
                              f"(available: {', '.join(sorted(summary))})")
        v = summary[name]
        if isinstance(bound, bool):
            out[name] = bool(v) == bound
        elif v is None or (isinstance(v, float) and math.isnan(v)):
            out[name] = False
        else:
            lo, hi = bound
            out[name] = (lo is None or v >= lo) and (hi is None or v <= hi)
    return out


def run(cfg: ExperimentConfig) -> ExperimentResult:
    res = RUNNERS[cfg.kind](cfg)
    res.checks = check_thresholds(res.summary, cfg.thresholds)
    return res
