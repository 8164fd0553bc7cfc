"""Acceptance suite: thirteen numbered checks with fixed tolerances.

Each check returns ``(passed, value, detail)``; :func:`run_criterion` adds the
wall time and compares it against the check's runtime limit.  The suite is
shared by ``horolab acceptance`` and ``tests/test_acceptance.py``.
"""

from __future__ import annotations

import itertools
import math
import os
import time
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from horolab import curvature, fourier, rng as _rng
from horolab.config import ExperimentConfig
from horolab.defaults import DIAGONAL_CONTROL, default_dict
from horolab.poly import Polynomial
from horolab.sl2 import (a_batch, in_fundamental_domain, iwasawa_matrix, lattice_enumerate_array,
                         reduce_batch, u_batch)
from horolab.submanifold import PolyGraphMap, SurfaceMeasure, localize


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    value: str
    detail: str
    seconds: float
    limit: float | None

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        limit = f" (limit {self.limit:g} s)" if self.limit else ""
        return (f"criterion {self.number:2d} {status}  {self.name}: {self.value}; "
                f"{self.detail}; {self.seconds:.1f} s{limit}")

    def as_dict(self) -> dict:
        return asdict(self)


def _run_config(data: dict, budget_scale: float = 1.0, out_dir=None, stem=None):
    from horolab.cli import csv_text
    from horolab.experiments import run

    cfg = ExperimentConfig.from_dict(data)
    if budget_scale != 1.0:
        cfg = cfg.with_budget_scale(budget_scale)
    res = run(cfg)
    text = csv_text(res.columns, res.rows)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        name = stem or cfg.output.get("stem", cfg.kind)
        with open(os.path.join(out_dir, f"{name}.csv"), "w", encoding="utf8", newline="") as fh:
            fh.write(text)
    return res, text


def _graph(m, rows) -> PolyGraphMap:
    return PolyGraphMap.from_terms(m, rows)


PARABOLOID = _graph(2, [[((2, 0), 1.0), ((0, 2), 1.0)]])
HYPERBOLIC = _graph(2, [[((2, 0), 1.0), ((0, 2), -1.0)]])
CYLINDER = _graph(2, [[((2, 0), 1.0)]])
FLAT = _graph(2, [[]])
CUBIC = _graph(2, [[((3, 0), 1.0)]])
TWO_SQUARES = _graph(2, [[((2, 0), 1.0)], [((0, 2), 1.0)]])
PARABOLA = _graph(1, [[((2,), 1.0)]])

# 20 x 20 midpoint grid of (-1, 1)^2
MID_AXIS = -0.95 + 0.1 * np.arange(20)
MID_GRID = np.array(list(itertools.product(MID_AXIS, MID_AXIS)))


# --------------------------------------------------------------------------
# 1-3: group algebra, reduction, enumeration

def crit_group_algebra(seed=0, **_):
    gen = _rng.substream(seed, "acceptance-1")
    y = gen.uniform(1e-4, 1.0, 10_000)
    w = gen.uniform(-1.0, 1.0, 10_000)
    lhs = a_batch(y) @ u_batch(w)
    rhs = u_batch(w / y) @ a_batch(y)
    err = float(np.max(np.abs(lhs - rhs)))
    return err <= 1e-12, f"max entry error {err:.2e}", "tolerance 1e-12 over 10^4 (y, w)"


def crit_reduction(seed=0, **_):
    gen = _rng.substream(seed, "acceptance-2")
    n = 100_000
    x = gen.uniform(-50, 50, n)
    y = np.exp(gen.uniform(np.log(1e-4), np.log(1e4), n))
    th = gen.uniform(0, 2 * np.pi, n)
    g = iwasawa_matrix(x, y, th)
    rep, gamma, z = reduce_batch(g)
    in_fd = in_fundamental_domain(z, 1e-9)
    det = gamma[:, 0, 0] * gamma[:, 1, 1] - gamma[:, 0, 1] * gamma[:, 1, 0]
    unimodular = bool(np.all(det == 1)) and gamma.dtype.kind == "i"
    prod_err = float(np.max(np.abs(rep - g @ gamma) / (1 + np.abs(g @ gamma))))
    ok = bool(np.all(in_fd)) and unimodular and prod_err < 1e-9
    return (ok, f"{int(np.sum(in_fd))}/{n} in domain",
            f"unimodular {unimodular}, max |rep - g gamma| rel {prod_err:.1e}")


def _brute_force(R2: float) -> set:
    R = int(math.floor(math.sqrt(R2)))
    out = set()
    rng = range(-R, R + 1)
    for p, q, r, s in itertools.product(rng, rng, rng, rng):
        if p * s - q * r == 1 and p * p + q * q + r * r + s * s <= R2:
            out.add((p, q, r, s))
    return out


def crit_enumeration(**_):
    sizes = []
    for R2 in (2, 3, 5, 10, 20):
        got = {tuple(int(v) for v in m.reshape(4))
               for m in lattice_enumerate_array(np.eye(2), math.sqrt(R2) + 1e-12)}
        want = _brute_force(R2)
        if got != want:
            return False, f"mismatch at R^2 = {R2}", f"{len(got)} enumerated vs {len(want)}"
        sizes.append(len(want))
    return True, "set equality for R^2 in {2,3,5,10,20}", f"sizes {sizes}"


# --------------------------------------------------------------------------
# 4-7: curvature certificates, characterization, sublevel sets, diagonalization

def _two_squares_oracle() -> float:
    """1-D minimization over the circle of the coefficient system of (t1^2, t2^2)."""
    def obj(theta):
        H = np.diag([2 * math.cos(theta), 2 * math.sin(theta)])
        c = np.poly(H)          # [1, -tr, det]
        return c[1] ** 2 + c[2] ** 2

    res = minimize_scalar(obj, bounds=(0, 2 * math.pi), method="bounded",
                          options={"xatol": 1e-10})
    grid = np.linspace(0, 2 * math.pi, 4097)
    start = grid[np.argmin([obj(t) for t in grid])]
    res2 = minimize_scalar(obj, bounds=(start - 0.01, start + 0.01), method="bounded",
                           options={"xatol": 1e-12})
    return float(min(res.fun, res2.fun))


def crit_curvature_values(**_):
    e_par = curvature.e_star_values(PARABOLOID, MID_GRID)
    e_cyl = curvature.e_star_values(CYLINDER, MID_GRID)
    oracle = _two_squares_oracle()
    pts = MID_GRID[::20]
    coeff = np.array([curvature.coeff_system_min(TWO_SQUARES, t) for t in pts])
    par_err = float(np.max(np.abs(e_par - 2)))
    cyl_err = float(np.max(np.abs(e_cyl)))
    coeff_err = float(np.max(np.abs(coeff - oracle)))
    ok = par_err <= 1e-6 and cyl_err <= 1e-8 and coeff_err <= 1e-4 and abs(oracle - 3) <= 1e-4
    return (ok, f"paraboloid |e*-2| {par_err:.1e}, cylinder |e*| {cyl_err:.1e}",
            f"coeff_system_min {coeff.min():.6f} vs oracle {oracle:.6f} (err {coeff_err:.1e})")


CORPUS = {"paraboloid": PARABOLOID, "hyperbolic paraboloid": HYPERBOLIC, "cylinder": CYLINDER,
          "flat": FLAT, "t1^3 graph": CUBIC, "(t1^2, t2^2)": TWO_SQUARES}


def crit_characterization(delta=1e-3, **_):
    worst, prim_fail, parts = 1.0, 0, []
    for name, gmap in CORPUS.items():
        reports, _s = curvature.certify_region(gmap, MID_GRID, delta)
        agree = np.mean([(r.e_star > 1e-6) == (r.coeff_system_min > 1e-6) for r in reports])
        prim_fail += sum(1 for r in reports
                         if r.is_delta_curved and not r.primitive_dim > gmap.m - gmap.n)
        worst = min(worst, float(agree))
        parts.append(f"{name} {agree:.3f}")
    ok = worst >= 0.99 and prim_fail == 0
    return (ok, f"min agreement {worst:.3f}",
            f"primitive-dimension violations {prim_fail}; " + ", ".join(parts))


def crit_sublevel(seed=0, budget_scale=1.0, **_):
    deltas = 2.0 ** -np.arange(4, 15)
    samples = max(1, int(round(1_000_000 * budget_scale)))
    cases = [("x1", Polynomial.coordinate(1, 0), (0.9, 1.1)),
             ("x1^2", Polynomial.from_terms(1, [((2,), 1.0)]), (0.4, 0.6)),
             ("x1 x2", Polynomial.from_terms(2, [((1, 1), 1.0)]), (0.85, 1.0))]
    ok, parts = True, []
    for name, u, (lo, hi) in cases:
        c = curvature.sublevel_exponent(u, deltas, samples, seed).exponent
        ok &= lo <= c <= hi
        parts.append(f"{name} {c:.4f} in [{lo}, {hi}]")
    return ok, "; ".join(parts), f"{samples} samples, delta in 2^-14..2^-4"


DIAG_CORPUS = [
    ([1.0, 0.5], {(0, 0): Polynomial.from_terms(2, [((1, 1), 1.0)]),
                  (0, 1): Polynomial.from_terms(2, [((0, 0), 1.0), ((2, 0), 1.0)]),
                  (1, 1): Polynomial.from_terms(2, [((0, 1), -1.0)])}),
    ([2.0, 1.0, 3.0], {(0, 1): Polynomial.from_terms(3, [((0, 0, 1), 1.0)]),
                       (0, 2): Polynomial.from_terms(3, [((1, 0, 0), 0.5), ((0, 2, 0), 0.5)]),
                       (2, 2): Polynomial.from_terms(3, [((1, 1, 1), 2.0)])}),
]


def crit_diagonalization(seed=0, **_):
    gen = _rng.substream(seed, "acceptance-7")
    const_res, const_det = 0.0, 0.0
    for delta in (0.01, 0.1):
        for x in gen.uniform(-0.5, 0.5, (100, 2)):
            r = curvature.analytic_diagonalize([1.0, 1.0], {(0, 1): 1.0}, delta, x)
            const_res = max(const_res, r.residual)
            const_det = max(const_det, abs(r.jacobian_det - math.sqrt(1 - delta * delta)))
    gen_res, gen_ratio = 0.0, 0.0
    for lams, phi in DIAG_CORPUS:
        for delta in (0.01, 0.1):
            for x in gen.uniform(-0.5, 0.5, (100, len(lams))):
                r = curvature.analytic_diagonalize(lams, phi, delta, x)
                gen_res = max(gen_res, r.residual)
                gen_ratio = max(gen_ratio, abs(r.jacobian_det - 1) / delta)
    ok = const_res < 1e-12 and const_det <= 1e-6 and gen_res < 1e-10 and gen_ratio <= 5
    return (ok, f"constant case residual {const_res:.1e}, det error {const_det:.1e}",
            f"polynomial corpus residual {gen_res:.1e}, max |det-1|/delta {gen_ratio:.2f}")


# --------------------------------------------------------------------------
# 8-10: Fourier decay, frequency split, stationary phase

def _loc_paraboloid():
    return localize(SurfaceMeasure(PARABOLOID), [0.1, 0.05, 0.0125], 0.5)


def _loc_parabola(beta=0.5):
    return localize(SurfaceMeasure(PARABOLA), [0.1, 0.01], beta)


def crit_fourier_decay(seed=0, budget_scale=1.0, out_dir=None, **_):
    res3, _t = _run_config(default_dict("fourier-decay"), budget_scale, out_dir, "fourier_paraboloid")
    d2 = default_dict("fourier-decay")
    d2.update(d=2, m=1, n=1, surface=[[[[2], 1.0]]])
    d2["params"]["localize"] = {"x0": [0.1, 0.01], "beta": 0.5}
    d2["thresholds"] = {"slope": [-0.8, -0.2]}
    res2, _t = _run_config(d2, budget_scale, out_dir, "fourier_parabola")
    s3, s2 = res3.summary["slope"], res2.summary["slope"]
    # cross-validation of two K points against deterministic product quadrature
    checks = []
    for mu, K, row, resq in ((_loc_paraboloid(), 16.0, res3.rows[0], (16, 48, 128)),
                            (_loc_parabola(), 32.0, res2.rows[1], (32, 0, 512))):
        q = fourier.shell_norm_quadrature(mu, K, *resq)
        checks.append((K, q, row[1], row[2], abs(q - row[1]) <= 3 * row[2]))
    ok = -1.3 <= s3 <= -0.7 and -0.8 <= s2 <= -0.2 and all(c[-1] for c in checks)
    xv = ", ".join(f"K={c[0]:g}: quadrature {c[1]:.5f} vs {c[2]:.5f} +- {c[3]:.5f}"
                   for c in checks)
    return ok, f"paraboloid slope {s3:.3f}, parabola slope {s2:.3f}", xv


def crit_split(**_):
    mu = SurfaceMeasure(PARABOLA)
    mul = _loc_parabola(0.3)
    split = fourier.FrequencySplit(0.5, 4.0)
    waves = [fourier.GaussianWave((0.2, 0.1), 0.3, (1.0, -0.5)),
             fourier.GaussianWave((0.0, 0.3), 0.2, (3.0, 2.0)),
             fourier.BumpWave((0.1, 0.2), 0.8, (0.7, 0.3))]
    worst = 0.0
    for m_ in (mu, mul):
        for f in waves:
            r = fourier.split_eval(m_, f, split)
            worst = max(worst, abs(r.total - r.direct) / abs(r.direct))
    r = fourier.split_eval(mu, fourier.BumpWave((0.1, 0.1), 2.0, (1.4, 1.4)),
                           fourier.FrequencySplit(0.5, 8.0))
    worst = max(worst, abs(r.total - r.direct) / abs(r.direct))
    grid = np.linspace(0.0, 100.0, 10_000)
    lo, mid, hi = split.parts(grid)
    part_err = float(np.max(np.abs(lo + mid + hi - 1)))
    ok = worst < 1e-3 and part_err <= 2.0 ** -52
    return (ok, f"max relative split error {worst:.1e}",
            f"partition error {part_err:.1e} at 10^4 frequencies")


def crit_stationary(**_):
    Ks = 2.0 ** np.arange(4, 11)
    mu = _loc_paraboloid()
    normal = fourier.stationary_scaling(mu, [-0.2, -0.1, 1.0], Ks).slope
    tangential = fourier.stationary_scaling(mu, [1.0, 0.0, 0.2], Ks, require_normal=False).slope
    flat = localize(SurfaceMeasure(FLAT), [0.1, 0.05, 0.0], 0.5)
    flat_slope = fourier.stationary_scaling(flat, [0, 0, 1.0], 2.0 ** np.arange(-3, 2)).slope
    ok = -0.8 <= normal <= -0.2 and tangential < -1.5 and flat_slope > -0.2
    return (ok, f"normal {normal:.3f} (band [-0.8, -0.2])",
            f"tangential {tangential:.2f} (< -1.5), flat {flat_slope:.3f} (> -0.2, K <= 1/beta)")


# --------------------------------------------------------------------------
# 11-13: equidistribution, probes, determinism

def crit_equidistribution(seed=0, budget_scale=1.0, out_dir=None, **_):
    d = default_dict("equidistribute")
    d["seed"] = seed
    head, _t = _run_config(d, budget_scale, out_dir)
    c = dict(DIAGONAL_CONTROL, seed=seed)
    ctrl, _t = _run_config(c, budget_scale, out_dir)
    hs, cs = head.summary, ctrl.summary
    ok = head.passed and ctrl.passed
    value = (f"c = {hs['exponent']:.3f} CI ({hs['ci_lo']:.3f}, {hs['ci_hi']:.3f}), "
             f"D(2^-12)/D(2^-2) = {hs['end_ratio']:.3f}, max stderr/D = {hs['max_rel_stderr']:.1e}")
    detail = (f"diagonal control c = {cs['exponent']:.3f} CI ({cs['ci_lo']:.3f}, "
              f"{cs['ci_hi']:.3f}), D(2^-12) = {ctrl.rows[-1][4]:.4f}")
    return ok, value, detail


def crit_probes(seed=0, budget_scale=1.0, out_dir=None, **_):
    d = default_dict("mixing")
    d["seed"] = seed
    mix, _t = _run_config(d, budget_scale, out_dir)
    h = default_dict("horocycle")
    h["seed"] = seed
    hor, _t = _run_config(h, budget_scale, out_dir)
    ok = mix.passed and hor.passed
    return (ok, f"mixing drop x{mix.summary['drop_ratio']:.2f} (>= 4)",
            f"horocycle c=1 drop x{hor.summary['drop_ratio']:.2f} (>= 2)")


def _determinism_configs(seed):
    e = default_dict("equidistribute")
    e["grids"]["y"] = e["grids"]["y"][:5]
    e["budgets"].update(n0=16, replicates=4, boot=200)
    m = default_dict("mixing")
    m["grids"]["y"] = m["grids"]["y"][:3]
    m["budgets"]["samples"] = 200_000
    s = default_dict("sublevel")
    s["budgets"]["samples"] = 200_000
    f = default_dict("fourier-decay")
    f["budgets"]["samples"] = 64
    f["grids"]["K"] = [16.0, 32.0, 64.0, 128.0, 256.0]
    out = [e, m, s, f]
    for cfg in out:
        cfg["seed"] = seed
        cfg["thresholds"] = {}
    return out


def crit_determinism(seed=0, **_):
    prev = os.environ.get(_rng.WORKERS_ENV)
    texts = {}
    try:
        for workers in (1, 3):
            os.environ[_rng.WORKERS_ENV] = str(workers)
            texts[workers] = [_run_config(c)[1] for c in _determinism_configs(seed)]
    finally:
        if prev is None:
            os.environ.pop(_rng.WORKERS_ENV, None)
        else:
            os.environ[_rng.WORKERS_ENV] = prev
    same = [a == b for a, b in zip(texts[1], texts[3])]
    kinds = ["equidistribute", "mixing", "sublevel", "fourier-decay"]
    return (all(same), f"{sum(same)}/{len(same)} CSVs byte-identical",
            "workers 1 vs 3: " + ", ".join(f"{k} {'same' if s else 'DIFFERENT'}"
                                           for k, s in zip(kinds, same)))


# number -> (name, function, runtime limit in seconds or None)
CRITERIA = {
    1: ("group algebra", crit_group_algebra, 1.0),
    2: ("reduction", crit_reduction, 10.0),
    3: ("enumeration oracle", crit_enumeration, 10.0),
    4: ("curvature certificate values", crit_curvature_values, 30.0),
    5: ("characterization consistency", crit_characterization, 120.0),
    6: ("sublevel exponents", crit_sublevel, 60.0),
    7: ("diagonalization", crit_diagonalization, 10.0),
    8: ("Fourier L2 shell decay", crit_fourier_decay, 300.0),
    9: ("frequency-split identity", crit_split, 120.0),
    10: ("stationary-phase scaling", crit_stationary, 300.0),
    11: ("equidistribution", crit_equidistribution, 900.0),
    12: ("mixing and horocycle probes", crit_probes, 600.0),
    13: ("determinism", crit_determinism, None),
}


def run_criterion(number: int, seed: int = 0, budget_scale: float = 1.0,
                  out_dir=None) -> CriterionResult:
    name, fn, limit = CRITERIA[number]
    t0 = time.perf_counter()
    passed, value, detail = fn(seed=seed, budget_scale=budget_scale, out_dir=out_dir)
    seconds = time.perf_counter() - t0
    in_time = limit is None or seconds < limit
    if not in_time:
        detail = f"{detail}; runtime over limit"
    return CriterionResult(number, name, bool(passed and in_time), value, detail, seconds, limit)


def run_criteria(only=None, seed: int = 0, budget_scale: float = 1.0, out_dir=None):
    numbers = sorted(CRITERIA) if only is None else only
    return [run_criterion(k, seed, budget_scale, out_dir) for k in numbers]
