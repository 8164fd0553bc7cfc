"""Built-in experiment configs, one per subcommand.

These are the configs used when ``--config`` is omitted and by the
acceptance suite.  ``configs/*.yaml`` in the repository carry the same
settings with field-by-field annotations.
"""

from __future__ import annotations

import copy

from horolab.config import ExperimentConfig

PARABOLOID = [[[[2, 0], 1.0], [[0, 2], 1.0]]]
PARABOLA = [[[[2], 1.0]]]
DIAGONAL = [[[[1], 1.0]]]

# two bumps of radius 0.6 in the Iwasawa chart (x, y, theta)
BUMP_A = {"x": 0.1, "y": 1.3, "theta": 0.5, "radius": 0.6}
BUMP_B = {"x": -0.2, "y": 1.0, "theta": 2.0, "radius": 0.6}

Y_GRID = [2.0 ** -k for k in range(2, 13)]
PROBE_Y_GRID = [2.0 ** -k for k in range(2, 11)]

DEFAULTS = {
    "certify-curvature": {
        "kind": "certify-curvature", "seed": 0, "d": 3, "m": 2, "n": 1,
        "surface": PARABOLOID,
        "grids": {"t": [round(-0.95 + 0.1 * k, 12) for k in range(20)]},
        "params": {"delta": 0.5},
        "thresholds": {"min_e_star": [2 - 1e-6, 2 + 1e-6], "max_e_star": [2 - 1e-6, 2 + 1e-6]},
    },
    "sublevel": {
        "kind": "sublevel", "seed": 0, "m": 2,
        "params": {"u": [[[1, 1], 1.0]], "method": "halton"},
        "grids": {"delta": [2.0 ** -k for k in range(14, 3, -1)]},
        "budgets": {"samples": 1_000_000},
        "thresholds": {"exponent": [0.85, 1.0]},
    },
    "diagonalize-demo": {
        "kind": "diagonalize-demo", "seed": 0,
        "params": {
            "lams": [1.0, 2.0, 3.0],
            "phi": [
                {"i": 0, "j": 0, "terms": [[[1, 0, 0], 0.5], [[0, 1, 1], -0.3]]},
                {"i": 0, "j": 1, "terms": [[[0, 0, 0], 1.0], [[0, 0, 2], 0.7]]},
                {"i": 1, "j": 2, "terms": [[[1, 1, 0], 0.4], [[0, 0, 1], -0.8]]},
                {"i": 2, "j": 2, "value": 0.25},
            ],
            "radius": 0.5,
        },
        "grids": {"delta": [0.01, 0.1]},
        "budgets": {"points": 100},
        "thresholds": {"max_residual": [None, 1e-10], "max_det_deviation_ratio": [None, 5.0]},
    },
    "fourier-decay": {
        "kind": "fourier-decay", "seed": 0, "d": 3, "m": 2, "n": 1,
        "surface": PARABOLOID,
        "params": {"mode": "shell", "localize": {"x0": [0.1, 0.05, 0.0125], "beta": 0.5}},
        "grids": {"K": [2.0 ** k for k in range(4, 11)]},
        "budgets": {"samples": 2048},
        "thresholds": {"slope": [-1.3, -0.7]},
    },
    "equidistribute": {
        "kind": "equidistribute", "seed": 0, "d": 2, "m": 1, "n": 1,
        "surface": PARABOLA,
        # support [0.05, 0.95] keeps the density off the fold of t -> t^2 at t = 0
        "density": {"halfwidth": 0.45, "center": [0.5]},
        "testfn": {"factors": [BUMP_A, BUMP_B]},
        "basepoint": [[0.13, 0.9, 0.4], [-0.21, 1.1, 1.3]],
        "grids": {"y": Y_GRID},
        "budgets": {"n0": 64, "n_max": 1 << 20, "replicates": 8, "boot": 2000},
        "thresholds": {"ci_excludes_zero": True, "exponent": [0.0, None],
                       "end_ratio": [None, 0.25], "max_rel_stderr": [None, 0.25]},
    },
    "mixing": {
        "kind": "mixing", "seed": 0,
        "testfn": {"factors": [BUMP_A, BUMP_B]},
        "grids": {"y": PROBE_Y_GRID},
        "budgets": {"samples": 1_000_000},
        "thresholds": {"drop_ratio": [4.0, None]},
    },
    "horocycle": {
        "kind": "horocycle", "seed": 0,
        "testfn": {"factors": [BUMP_A]},
        "basepoint": [[0.0, 1.0, 0.0]],
        "params": {"c": 1.0, "centered": False},
        "grids": {"y": PROBE_Y_GRID},
        "thresholds": {"drop_ratio": [2.0, None]},
    },
}

# the diagonal-line control of the equidistribution experiment
DIAGONAL_CONTROL = {
    "kind": "equidistribute", "seed": 0, "d": 2, "m": 1, "n": 1,
    "surface": DIAGONAL,
    "density": {"halfwidth": 0.45, "center": [0.5]},
    "testfn": {"factors": [BUMP_A, BUMP_A]},
    "basepoint": [[0.0, 1.0, 0.0], [0.0, 1.0, 0.0]],
    "grids": {"y": Y_GRID},
    "budgets": {"n0": 64, "n_max": 1 << 20, "replicates": 8, "boot": 2000},
    "thresholds": {"ci_contains_zero": True},
    "output": {"stem": "equidistribute_control"},
}


def default_dict(kind: str) -> dict:
    return copy.deepcopy(DEFAULTS[kind])


def default_config(kind: str) -> ExperimentConfig:
    return ExperimentConfig.from_dict(default_dict(kind))
