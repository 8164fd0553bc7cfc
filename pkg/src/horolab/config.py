"""Experiment configuration: YAML schema, validation and canonical hashing.

A config is a single YAML mapping.  Top-level keys:

``kind``        one of :data:`KINDS`
``seed``        64-bit integer, root of every random stream
``d, m, n``     dimensions with ``d = m + n`` (optional for the single-factor probes)
``surface``     graph functions ``w_r``: a list (one entry per ``r``) of
                ``[[exponent, ...], coefficient]`` term lists
``density``     ``halfwidth``, ``center``, ``sharpness`` of the parameter density
``grids``       named nonempty number lists (``t``, ``delta``, ``K``, ``y``)
``testfn``      ``factors``: list of ``{x, y, theta, radius, amplitude, sharpness}``
``basepoint``   list of Iwasawa triples ``[x, y, theta]``, one per factor
``params``      kind-specific parameters (see :data:`REQUIRED`)
``budgets``     sample budgets; scaled by ``--budget-scale``
``thresholds``  ``name: [lo, hi]`` (either end may be null) or ``name: bool``,
                checked against the summary quantities of the run
``output``      ``dir`` and ``stem`` of the written files
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields

import yaml

from horolab.errors import SchemaError

KINDS = ("certify-curvature", "sublevel", "diagonalize-demo", "fourier-decay",
         "equidistribute", "mixing", "horocycle")

# required (section, key) pairs per kind; "surface" and "density" are whole sections
REQUIRED = {
    "certify-curvature": [("surface", None), ("grids", "t"), ("params", "delta")],
    "sublevel": [("grids", "delta"), ("params", "u")],
    "diagonalize-demo": [("grids", "delta"), ("params", "lams"), ("params", "phi")],
    "fourier-decay": [("surface", None), ("grids", "K"), ("params", "mode")],
    "equidistribute": [("surface", None), ("grids", "y"), ("testfn", "factors"),
                       ("basepoint", None)],
    "mixing": [("grids", "y"), ("testfn", "factors")],
    "horocycle": [("grids", "y"), ("testfn", "factors"), ("basepoint", None), ("params", "c")],
}

# sample budgets that --budget-scale multiplies
SCALED_BUDGETS = ("samples", "n0", "n_max", "points")

_FACTOR_KEYS = {"x", "y", "theta", "radius", "amplitude", "sharpness"}
_DENSITY_KEYS = {"halfwidth", "center", "sharpness"}


@dataclass
class ExperimentConfig:
    kind: str
    seed: int = 0
    d: int | None = None
    m: int | None = None
    n: int | None = None
    surface: list | None = None
    density: dict = field(default_factory=dict)
    grids: dict = field(default_factory=dict)
    testfn: dict = field(default_factory=dict)
    basepoint: list | None = None
    params: dict = field(default_factory=dict)
    budgets: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {k: copy.deepcopy(v) for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, data: dict, lines: dict | None = None) -> "ExperimentConfig":
        validate(data, lines)
        names = {f.name for f in fields(cls)}
        return cls(**{k: copy.deepcopy(v) for k, v in data.items() if k in names})

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None)

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf8")).hexdigest()

    def with_seed(self, seed: int) -> "ExperimentConfig":
        data = self.to_dict()
        data["seed"] = int(seed)
        return ExperimentConfig.from_dict(data)

    def with_budget_scale(self, factor: float) -> "ExperimentConfig":
        """Multiply every integer sample budget by ``factor`` (at least 1)."""
        if not factor > 0:
            raise SchemaError("budget scale must be positive")
        data = self.to_dict()
        for key in SCALED_BUDGETS:
            if key in data.get("budgets", {}):
                data["budgets"][key] = max(1, int(round(data["budgets"][key] * factor)))
        return ExperimentConfig.from_dict(data)

    def budget(self, key: str, default):
        return self.budgets.get(key, default)


# --------------------------------------------------------------------------
# loading with line diagnostics

def _line_map(node, path=(), out=None) -> dict:
    """Map dotted field paths to 1-based source lines of a composed YAML tree."""
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            p = path + (str(k.value),)
            out[".".join(p)] = k.start_mark.line + 1
            _line_map(v, p, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            p = path + (str(i),)
            out[".".join(p)] = v.start_mark.line + 1
            _line_map(v, p, out)
    return out


def loads(text: str) -> ExperimentConfig:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SchemaError(f"invalid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaError("config must be a YAML mapping")
    return ExperimentConfig.from_dict(data, _line_map(node))


def load(path) -> ExperimentConfig:
    with open(path, encoding="utf8") as fh:
        return loads(fh.read())


def dump(cfg: ExperimentConfig, path) -> None:
    with open(path, "w", encoding="utf8") as fh:
        fh.write(cfg.to_yaml())


# --------------------------------------------------------------------------
# validation

class _Checker:
    def __init__(self, lines):
        self.lines = lines or {}

    def fail(self, path: str, msg: str):
        line = self.lines.get(path)
        if line is None:
            # fall back to the closest enclosing field that has a line
            parts = path.split(".")
            while parts and line is None:
                parts.pop()
                line = self.lines.get(".".join(parts))
        where = f"field '{path}'" + (f" (line {line})" if line else "")
        raise SchemaError(f"{where}: {msg}")

    def number(self, path, v, positive=False):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            self.fail(path, f"expected a finite number, got {v!r}")
        if positive and not v > 0:
            self.fail(path, "must be positive")
        return float(v)

    def integer(self, path, v, minimum=None):
        if isinstance(v, bool) or not isinstance(v, int):
            self.fail(path, f"expected an integer, got {v!r}")
        if minimum is not None and v < minimum:
            self.fail(path, f"must be >= {minimum}")
        return v

    def numbers(self, path, v):
        if not isinstance(v, list) or not v:
            self.fail(path, "expected a nonempty list of numbers")
        for i, x in enumerate(v):
            self.number(f"{path}.{i}", x)

    def mapping(self, path, v):
        if not isinstance(v, dict):
            self.fail(path, "expected a mapping")


def _check_terms(ck: _Checker, path: str, row, m: int | None):
    if not isinstance(row, list):
        ck.fail(path, "expected a list of [exponents, coefficient] terms")
    for i, term in enumerate(row):
        p = f"{path}.{i}"
        if not (isinstance(term, list) and len(term) == 2 and isinstance(term[0], list)):
            ck.fail(p, "a term is [[e_1, ..., e_m], coefficient]")
        if m is not None and len(term[0]) != m:
            ck.fail(p, f"exponent list must have m = {m} entries")
        for j, e in enumerate(term[0]):
            ck.integer(f"{p}.0.{j}", e, 0)
        ck.number(f"{p}.1", term[1])


def validate(data: dict, lines: dict | None = None) -> None:
    """Raise :class:`SchemaError` naming the offending field (and line) on failure."""
    ck = _Checker(lines)
    known = {f.name for f in fields(ExperimentConfig)}
    for key in data:
        if key not in known:
            ck.fail(str(key), f"unknown top-level key (allowed: {', '.join(sorted(known))})")
    kind = data.get("kind")
    if kind not in KINDS:
        ck.fail("kind", f"must be one of {', '.join(KINDS)}, got {kind!r}")
    ck.integer("seed", data.get("seed", 0), 0)
    if data.get("seed", 0) >= 1 << 64:
        ck.fail("seed", "must fit in 64 bits")
    dims = {k: data.get(k) for k in ("d", "m", "n")}
    for k, v in dims.items():
        if v is not None:
            ck.integer(k, v, 1)
    if None not in dims.values() and dims["d"] != dims["m"] + dims["n"]:
        ck.fail("d", f"d = {dims['d']} but m + n = {dims['m'] + dims['n']}")
    for section in ("density", "grids", "testfn", "params", "budgets", "thresholds", "output"):
        if section in data:
            ck.mapping(section, data[section])

    for section, key in REQUIRED[kind]:
        if key is None:
            if data.get(section) in (None, [], {}):
                ck.fail(section, f"required for kind '{kind}'")
        elif key not in data.get(section, {}):
            ck.fail(f"{section}.{key}", f"required for kind '{kind}'")

    m, n = dims["m"], dims["n"]
    if data.get("surface") is not None:
        if m is None or n is None:
            ck.fail("m", "m and n are required when a surface is given")
        surf = data["surface"]
        if not isinstance(surf, list) or len(surf) != n:
            ck.fail("surface", f"expected a list of n = {n} graph functions")
        for r, row in enumerate(surf):
            _check_terms(ck, f"surface.{r}", row, m)
    dens = data.get("density", {})
    for key in dens:
        if key not in _DENSITY_KEYS:
            ck.fail(f"density.{key}", f"unknown key (allowed: {', '.join(sorted(_DENSITY_KEYS))})")
    if "halfwidth" in dens:
        ck.number("density.halfwidth", dens["halfwidth"], positive=True)
    if "center" in dens:
        ck.numbers("density.center", dens["center"])
        if m is not None and len(dens["center"]) != m:
            ck.fail("density.center", f"expected m = {m} entries")
    for name, grid in data.get("grids", {}).items():
        ck.numbers(f"grids.{name}", grid)
    for name in ("delta", "K", "y"):
        for i, v in enumerate(data.get("grids", {}).get(name, [])):
            ck.number(f"grids.{name}.{i}", v, positive=True)
    factors = data.get("testfn", {}).get("factors")
    if factors is not None:
        if not isinstance(factors, list) or not factors:
            ck.fail("testfn.factors", "expected a nonempty list of factors")
        for i, fac in enumerate(factors):
            p = f"testfn.factors.{i}"
            if fac == "one":
                continue
            ck.mapping(p, fac)
            for key in fac:
                if key not in _FACTOR_KEYS:
                    ck.fail(f"{p}.{key}", f"unknown key (allowed: {', '.join(sorted(_FACTOR_KEYS))})")
            for key in ("x", "y"):
                if key not in fac:
                    ck.fail(f"{p}.{key}", "required")
            ck.number(f"{p}.y", fac["y"], positive=True)
            if "radius" in fac:
                ck.number(f"{p}.radius", fac["radius"], positive=True)
        if kind == "equidistribute" and data.get("d") is not None and len(factors) != data["d"]:
            ck.fail("testfn.factors", f"expected d = {data['d']} factors")
        if kind == "mixing" and len(factors) != 2:
            ck.fail("testfn.factors", "mixing takes exactly two factors [f1, f2]")
        if kind == "horocycle" and len(factors) != 1:
            ck.fail("testfn.factors", "horocycle takes exactly one factor")
    bp = data.get("basepoint")
    if bp is not None:
        if not isinstance(bp, list) or not bp:
            ck.fail("basepoint", "expected a list of [x, y, theta] triples")
        for i, trip in enumerate(bp):
            if not isinstance(trip, list) or len(trip) != 3:
                ck.fail(f"basepoint.{i}", "expected [x, y, theta]")
            ck.numbers(f"basepoint.{i}", trip)
            ck.number(f"basepoint.{i}.1", trip[1], positive=True)
        if kind == "equidistribute" and data.get("d") is not None and len(bp) != data["d"]:
            ck.fail("basepoint", f"expected d = {data['d']} triples")
    for key, v in data.get("budgets", {}).items():
        if key in SCALED_BUDGETS or key in ("replicates", "boot", "n_r", "n_polar", "n_azimuth"):
            ck.integer(f"budgets.{key}", v, 1)
    for key, v in data.get("thresholds", {}).items():
        p = f"thresholds.{key}"
        if isinstance(v, bool):
            continue
        if not (isinstance(v, list) and len(v) == 2):
            ck.fail(p, "expected [lo, hi] (null for an open end) or a boolean")
        for i, b in enumerate(v):
            if b is not None:
                ck.number(f"{p}.{i}", b)
    if kind == "sublevel":
        u = data["params"]["u"]
        if m is None:
            ck.fail("m", "m (number of variables of u) is required")
        _check_terms(ck, "params.u", u, m)
    if kind == "certify-curvature":
        ck.number("params.delta", data["params"]["delta"], positive=True)
        for i, v in enumerate(data["grids"]["t"]):
            if not -1 < v < 1:
                ck.fail(f"grids.t.{i}", "grid values must lie in (-1, 1)")
    if kind == "fourier-decay":
        mode = data["params"]["mode"]
        if mode not in ("shell", "stationary"):
            ck.fail("params.mode", "must be 'shell' or 'stationary'")
        if mode == "stationary" and "direction" not in data["params"]:
            ck.fail("params.direction", "required for mode 'stationary'")
    if kind == "diagonalize-demo":
        lams = data["params"]["lams"]
        ck.numbers("params.lams", lams)
        phi = data["params"]["phi"]
        if not isinstance(phi, list):
            ck.fail("params.phi", "expected a list of {i, j, value | terms} entries")
        for k, ent in enumerate(phi):
            p = f"params.phi.{k}"
            ck.mapping(p, ent)
            for key in ("i", "j"):
                if key not in ent:
                    ck.fail(f"{p}.{key}", "required")
                ck.integer(f"{p}.{key}", ent[key], 0)
                if ent[key] >= len(lams):
                    ck.fail(f"{p}.{key}", f"index out of range for {len(lams)} eigenvalues")
            if ent["i"] > ent["j"]:
                ck.fail(p, "entries must have i <= j")
            if ("value" in ent) == ("terms" in ent):
                ck.fail(p, "give exactly one of 'value' or 'terms'")
            if "value" in ent:
                ck.number(f"{p}.value", ent["value"])
            else:
                _check_terms(ck, f"{p}.terms", ent["terms"], len(lams))
    if kind == "horocycle":
        ck.number("params.c", data["params"]["c"])
