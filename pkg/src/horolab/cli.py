"""Command line entry point: ``horolab <subcommand> [--config PATH] ...``.

Every experiment subcommand writes ``<stem>.csv`` (the data table) and
``<stem>.json`` (resolved config, config hash, summary, threshold checks)
into ``--out``.  Exit status: 0 on success, 2 when a declared threshold
fails, 1 on any error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import time

from horolab import __version__
from horolab import config as _config
from horolab.errors import HorolabError

log = logging.getLogger("horolab")

EXIT_OK, EXIT_ERROR, EXIT_THRESHOLD = 0, 1, 2


def format_value(v) -> str:
    """Stable text form: shortest round-trip repr for floats."""
    if isinstance(v, bool):
        return str(int(v))
    if hasattr(v, "item"):
        v = v.item()
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item"):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def write_outputs(out_dir: str, stem: str, columns, rows, payload: dict):
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{stem}.csv")
    json_path = os.path.join(out_dir, f"{stem}.json")
    with open(csv_path, "w", encoding="utf8", newline="") as fh:
        fh.write(csv_text(columns, rows))
    with open(json_path, "w", encoding="utf8") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, json_path


def resolve_config(args) -> _config.ExperimentConfig:
    from horolab.defaults import default_config

    cfg = _config.load(args.config) if args.config else default_config(args.command)
    if cfg.kind != args.command:
        raise _config.SchemaError(f"field 'kind': config is for '{cfg.kind}' but the "
                                  f"subcommand is '{args.command}'")
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.budget_scale is not None:
        cfg = cfg.with_budget_scale(args.budget_scale)
    return cfg


def run_experiment(args) -> int:
    from horolab.experiments import run

    cfg = resolve_config(args)
    t0 = time.perf_counter()
    res = run(cfg)
    elapsed = time.perf_counter() - t0
    out_dir = args.out or cfg.output.get("dir", "out")
    stem = cfg.output.get("stem", cfg.kind)
    payload = {"version": __version__, "kind": cfg.kind, "config": cfg.to_dict(),
               "config_hash": cfg.hash(), "summary": res.summary,
               "thresholds": cfg.thresholds, "checks": res.checks, "passed": res.passed,
               "elapsed_seconds": elapsed}
    csv_path, json_path = write_outputs(out_dir, stem, res.columns, res.rows, payload)
    log.info("wrote %s and %s", csv_path, json_path)
    for k, v in res.summary.items():
        print(f"{k}: {format_value(v) if v is not None else 'none'}")
    for k, ok in res.checks.items():
        print(f"threshold {k}: {'pass' if ok else 'FAIL'}")
    return EXIT_OK if res.passed else EXIT_THRESHOLD


def run_acceptance(args) -> int:
    from horolab.acceptance import CRITERIA, run_criteria

    only = None
    if args.only:
        only = sorted({int(x) for x in args.only.split(",")})
        bad = [c for c in only if c not in CRITERIA]
        if bad:
            raise _config.SchemaError(f"unknown criterion number(s): {bad}")
    seed = 0 if args.seed is None else args.seed
    results = run_criteria(only, seed=seed, budget_scale=args.budget_scale or 1.0,
                           out_dir=args.out)
    rows = [(r.number, r.name, int(r.passed), r.value, r.detail) for r in results]
    payload = {"version": __version__, "seed": seed, "results": [r.as_dict() for r in results],
               "passed": all(r.passed for r in results)}
    out_dir = args.out or "out"
    write_outputs(out_dir, "acceptance", ("criterion", "name", "passed", "value", "detail"),
                  rows, payload)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_THRESHOLD


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="horolab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"horolab {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)
    for kind in _config.KINDS + ("acceptance",):
        sp = sub.add_parser(kind, help=f"run the {kind} experiment" if kind != "acceptance"
                            else "run the acceptance suite")
        if kind != "acceptance":
            sp.add_argument("--config", metavar="PATH",
                            help="YAML experiment config (default: built-in config)")
        else:
            sp.add_argument("--only", metavar="LIST", help="comma-separated criterion numbers")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--out", metavar="DIR", default=None, help="output directory")
        sp.add_argument("--budget-scale", type=float, default=None, metavar="FLOAT",
                        help="multiply sample budgets by this factor")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "acceptance":
            return run_acceptance(args)
        return run_experiment(args)
    except HorolabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
