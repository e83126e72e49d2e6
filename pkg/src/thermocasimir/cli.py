"""Command-line entry point.

Verbs: run <config>, verify <config>, sweep <config> --d-list ..., zeta3.
Exit codes: 0 ok, 2 config error, 3 solver error, 4 certification failure.
"""
from __future__ import annotations

import argparse
import json
import sys

from .config import load_config
from .errors import ConfigError, SolverError
from .force import zeta3_quadrature, zeta3_series_oracle
from .pipeline import run_pipeline, verify_suite, write_report, write_sweep_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_CERTIFICATION = 4


def _apply_overrides(config_dict, overrides_json):
    if not overrides_json:
        return config_dict
    try:
        overrides = json.loads(overrides_json)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--tol-overrides is not valid JSON: {exc}") from exc
    if not isinstance(overrides, dict):
        raise ConfigError("--tol-overrides must be a JSON object")
    config_dict.setdefault("numerics", {}).update(overrides)
    return config_dict


def _load(path, args):
    with open(path) as fh:
        raw = json.load(fh)
    if getattr(args, "seed", None) is not None:
        raw["seed"] = args.seed
    if getattr(args, "out_dir", None) is not None:
        raw.setdefault("output", {})["dir"] = args.out_dir
    raw = _apply_overrides(raw, getattr(args, "tol_overrides", None))
    return load_config(raw)


def _cmd_run(args) -> int:
    config = _load(args.config, args)
    report = run_pipeline(config)
    path = write_report(report, config.out_dir)
    write_sweep_csv(report, config.out_dir)
    ok = report["report"]["certified_all"]
    for row in report["report"]["results"]:
        tag = "certified" if row["certified"] else "NOT CERTIFIED"
        print(f"d = {row['d']:10.4g}   f = {row['f_assembled']:+.6e}   "
              f"f_universal = {row['f_leading']:+.6e}   [{tag}]")
    print(f"report written to {path}")
    return EXIT_OK if ok else EXIT_CERTIFICATION


def _cmd_sweep(args) -> int:
    config = _load(args.config, args)
    if args.d_list:
        config.d_values = [float(d) for d in args.d_list]
        if any(d <= 0 for d in config.d_values):
            raise ConfigError("--d-list values must be positive")
    report = run_pipeline(config)
    path = write_sweep_csv(report, config.out_dir)
    fit = report["report"]["sweep_fit"]
    print(f"sweep table written to {path}")
    print(f"log-log slope of f(d): {fit['slope']:+.4f} "
          f"(stderr {fit['stderr']:.2g})")
    return EXIT_OK if report["report"]["certified_all"] else EXIT_CERTIFICATION


def _cmd_verify(args) -> int:
    config = _load(args.config, args)
    table = verify_suite(config)
    width = max(len(c["name"]) for c in table["checks"])
    for c in table["checks"]:
        status = "PASS" if c["passed"] else (
            "XFAIL" if c["expected_fail"] else "FAIL")
        print(f"{c['name']:<{width}}  {status:<5}  value={c['value']}  "
              f"tol={c['tolerance']}")
    if args.json_out:
        with open(args.json_out, "w") as fh:
            json.dump(table, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK if table["all_passed"] else EXIT_CERTIFICATION


def _cmd_zeta3(_args) -> int:
    quad_val = zeta3_quadrature()
    series_val = zeta3_series_oracle()
    print(f"quadrature  : {quad_val:.15f}")
    print(f"series      : {series_val:.15f}")
    print(f"|difference|: {abs(quad_val - series_val):.3e}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="thermocasimir",
        description="Thermal Casimir force between conducting slabs from the "
                    "microscopic loop representation.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="path to the JSON run configuration")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out-dir", default=None)
        p.add_argument("--tol-overrides", default=None,
                       help='JSON object merged into numerics, e.g. '
                            '\'{"residual_tolerance": 1e-3}\'')

    p_run = sub.add_parser("run", help="full pipeline for the configured sweep")
    common(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="force sweep over separations")
    common(p_sweep)
    p_sweep.add_argument("--d-list", nargs="*", default=None,
                         help="override the sweep separations")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_verify = sub.add_parser("verify", help="run every invariant check")
    common(p_verify)
    p_verify.add_argument("--json-out", default=None,
                          help="also write the verdict table as JSON")
    p_verify.set_defaults(func=_cmd_verify)

    p_zeta = sub.add_parser("zeta3", help="print the force-amplitude quadrature "
                                          "and its series oracle")
    p_zeta.set_defaults(func=_cmd_zeta3)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver error: {exc} "
              f"(condition number {exc.condition_number})", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    raise SystemExit(main())
