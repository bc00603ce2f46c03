"""Command-line front end: `roughlab <command> [--seed S] [--mesh-min K]
[--mesh-max K] [--samples M] [--out FILE] [--format csv|json]
[--config FILE.json]` plus per-command options.

Tables print to stdout; `--out` additionally writes CSV or JSON.  The exit
code is nonzero when any assertion-style row fails or an input is rejected.
"""

from __future__ import annotations

import argparse
import json
import sys

from .lab import (
    ExperimentConfig,
    chen_concat_check,
    drift_equiv_table,
    euler_rate_table,
    mcshane_table,
    optimality_table,
    signature_table,
    sussmann_table,
)
from .paths import read_path_csv


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="base RNG seed")
    parser.add_argument("--mesh-min", type=int, default=None, help="smallest mesh exponent k (mesh 2^-k)")
    parser.add_argument("--mesh-max", type=int, default=None, help="largest mesh exponent")
    parser.add_argument("--samples", type=int, default=None, help="Monte-Carlo sample count")
    parser.add_argument("--out", default=None, help="write the table to this file")
    parser.add_argument("--format", dest="fmt", choices=("csv", "json"), default=None, help="output format")
    parser.add_argument("--config", default=None, help="JSON config file; flags override its entries")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="roughlab", description="rough-path numerics experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("signature", help="print the log-signature of a path CSV")
    _common(p)
    p.add_argument("--csv", required=True, help="path CSV file (header t,x1,...,xd)")
    p.add_argument("--depth", type=int, default=2, help="truncation depth N")
    p.add_argument("--from", dest="t_from", type=float, default=None, help="interval start")
    p.add_argument("--to", dest="t_to", type=float, default=None, help="interval end")

    p = sub.add_parser("sussmann", help="chord-plus-loop refinement table")
    _common(p)
    p.add_argument("--driver", choices=("smooth", "brownian"), default="smooth")
    p.add_argument("--lam", type=float, default=0.5, help="perturbation weight")
    p.add_argument("--gamma", type=float, default=None, help="Holder exponent for distances")

    p = sub.add_parser("mcshane", help="swap-interpolation drift Monte-Carlo table")
    _common(p)
    p.add_argument("--phi", choices=("parabola", "parabola_swapped", "diagonal"), default="parabola")
    p.add_argument("--grid-exp", type=int, default=10, help="dissection has 2^k intervals")
    p.add_argument("--phi-segments", type=int, default=256)

    p = sub.add_parser("drift-equiv", help="perturbed driver vs bracket-drift classical solve")
    _common(p)
    p.add_argument("--case", choices=("default", "zero_v", "zero_x"), default="default")
    p.add_argument("--lam", type=float, default=0.4)

    p = sub.add_parser("optimality", help="sharpness of the growth estimates")
    _common(p)
    p.add_argument("--case", type=int, choices=(1, 2), default=1)
    p.add_argument("--p", dest="p_level", type=int, default=2)
    p.add_argument("--lams", default="0.5,1,2", help="comma-separated weights")

    p = sub.add_parser("euler-rate", help="empirical order of the step-N scheme")
    _common(p)
    return parser


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fp:
            cfg = json.load(fp)
    except (OSError, json.JSONDecodeError) as exc:
        raise SystemExit(f"roughlab: bad config file {path}: {exc}")
    if not isinstance(cfg, dict):
        raise SystemExit(f"roughlab: config file {path} must hold a JSON object")
    return cfg


def _make_config(args, defaults: dict) -> ExperimentConfig:
    file_cfg = _load_config(args.config)
    merged = dict(defaults)
    merged.update({k: v for k, v in file_cfg.items() if k in ExperimentConfig.__dataclass_fields__})
    extra = dict(merged.pop("extra", {}))
    extra.update(file_cfg.get("extra", {}))
    for flag, key in (("seed", "seed"), ("mesh_min", "mesh_min"), ("mesh_max", "mesh_max"),
                      ("samples", "samples"), ("out", "out"), ("fmt", "fmt")):
        value = getattr(args, flag, None)
        if value is not None:
            merged[key] = value
    return ExperimentConfig(extra=extra, **merged)


def _emit(table, cfg: ExperimentConfig) -> int:
    print(table.render())
    if cfg.out:
        table.write(cfg.out, cfg.fmt)
        print(f"wrote {cfg.fmt} to {cfg.out}")
    if not table.passed:
        print("FAIL: at least one check failed", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "signature":
            try:
                path = read_path_csv(args.csv)
            except (OSError, ValueError) as exc:
                print(f"roughlab: cannot read path CSV: {exc}", file=sys.stderr)
                return 2
            cfg = _make_config(args, {"name": "signature"})
            table = signature_table(path, args.depth, args.t_from, args.t_to)
            resid, ok = chen_concat_check(path, args.depth)
            code = _emit(table, cfg)
            print(f"chen concat check: residual={resid:.3e} {'PASS' if ok else 'FAIL'}")
            return code if ok else 1

        if args.command == "sussmann":
            extra = {"driver": args.driver, "lam": args.lam}
            if args.gamma is not None:
                extra["gamma"] = args.gamma
            cfg = _make_config(args, {"name": "sussmann", "mesh_min": 3, "mesh_max": 7, "extra": extra})
            return _emit(sussmann_table(cfg), cfg)

        if args.command == "mcshane":
            extra = {"phi": args.phi, "grid_exp": args.grid_exp, "phi_segments": args.phi_segments}
            cfg = _make_config(args, {"name": "mcshane", "extra": extra})
            return _emit(mcshane_table(cfg), cfg)

        if args.command == "drift-equiv":
            extra = {"case": args.case, "lam": args.lam}
            cfg = _make_config(args, {"name": "drift_equiv", "mesh_min": 4, "mesh_max": 10, "extra": extra})
            return _emit(drift_equiv_table(cfg), cfg)

        if args.command == "optimality":
            cfg = _make_config(args, {"name": "optimality"})
            lams = tuple(float(s) for s in args.lams.split(","))
            return _emit(optimality_table(args.case, args.p_level, lams, cfg.T), cfg)

        if args.command == "euler-rate":
            cfg = _make_config(args, {"name": "euler_rate", "mesh_min": 3, "mesh_max": 7})
            return _emit(euler_rate_table(cfg), cfg)
    except ValueError as exc:
        print(f"roughlab: {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
