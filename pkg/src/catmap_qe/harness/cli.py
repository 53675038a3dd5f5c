"""Command-line entry point: ``catmap-qe <experiment> --config FILE --out DIR``."""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .. import acceptance
from . import io
from .config import EXPERIMENTS, ConfigError, load_config, validate
from .runner import RunError, run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="catmap-qe", description="Log-scale quantum ergodicity experiments for quantized cat maps.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", required=True, help="flat key = value config file")
        p.add_argument("--out", help="output directory (overrides out_dir)")
        p.add_argument("--keep-going", action="store_true", help="record failed units and continue")
    p = sub.add_parser("accept", help="run the acceptance suite")
    p.add_argument("--config", help="optional config file (validated; the suite uses its fixed settings)")
    p.add_argument("--out", default="acceptance_out", help="output directory")
    p.add_argument("--criteria", help="comma-separated criterion ids (default: all)")
    p.add_argument("--no-determinism", action="store_true", help="skip the rerun that checks criterion 10")
    return parser


def _accept(args) -> int:
    if args.config:
        validate(load_config(args.config))
    ids = [int(c) for c in args.criteria.split(",")] if args.criteria else None
    results = acceptance.run_suite(ids, determinism=not args.no_determinism)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.emit_csv(out / "acceptance.csv", "acceptance", [(r.id, r.name, r.ok, r.limit_s) for r in results])
    io.emit_summary(out / "summary.json", {
        "experiment": "accept",
        "verdicts": {str(r.id): r.ok for r in results},
        "details": {str(r.id): r.details for r in results},
    })
    return 0 if all(r.ok for r in results) else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "accept":
            return _accept(args)
        cfg = load_config(args.config)
        if cfg.experiment != args.command:
            cfg = dataclasses.replace(cfg, experiment=args.command)
        summary = run(cfg, out_dir=args.out, keep_going=args.keep_going)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except RunError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1
    print(f"{summary['experiment']}: {summary['rows']} rows written to {args.out or cfg.out_dir}")
    return 1 if summary["errors"] else 0


if __name__ == "__main__":
    sys.exit(main())
