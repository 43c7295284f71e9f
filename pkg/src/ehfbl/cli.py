"""Command-line entry point: ``ehfbl {bounds,moments,simulate,sweep,plot-data}``.

Exit status is 0 on success, 1 on a validation error and 2 on any parse,
runtime or numeric error.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import harness
from .exceptions import EhfblError, ValidationError


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ehfbl", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, rows=True):
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--seed", type=int, help="override config seed")
        p.add_argument("--trials", type=int, help="override Monte Carlo trial count")
        p.add_argument("--out", help="output file (default: stdout)")
        if rows:
            p.add_argument("--format", choices=("csv", "json"), default="csv")

    common(sub.add_parser("bounds", help="closed-form and exact bound tables"))
    common(sub.add_parser("moments", help="information-density moments with MC cross-check"), rows=False)
    common(sub.add_parser("simulate", help="Monte Carlo error-event rates"))
    common(sub.add_parser("sweep", help="full grid sweep to CSV/JSON"))

    pd = sub.add_parser("plot-data", help="gnuplot-style series extraction")
    src = pd.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="run a sweep from this config first")
    src.add_argument("--input", help="CSV or JSON rows written by 'sweep'")
    pd.add_argument("--x", required=True, help="x column, e.g. n_hat")
    pd.add_argument("--y", required=True, action="append", help="y column (repeatable)")
    pd.add_argument("--seed", type=int)
    pd.add_argument("--trials", type=int)
    pd.add_argument("--out")
    return ap


def _load(args, mode=None):
    raw = harness.load_raw(args.config)
    if isinstance(raw, dict):
        if mode is not None:
            raw["mode"] = mode
        if args.seed is not None:
            raw["seed"] = args.seed
        if args.trials is not None:
            raw["trials"] = args.trials
    return harness.config_from_dict(raw)


def _emit(text, out):
    if out:
        harness._write(out, text)
    else:
        sys.stdout.write(text)


def _run(args) -> None:
    if args.command == "moments":
        cfg = _load(args)
        report = harness.moments_report(cfg, args.trials)
        _emit(json.dumps(report, indent=1) + "\n", args.out)
        return
    if args.command == "plot-data":
        if args.input:
            rows = harness.read_rows(args.input)
        else:
            rows = harness.run_sweep(_load(args))
        _emit(harness.plot_data(rows, args.x, args.y), args.out)
        return
    cfg = _load(args, mode=args.command)
    rows = harness.run_sweep(cfg)
    text = harness.rows_to_csv(rows) if args.format == "csv" else harness.rows_to_json(rows)
    _emit(text, args.out)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        _run(args)
    except ValidationError as e:
        print(f"ehfbl: validation error: {e}", file=sys.stderr)
        return 1
    except (EhfblError, OSError, ArithmeticError, ValueError) as e:
        print(f"ehfbl: error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
