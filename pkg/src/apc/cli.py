"""Command-line entry point: ``apc plan|sweep|bench``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .bench import (
    LATENCY_COLUMNS,
    bench_latency,
    columns_for,
    rows_to_csv,
    rows_to_json,
    run_sweep,
    spec_from_dict,
    write_outputs,
)
from .controller import request_from_dict, response_to_dict
from .errors import DomainError, Issue, ValidationError

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_VALIDATION = 2

log = logging.getLogger("apc")


def _load_json(path: str) -> dict:
    if path == "-":
        return json.load(sys.stdin)
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError([Issue("JSON", path, f"invalid JSON ({exc})")]) from exc


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", newline="") as fh:
            fh.write(text)
        log.info("wrote %s", out)
    else:
        sys.stdout.write(text)


def _overrides(args) -> dict:
    out = {}
    if args.frontier_width is not None:
        out["frontier_width"] = None if args.frontier_width <= 0 else args.frontier_width
    if args.rmax is not None:
        out["r_max"] = args.rmax
    return out


def cmd_plan(args) -> int:
    resolved = request_from_dict(_load_json(args.request), _overrides(args))
    resp = resolved.run()
    payload = response_to_dict(resp)
    if args.format == "json":
        _emit(json.dumps(payload, indent=2) + "\n", args.out)
    else:
        rows = []
        for ch, det in zip(payload["plan"]["per_link"], payload["per_link_details"]):
            rows.append({**ch, **{k: det[k] for k in ("f_out", "p_succ", "c_pairs", "time")}})
        cols = ["link_index", "rounds", "protocol", "f_out", "p_succ", "c_pairs", "time"]
        _emit(rows_to_csv(rows, cols), args.out)
    plan = payload["plan"]
    log.info("feasible=%s f_end=%.6f goodput=%.6g", plan["feasible"], plan["f_end"], plan["goodput"])
    return EXIT_OK


def cmd_sweep(args) -> int:
    data = _load_json(args.spec)
    if args.seed is not None:
        data["seed"] = args.seed
    fixed = dict(data.get("fixed_params", {}))
    fixed.update(_overrides(args))
    data["fixed_params"] = fixed
    out = args.out or data.get("output_path")
    data["output_path"] = None
    spec = spec_from_dict(data)
    rows = run_sweep(spec)
    if out:
        write_outputs(spec, rows, out, args.format)
        log.info("wrote %d rows to %s", len(rows), out)
    else:
        cols = columns_for(spec)
        sys.stdout.write(rows_to_csv(rows, cols) if args.format == "csv" else rows_to_json(rows, cols))
    return EXIT_OK


def cmd_bench(args) -> int:
    lengths = [int(x) for x in args.lengths.split(",")]
    if any(n < 1 for n in lengths) or args.repeats < 1:
        raise ValidationError([Issue("PARAM_RANGE", "bench", "lengths and repeats must be >= 1")])
    width = args.frontier_width if args.frontier_width is not None else 64
    fixed = {"r_max": args.rmax} if args.rmax is not None else {}
    rows = bench_latency(lengths, args.repeats, None if width <= 0 else width, fixed)
    text = rows_to_csv(rows, LATENCY_COLUMNS) if args.format == "csv" else rows_to_json(rows, LATENCY_COLUMNS)
    _emit(text, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default=None,
                        help="table format (plan defaults to json, others to csv)")
    common.add_argument("--frontier-width", type=int, default=None,
                        help="candidates kept per hop; 0 keeps every non-dominated one")
    common.add_argument("--rmax", type=int, default=None, help="maximum rounds per hop")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="apc", description="Adaptive purification planner")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", parents=[common], help="plan one request from a JSON file")
    p.add_argument("request", help="request JSON path, or - for stdin")
    p.set_defaults(func=cmd_plan, default_format="json")

    s = sub.add_parser("sweep", parents=[common], help="run a parameter sweep from a spec JSON")
    s.add_argument("spec", help="sweep spec JSON path, or - for stdin")
    s.set_defaults(func=cmd_sweep, default_format="csv")

    b = sub.add_parser("bench", parents=[common], help="planning latency versus chain length")
    b.add_argument("--lengths", default="1,10,100,1000")
    b.add_argument("--repeats", type=int, default=3)
    b.set_defaults(func=cmd_bench, default_format="csv")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.format = args.format or args.default_format
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except ValidationError as exc:
        for issue in exc.issues:
            print(f"error: {issue}", file=sys.stderr)
        return EXIT_VALIDATION
    except (DomainError, OSError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
