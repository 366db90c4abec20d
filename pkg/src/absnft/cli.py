"""``absnft`` command line.

Exit codes: 0 success, 1 bad config or I/O error, 2 an invariant was
falsified on the given instance (the report, with witness, is still written).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional, Sequence

from absnft import scenario

log = logging.getLogger("absnft")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_FALSIFIED = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="absnft", description="Solve, simulate and verify repurchase scenarios.")
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in scenario.KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} scenario")
        p.add_argument("--config", required=True, help="scenario JSON file")
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--seed", type=int, default=0, help="seed for sampled sweeps (default 0)")
        p.add_argument("--bound", type=int, help="bid bound for exhaustive oracle scans")
        p.add_argument("--format", choices=("json", "csv"), help="csv for range sweeps; default json")
        if kind == "verify":
            p.add_argument("--grid", help="named verification grid, overrides the config target")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _write(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def run(config_path: str, output_path: Optional[str] = None, *, seed: int = 0, bound: Optional[int] = None,
        fmt: Optional[str] = None, grid: Optional[str] = None, command: Optional[str] = None) -> int:
    try:
        cfg = scenario.load_config(config_path)
        if command is not None and command != cfg["kind"]:
            raise scenario.MalformedConfig(f"config kind {cfg['kind']!r} does not match subcommand {command!r}")
        if seed < 0 or seed >= 2 ** 64:
            raise scenario.MalformedConfig("seed must fit in an unsigned 64-bit integer")
        if bound is not None and bound < 0:
            raise scenario.MalformedConfig("bound must be >= 0")
        sweeping = "ranges" in cfg
        if fmt == "csv" or (fmt is None and sweeping):
            text = scenario.sweep_csv(cfg, seed)
        else:
            if sweeping:
                header, rows = scenario.sweep_rows(cfg, seed)
                report = scenario.build_report(cfg, {"columns": header, "rows": rows}, seed)
            else:
                report = scenario.run_scenario(cfg, seed, bound, grid)
            text = scenario.dumps_report(report)
        _write(text, output_path)
        return EXIT_OK
    except scenario.VerificationFailed as exc:
        try:
            _write(scenario.dumps_report(exc.report), output_path)
        except OSError as io_exc:
            log.error("cannot write report: %s", io_exc)
            return EXIT_INVALID
        log.error("verification failed; witness written to report")
        return EXIT_FALSIFIED
    except scenario.MalformedConfig as exc:
        log.error("invalid config: %s", exc)
        return EXIT_INVALID
    except OSError as exc:
        log.error("I/O failure: %s", exc)
        return EXIT_INVALID


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return run(args.config, args.out, seed=args.seed, bound=args.bound, fmt=args.format,
               grid=getattr(args, "grid", None), command=args.command)


if __name__ == "__main__":
    sys.exit(main())
