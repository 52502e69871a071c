"""Command-line experiment runner.

    ccswitch run <scenario-file> [--out-dir DIR] [--seed N] [--mode MODE]
    ccswitch bench [--records N] [--capacity N]
    ccswitch compare <report-dir> <report-dir> ... [--out-dir DIR]

Verbosity comes from the CCSWITCH_VERBOSITY environment variable
(quiet, info, debug; default info).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .harness import compare_runs, format_bench, run_bench, run_scenario
from .scenario import Mode, ScenarioError


def _setup_logging() -> None:
    level = {"quiet": logging.ERROR, "info": logging.INFO,
             "debug": logging.DEBUG}.get(
        os.environ.get("CCSWITCH_VERBOSITY", "info").lower(), logging.INFO)
    logging.basicConfig(level=level, format="%(levelname)s %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    parser = argparse.ArgumentParser(
        prog="ccswitch",
        description="Run congestion-control switching experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario file")
    p_run.add_argument("scenario")
    p_run.add_argument("--out-dir", default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--mode", choices=[m.value for m in Mode], default=None)

    p_bench = sub.add_parser("bench", help="pipe and selector micro-benchmarks")
    p_bench.add_argument("--records", type=int, default=1_000_000)
    p_bench.add_argument("--capacity", type=int, default=1024)

    p_cmp = sub.add_parser("compare", help="compare report directories")
    p_cmp.add_argument("reports", nargs="+")
    p_cmp.add_argument("--out-dir", default=None)

    args = parser.parse_args(argv)

    if args.command == "run":
        try:
            report, failures = run_scenario(
                args.scenario, out_dir=args.out_dir, seed=args.seed,
                mode=args.mode)
        except ScenarioError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        for fid in sorted(report.flows):
            s = report.flows[fid]
            fct = f"{s.fct:.3f}s" if s.fct is not None else "incomplete"
            print(f"{fid}: link={s.link} fct={fct} "
                  f"goodput={s.mean_goodput_bps / 1e6:.3f}Mbps "
                  f"algs={'>'.join(s.algorithm_history)}")
        if failures:
            for msg in failures:
                print(f"FAIL: {msg}", file=sys.stderr)
            return 1
        return 0

    if args.command == "bench":
        results = run_bench(records=args.records, capacity=args.capacity)
        print(format_bench(results))
        return 0

    if args.command == "compare":
        try:
            summary = compare_runs(args.reports, out_dir=args.out_dir)
        except (ValueError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        links = sorted({l for v in summary.values() for l in v if l != "__all__"})
        header = f"{'run':<24}" + "".join(f"{l:>16}" for l in links) + f"{'all':>16}"
        print(header)
        for name, entry in summary.items():
            row = f"{name:<24}"
            for l in links:
                row += f"{entry.get(l, float('nan')):>16.3f}"
            row += f"{entry['__all__']:>16.3f}"
            print(row)
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
