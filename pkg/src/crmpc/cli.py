"""Command-line interface: inspect examples, reduce constraints, run campaigns."""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import bench
from .condense import condense, condition_number
from .examples import ExampleId, build_example
from .redundancy import default_x_domain, removal_report, remove_redundant

# published reference values: (q, mN) from the sizing table and the
# condition numbers reported per example (None where not reported)
SIZE_TARGETS = {
    ExampleId.MIMO30: (780, 90), ExampleId.MIMO75: (1950, 225),
    ExampleId.MIMORED30: (556, 90), ExampleId.ACC25: (258, 25),
    ExampleId.INPE50: (500, 50), ExampleId.COMA40: (1200, 120),
}
KAPPA_TARGETS = {
    ExampleId.MIMO30: 2.51, ExampleId.MIMORED30: 2.51,
    ExampleId.ACC25: 4930.85, ExampleId.INPE50: 1.00, ExampleId.COMA40: 1.47,
}


def _example_list(names) -> list:
    if not names or "all" in names:
        return list(ExampleId)
    return [ExampleId.parse(n) for n in names]


def _cmd_inspect(args) -> int:
    for example in _example_list(args.example):
        spec, qp, _ = bench.prepared_example(example)
        kappa = condition_number(qp.h_mat)
        q_target, mn_target = SIZE_TARGETS[example]
        line = (
            f"{example.value}: n={spec.n} m={spec.m} N={spec.horizon} "
            f"mN={qp.nvars} (target {mn_target}) q={qp.nrows} (target {q_target}) "
            f"cond(H)={kappa:.2f}"
        )
        k_target = KAPPA_TARGETS.get(example)
        if k_target is not None:
            line += f" (target {k_target:.2f})"
        print(line)
    return 0


def _cmd_reduce(args) -> int:
    for example in _example_list(args.example):
        spec = build_example(example)
        qp = condense(spec)
        reduced, removed = remove_redundant(qp, default_x_domain(spec.n))
        print(f"{example.value}: {qp.nrows} -> {reduced.nrows}")
        if args.report:
            with open(args.report, "w") as fh:
                fh.write(removal_report(qp, removed))
            print(f"removal report written to {args.report}")
    return 0


def _cmd_bench(args) -> int:
    config = bench.CampaignConfig(
        examples=tuple(_example_list(args.example)),
        solvers=("active_set", "ipm") if args.solver == "all" else (args.solver,),
        modes=("full", "cr") if args.mode == "both" else (args.mode,),
        seed=args.seed, x0_count=args.x0_count, step_cap=args.step_cap,
        warmup=args.warmup, full_scale=args.full_scale, parallel=args.parallel,
    )
    if args.parallel:
        print("warning: --parallel is a correctness-only run; recorded times are zeroed",
              file=sys.stderr)
    result = bench.run_campaign(config)
    invalid = result.capped if result.timing_valid else set()
    if result.capped:
        print(f"note: {len(result.capped)} step-capped trajectories excluded from timing stats",
              file=sys.stderr)
    if result.infeasible:
        print(f"note: {len(result.infeasible)} trajectories ended infeasible", file=sys.stderr)
    tables = None
    if any(r.mode == "full" for r in result.records) and any(r.mode == "cr" for r in result.records):
        tables = bench.summarize(result.records, invalid_timing_keys=invalid)
        for row in tables.rows:
            print(
                f"{row.example}/{row.solver}: mean full {row.mean_full_ns / 1e6:.3f} ms, "
                f"mean CR {row.mean_cr_ns / 1e6:.3f} ms ({row.diff_rel_pct:+.1f}%), "
                f"faster-than-fastest {row.frac_faster_pct:.1f}%, "
                f"detected unconstrained {row.detect_frac_pct:.1f}%"
            )
    out_dir = args.out or os.environ.get("CRMPC_OUT", "bench_out")
    written = bench.emit_outputs(result.records, tables, out_dir)
    print(f"{len(written)} files written to {out_dir}")
    return 0


def _cmd_verify(args) -> int:
    failures = 0
    for example in _example_list(args.example):
        ok, steps, msg = bench.verify_equivalence(
            example, x0_count=args.x0_count, seed=args.seed, solver=args.solver,
        )
        print(f"{example.value}: {'PASS' if ok else 'FAIL'} ({steps} steps checked) {msg if not ok else ''}")
        failures += 0 if ok else 1
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crmpc",
        description="Condensed-QP MPC with online constraint removal: inspection, "
        "redundancy reduction, verification, and timing benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    examples = [e.value for e in ExampleId] + ["all"]

    p = sub.add_parser("inspect", help="print example dimensions and conditioning vs targets")
    p.add_argument("example", nargs="*", choices=examples, default=["all"])
    p.set_defaults(func=_cmd_inspect)

    p = sub.add_parser("reduce", help="run offline redundant-constraint removal")
    p.add_argument("example", nargs="*", choices=examples, default=["all"])
    p.add_argument("--report", help="write a per-row removal report to this file")
    p.set_defaults(func=_cmd_reduce)

    p = sub.add_parser("bench", help="run a timing campaign and emit CSVs/plots")
    p.add_argument("--example", action="append", choices=examples, default=None)
    p.add_argument("--solver", choices=["active_set", "ipm", "all"], default="all")
    p.add_argument("--mode", choices=["full", "cr", "both"], default="both")
    p.add_argument("--x0-count", type=int, default=100)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--step-cap", type=int, default=1000)
    p.add_argument("--warmup", type=int, default=100)
    p.add_argument("--out", help="output directory (env CRMPC_OUT overrides the default)")
    p.add_argument("--full-scale", action="store_true",
                   help="use the publication-scale initial-condition counts")
    p.add_argument("--parallel", action="store_true",
                   help="run trajectories concurrently; timings are invalidated")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("verify", help="check CR steps against full-QP oracles")
    p.add_argument("--example", action="append", choices=examples, default=None)
    p.add_argument("--x0-count", type=int, default=5)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--solver", choices=["active_set", "ipm"], default="active_set")
    p.set_defaults(func=_cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # surface a clean message, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
