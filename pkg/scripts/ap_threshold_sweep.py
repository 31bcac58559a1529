#!/usr/bin/env python3
"""Sweep the sparsity constant C across the count-concentration threshold.

For a k-term progression system on Z_n the critical exponent is 1/(k-1), so
p = C n^{-1/(k-1)}.  Small C leaves too few tuples for the normalized count
to concentrate; large C pins it near 1.  This driver runs trials over a C
grid, writes the per-trial records as CSV, and prints a frequency table so
the transition is visible at a glance.

Example:
    python3 scripts/ap_threshold_sweep.py --n 10007 --k 3 \
        --c-grid 0.25,0.5,1,2,4,8 --trials 50 --out sweep.csv
"""

import argparse
import sys

from sparselab.cli import SweepConfig, _records_to_csv, run_sweep


def parse_args(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10007)
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--c-grid", default="0.25,0.5,1.0,2.0,4.0,8.0",
                    help="comma-separated C values")
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--lo", type=float, default=0.5,
                    help="lower concentration bracket")
    ap.add_argument("--hi", type=float, default=2.0,
                    help="upper concentration bracket")
    ap.add_argument("--out", default=None, help="CSV output path")
    ap.add_argument("--emit-timings", action="store_true")
    return ap.parse_args(argv)


def main(argv=None):
    args = parse_args(argv)
    config = SweepConfig(
        system={"kind": "ap", "n": args.n, "k": args.k},
        c_grid=[float(c) for c in args.c_grid.split(",")],
        trials=args.trials,
        seed=args.seed,
        conc_lo=args.lo,
        conc_hi=args.hi,
        threads=args.threads,
        emit_timings=args.emit_timings,
    )
    records, summary = run_sweep(config)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(_records_to_csv(records, summary, args.emit_timings))
        print(f"wrote {len(records)} records to {args.out}")

    print(f"\nk={args.k} progressions on Z_{args.n}, "
          f"alpha_S={summary['alpha_s']}, {args.trials} trials per C")
    print(f"{'C':>8}  {'p':>10}  {'pass':>5}  {'rate':>6}  ci95")
    for row in summary["per_C"]:
        lo, hi = row["ci95"]
        print(f"{row['C']:>8.3g}  {row['p']:>10.3g}  "
              f"{row['successes']:>5d}  {row['frequency']:>6.2f}  "
              f"[{lo:.2f}, {hi:.2f}]")
    return 0


if __name__ == "__main__":
    sys.exit(main())
