#!/usr/bin/env python3
"""Error/timing table for the accumulator policies on the uniform benchmark.

The uniform n x n matrix of value a has permanent n! * a^n exactly, so the
relative errors below are true errors. Writes CSV with --csv.
"""

import argparse

from permkit.harness import error_table, rows_to_csv


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[10, 12, 16, 20])
    ap.add_argument("--fills", type=float, nargs="+", default=[1.0, 0.91])
    ap.add_argument("--csv", help="also write the table to this CSV file")
    args = ap.parse_args()

    rows = error_table(args.sizes, args.fills)
    header = f"{'n':>3} {'fill':>6} {'policy':>7} {'rel_error':>12} {'seconds':>9}"
    print(header)
    print("-" * len(header))
    for r in rows:
        print(f"{r.n:>3} {r.fill:>6} {r.policy:>7} {r.rel_error:>12.3e} {r.elapsed:>9.4f}")
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(rows_to_csv(rows))
        print(f"\nwrote {args.csv}")


if __name__ == "__main__":
    main()
