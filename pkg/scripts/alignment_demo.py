#!/usr/bin/env python3
"""Show why chunk sizes are rounded down to a power of 2.

For an aligned plan, every chunk flips the same bit at the same local step
(the changed-bit column below is constant), so all workers touch the same
matrix column in lockstep. A misaligned chunk size scatters immediately.
"""

import argparse

from permkit.graycode import changed_bit
from permkit.parallel import cbl_alignment_report, fixed_chunk_plan, plan_chunks


def show(plan, label: str, upto: int) -> None:
    rep = cbl_alignment_report(plan, upto=upto)
    print(f"{label}: chunk_size={plan.chunk_size} ranges={len(plan.ranges)} "
          f"residual={plan.residual}")
    print("  local step :", " ".join(f"{i:>2}" for i in range(len(rep))))
    for (s, e) in plan.ranges[:4]:
        bits = [changed_bit(s + l).j if s + l <= e else None for l in range(len(rep))]
        print(f"  chunk@{s:<5}:", " ".join(f"{b:>2}" if b is not None else " ." for b in bits))
    print("  distinct   :", " ".join(f"{c:>2}" for c in rep))
    print()


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=12)
    ap.add_argument("--tau", type=int, default=4)
    ap.add_argument("--upto", type=int, default=20, help="local steps to display")
    args = ap.parse_args()

    show(plan_chunks(args.n, args.tau, aligned=True), "aligned (power of 2)", args.upto)
    show(fixed_chunk_plan(args.n, 17, args.tau), "chunk size 17", args.upto)


if __name__ == "__main__":
    main()
