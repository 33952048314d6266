"""Measurement harness: error and timing tables over policies and sizes.

The uniform benchmark has the closed form n! * a^n, evaluated exactly in
rational arithmetic, so relative errors here are true errors rather than
differences between two approximations.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass
from typing import List, Sequence

from .generate import uniform
from .kernels import perm_nw
from .precision import AccumulatorPolicy, reference_permanent, relative_error


@dataclass(frozen=True)
class ErrorRow:
    n: int
    fill: float
    policy: str
    value: float
    reference: float
    rel_error: float
    elapsed: float


def error_table(
    sizes: Sequence[int] = (10, 12, 16, 20),
    fills: Sequence[float] = (1.0, 0.91),
    policies: Sequence[AccumulatorPolicy] = tuple(AccumulatorPolicy),
) -> List[ErrorRow]:
    """Evaluate the uniform benchmark across sizes, fills and policies."""
    rows = []
    for n in sizes:
        for a in fills:
            m = uniform(n, float(a))
            exact = reference_permanent(n, float(a))
            for pol in policies:
                t0 = time.perf_counter()
                value = perm_nw(m, pol)
                dt = time.perf_counter() - t0
                err = relative_error(value, exact)
                rows.append(
                    ErrorRow(n, float(a), pol.value, value, float(exact), err.value, dt)
                )
    return rows


def rows_to_csv(rows: Sequence[ErrorRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["n", "fill", "policy", "value", "reference", "rel_error", "elapsed_s"])
    for r in rows:
        writer.writerow([r.n, r.fill, r.policy, repr(r.value), repr(r.reference),
                         repr(r.rel_error), f"{r.elapsed:.6f}"])
    return buf.getvalue()
