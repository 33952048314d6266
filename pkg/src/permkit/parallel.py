"""Chunked execution of the Gray walk: plans, jump-in state, reduction.

The walk over iterates [1, 2^(n-1) - 1] is embarrassingly partitionable:
any worker can start mid-walk by materializing the per-row state of its
first iterate directly from the Gray code (jump-in), so a plan is just a
tiling of the iterate range.

Aligned plans round the chunk size down to the closest power of 2. Chunks
then start at 1 + c * 2^k, which makes the changed-bit sequence identical
across chunks at every local index except the last one inside each chunk;
workers touch the same column at the same local step. The tail the rounding
leaves uncovered is a residual range, executed as one extra single-worker
pass.

Reduction is deterministic: partial sums are combined in ascending worker
order into a double-double outer accumulator regardless of the policy that
produced them, so repeated runs of an identical plan are bit-identical.

Partial results can be serialized to a line-oriented text file with full
hexadecimal float payloads and merged later; the merge reproduces the
in-process reduction bit for bit. Files carry a content hash of the matrix
so a merge against the wrong input is refused.
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

from . import _loops, kernels
from .errors import ParseError, PolicyError, StructureError
from .graycode import changed_bit, gray_of
from .matrix import (
    KIND_COMPLEX,
    KIND_INT,
    KIND_REAL,
    DenseMatrix,
    Scalar,
    SparsePair,
)
from .precision import AccumulatorPolicy, DoubleDouble, dd_add, two_sum

MatrixLike = Union[DenseMatrix, SparsePair]

FORMAT_MAGIC = "# permkit-partials v1"


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def _floor_pow2(v: int) -> int:
    return 1 << (v.bit_length() - 1)


@dataclass(frozen=True)
class ChunkPlan:
    """Tiling of the iterate range [1, total] into per-worker chunks."""

    n: int
    total: int
    tau: int
    chunk_size: int
    aligned: bool
    ranges: Tuple[Tuple[int, int], ...]
    residual: Optional[Tuple[int, int]] = None
    tau_clamped: bool = False

    def __post_init__(self):
        cover = list(self.ranges) + ([self.residual] if self.residual else [])
        pos = 1
        for (s, e) in cover:
            if s != pos or e < s:
                raise StructureError(f"plan ranges do not tile [1, {self.total}]")
            pos = e + 1
        if pos != self.total + 1:
            raise StructureError(f"plan ranges cover [1, {pos - 1}], expected [1, {self.total}]")

    @property
    def worker_count(self) -> int:
        return len(self.ranges) + (1 if self.residual else 0)

    def jobs(self) -> List[Tuple[int, int, int]]:
        """(worker_id, start, end) triples; the residual is the last worker."""
        out = [(t, s, e) for t, (s, e) in enumerate(self.ranges)]
        if self.residual:
            out.append((len(self.ranges), self.residual[0], self.residual[1]))
        return out


def plan_chunks(n: int, tau: int, aligned: bool = True) -> ChunkPlan:
    """Tile the n-row walk for tau workers.

    tau beyond the iterate count is clamped (and flagged on the plan).
    Aligned plans use the closest power of 2 below ceil(total/tau) and pick
    up the uncovered tail as a residual range.
    """
    if not 1 <= n <= 63:
        raise ValueError("n must be in [1, 63]")
    if tau < 1:
        raise ValueError("tau must be >= 1")
    total = kernels.total_iterates(n)
    if total == 0:
        return ChunkPlan(n, 0, 1, 0, aligned, (), None, tau_clamped=tau > 1)
    clamped = tau > total
    tau = min(tau, total)
    size = _ceil_div(total, tau)
    if aligned:
        size = _floor_pow2(size)
    ranges = []
    for t in range(tau):
        s = 1 + t * size
        if s > total:
            break
        ranges.append((s, min(total, s + size - 1)))
    covered = ranges[-1][1]
    residual = (covered + 1, total) if covered < total else None
    return ChunkPlan(n, total, tau, size, aligned, tuple(ranges), residual, clamped)


def fixed_chunk_plan(n: int, chunk_size: int, num_chunks: int) -> ChunkPlan:
    """Plan with an explicitly requested chunk size (alignment diagnostics)."""
    if chunk_size < 1 or num_chunks < 1:
        raise ValueError("chunk_size and num_chunks must be >= 1")
    total = kernels.total_iterates(n)
    ranges = []
    for t in range(num_chunks):
        s = 1 + t * chunk_size
        if s > total:
            break
        ranges.append((s, min(total, s + chunk_size - 1)))
    if not ranges:
        raise ValueError("chunk plan is empty")
    covered = ranges[-1][1]
    residual = (covered + 1, total) if covered < total else None
    aligned = chunk_size & (chunk_size - 1) == 0
    return ChunkPlan(n, total, len(ranges), chunk_size, aligned, tuple(ranges), residual)


@dataclass(frozen=True)
class PartialResult:
    """One worker's share of the signed-product sum, exactly captured.

    Whatever the accumulator policy, the payload is normalized losslessly:
    float partials become double-double (a compensated sum folds via an
    error-free transform), integer partials stay exact ints in the doubled
    y-space, complex partials stay complex.
    """

    worker_id: int
    start: int
    end: int
    iterations_done: int
    kind: str
    value: Union[DoubleDouble, int, complex]


def init_x_at(m: MatrixLike, g_prev: int):
    """Per-row state after iterate g_prev, built from scratch.

    Equals the initial state plus the columns whose Gray bits are set in
    gray_of(g_prev), added in ascending column order. Float and complex
    kinds only (the integer walk keeps doubled state internally).
    """
    n = m.n
    if not 0 <= g_prev <= kernels.total_iterates(n):
        raise ValueError(f"g_prev {g_prev} out of range for n={n}")
    kind = m.kind
    if kind == KIND_INT:
        raise ValueError("init_x_at serves float and complex matrices")
    if isinstance(m, DenseMatrix):
        if kind == KIND_COMPLEX:
            cols, x = kernels.dense_complex_state(m)
        else:
            cols, x = kernels.dense_float_state(m)
        code = gray_of(g_prev)
        j = 0
        while code:
            if code & 1:
                for i in range(n):
                    x[i] = x[i] + cols[j, i]
            code >>= 1
            j += 1
        return x
    if kind == KIND_COMPLEX:
        cptrs, rids, cvals, x = kernels.sparse_complex_state(m)
    else:
        cptrs, rids, cvals, x = kernels.sparse_float_state(m)
    code = gray_of(g_prev)
    j = 0
    while code:
        if code & 1:
            for p in range(cptrs[j], cptrs[j + 1]):
                x[rids[p]] = x[rids[p]] + cvals[p]
        code >>= 1
        j += 1
    return x


def _y_init_at(m: MatrixLike, g_prev: int):
    """Integer-walk counterpart of init_x_at, in the doubled y-space."""
    if isinstance(m, DenseMatrix):
        cols2, y = kernels.dense_int_state(m)
        code = gray_of(g_prev)
        j = 0
        while code:
            if code & 1:
                col = cols2[j]
                for i in range(m.n):
                    y[i] += col[i]
            code >>= 1
            j += 1
        return cols2, y
    colrows, colvals2, y = kernels.sparse_int_state(m)
    code = gray_of(g_prev)
    j = 0
    while code:
        if code & 1:
            rows = colrows[j]
            vals = colvals2[j]
            for k in range(len(rows)):
                y[rows[k]] += vals[k]
        code >>= 1
        j += 1
    return (colrows, colvals2), y


def run_range(
    m: MatrixLike,
    start: int,
    end: int,
    policy: AccumulatorPolicy = AccumulatorPolicy.DD,
    worker_id: int = 0,
) -> PartialResult:
    """Execute one inclusive iterate range from a fresh jump-in state.

    The result is the signed-product sum over the range alone; the g = 0
    product is the reducer's business.
    """
    n = m.n
    total = kernels.total_iterates(n)
    if not (1 <= start <= end <= total):
        raise ValueError(f"range [{start}, {end}] invalid for n={n}")
    kind = m.kind
    iters = end - start + 1
    if kind == KIND_INT:
        colstate, y = _y_init_at(m, start - 1)
        if isinstance(m, DenseMatrix):
            val = _loops.chunk_dense_int(colstate, y, start, end)
        else:
            colrows, colvals2 = colstate
            val = _loops.chunk_sparse_int(colrows, colvals2, y, start, end)
        return PartialResult(worker_id, start, end, iters, kind, val)
    if kind == KIND_COMPLEX:
        if policy is not AccumulatorPolicy.DD:
            raise PolicyError("complex matrices support the plain-double policy only")
        x = init_x_at(m, start - 1)
        if isinstance(m, DenseMatrix):
            cols, _ = kernels.dense_complex_state(m)
            val = _loops.chunk_dense_c128(cols, x, start, end, complex(0.0))
        else:
            cptrs, rids, cvals, _ = kernels.sparse_complex_state(m)
            val = _loops.chunk_sparse_c128(cptrs, rids, cvals, x, start, end, complex(0.0))
        return PartialResult(worker_id, start, end, iters, kind, complex(val))
    x = init_x_at(m, start - 1)
    code = {
        AccumulatorPolicy.DD: _loops.POLICY_DD,
        AccumulatorPolicy.KAHAN: _loops.POLICY_KAHAN,
        AccumulatorPolicy.DQ: _loops.POLICY_DQ,
        AccumulatorPolicy.QQ: _loops.POLICY_QQ,
    }[policy]
    if isinstance(m, DenseMatrix):
        cols, _ = kernels.dense_float_state(m)
        acc_a, acc_b = _loops.chunk_dense_f64(cols, x, start, end, code, 0.0, 0.0)
    else:
        cptrs, rids, cvals, _ = kernels.sparse_float_state(m)
        acc_a, acc_b = _loops.chunk_sparse_f64(cptrs, rids, cvals, x, start, end, code, 0.0, 0.0)
    if policy is AccumulatorPolicy.DD:
        dd = DoubleDouble(acc_a, 0.0)
    elif policy is AccumulatorPolicy.KAHAN:
        s, e = two_sum(acc_a, acc_b)
        dd = DoubleDouble(s, e)
    else:
        dd = DoubleDouble(acc_a, acc_b)
    return PartialResult(worker_id, start, end, iters, kind, dd)


def initial_product(m: MatrixLike, policy: AccumulatorPolicy = AccumulatorPolicy.DD) -> Scalar:
    """The g = 0 term: product of the initial per-row state.

    Integer matrices report it in the doubled y-space, matching the space
    of their partial results.
    """
    kind = m.kind
    if kind == KIND_INT:
        if isinstance(m, DenseMatrix):
            _, y = kernels.dense_int_state(m)
        else:
            _, _, y = kernels.sparse_int_state(m)
        p0 = 1
        for v in y:
            p0 *= v
        return p0
    if kind == KIND_COMPLEX:
        x = init_x_at(m, 0)
        p0 = complex(1.0)
        for v in x:
            p0 = p0 * complex(v)
        return p0
    x = init_x_at(m, 0)
    return kernels.policy_product(x, policy)


def execute_plan(
    m: MatrixLike,
    plan: ChunkPlan,
    policy: AccumulatorPolicy = AccumulatorPolicy.DD,
    max_threads: Optional[int] = None,
) -> List[PartialResult]:
    """Run every chunk of the plan; results come back sorted by worker id.

    Chunks run on a thread pool (the compiled loops release the lock); the
    reduction order is fixed by worker id, so scheduling cannot affect the
    result.
    """
    jobs = plan.jobs()
    if not jobs:
        return []
    if max_threads is None:
        max_threads = min(len(jobs), os.cpu_count() or 1)
    if max_threads <= 1 or len(jobs) == 1:
        return [run_range(m, s, e, policy, wid) for (wid, s, e) in jobs]
    with ThreadPoolExecutor(max_workers=max_threads) as pool:
        futs = [pool.submit(run_range, m, s, e, policy, wid) for (wid, s, e) in jobs]
        results = [f.result() for f in futs]
    results.sort(key=lambda p: p.worker_id)
    return results


def reduce_partials(
    partials: Sequence[PartialResult],
    p0: Scalar,
    n: int,
) -> Scalar:
    """Deterministic reduction: p0 plus every partial, then the global factor.

    Partials must tile [1, 2^(n-1) - 1] exactly with unique worker ids 0..K-1;
    they are summed in ascending id order into a double-double accumulator
    (per-component for complex), so the reduction is insensitive to the input
    ordering and bit-stable across runs.
    """
    total = kernels.total_iterates(n)
    ids = sorted(p.worker_id for p in partials)
    if ids != list(range(len(partials))):
        raise StructureError("worker ids must be unique and contiguous from 0")
    by_start = sorted(partials, key=lambda p: p.start)
    pos = 1
    for p in by_start:
        if p.start != pos or p.end < p.start:
            raise StructureError(f"partials do not tile [1, {total}]")
        pos = p.end + 1
    if pos != total + 1:
        raise StructureError(f"partials cover [1, {pos - 1}], expected [1, {total}]")

    ordered = sorted(partials, key=lambda p: p.worker_id)
    sign = kernels._sign_factor(n)
    if (ordered and ordered[0].kind == KIND_INT) or (not ordered and isinstance(p0, int)):
        acc = p0
        for p in ordered:
            acc += p.value
        return kernels._finalize_int(acc, n)
    if (ordered and ordered[0].kind == KIND_COMPLEX) or (not ordered and isinstance(p0, complex)):
        re = DoubleDouble.from_float(complex(p0).real)
        im = DoubleDouble.from_float(complex(p0).imag)
        for p in ordered:
            v = complex(p.value)
            re = dd_add(re, DoubleDouble.from_float(v.real))
            im = dd_add(im, DoubleDouble.from_float(v.imag))
        return complex(re.hi * sign, im.hi * sign)
    acc = p0 if isinstance(p0, DoubleDouble) else DoubleDouble.from_float(float(p0))
    for p in ordered:
        acc = dd_add(acc, p.value)
    return acc.hi * sign


# spec name for the reduction step
reduce = reduce_partials


def permanent_chunked(
    m: MatrixLike,
    policy: AccumulatorPolicy = AccumulatorPolicy.DD,
    tau: int = 1,
    aligned: bool = True,
    max_threads: Optional[int] = None,
) -> Scalar:
    """Plan, execute, reduce: the one-call parallel permanent."""
    plan = plan_chunks(m.n, tau, aligned)
    partials = execute_plan(m, plan, policy, max_threads)
    return reduce_partials(partials, initial_product(m, policy), m.n)


def cbl_alignment_report(plan: ChunkPlan, upto: Optional[int] = None) -> List[int]:
    """Distinct changed-bit count across chunks at each local index.

    Power-of-2 aligned chunks give 1 everywhere except the final local index
    of a full chunk; misaligned sizes scatter immediately. The residual range
    is not a chunk and is excluded.
    """
    if not plan.ranges:
        return []
    width = plan.chunk_size if upto is None else min(upto, plan.chunk_size)
    counts = []
    for local in range(width):
        seen = set()
        for (s, e) in plan.ranges:
            g = s + local
            if g <= e:
                seen.add(changed_bit(g).j)
        counts.append(len(seen))
    return counts


@dataclass(frozen=True)
class HierarchyPlan:
    """Two-level tiling: contiguous superranges (one per process), each
    chunked for that process's workers. Alignment applies to the inner level."""

    n: int
    total: int
    processes: int
    workers: int
    aligned: bool
    superranges: Tuple[Tuple[int, int], ...]
    inner: Tuple[Tuple[Tuple[int, int], ...], ...]  # per superrange, incl. its residual

    def __post_init__(self):
        flat = [rng for group in self.inner for rng in group]
        pos = 1
        for (s, e) in flat:
            if s != pos or e < s:
                raise StructureError(f"hierarchy does not tile [1, {self.total}]")
            pos = e + 1
        if pos != self.total + 1:
            raise StructureError(f"hierarchy covers [1, {pos - 1}], expected [1, {self.total}]")

    def flatten(self) -> List[Tuple[int, int, int]]:
        """(worker_id, start, end) with globally sequential ids."""
        out = []
        wid = 0
        for group in self.inner:
            for (s, e) in group:
                out.append((wid, s, e))
                wid += 1
        return out

    def jobs_for(self, process_index: int) -> List[Tuple[int, int, int]]:
        """The flattened jobs belonging to one superrange."""
        if not 0 <= process_index < len(self.inner):
            raise ValueError(f"process index {process_index} out of range")
        wid = sum(len(g) for g in self.inner[:process_index])
        return [(wid + k, s, e) for k, (s, e) in enumerate(self.inner[process_index])]


def plan_hierarchy(n: int, processes: int, workers: int, aligned: bool = True) -> HierarchyPlan:
    """Split the walk into process superranges, then chunk each for workers.

    The outer split is a plain ceiling division (alignment is a worker-level
    concern); requested counts beyond the iterate budget are clamped.
    """
    if processes < 1 or workers < 1:
        raise ValueError("processes and workers must be >= 1")
    total = kernels.total_iterates(n)
    if total == 0:
        return HierarchyPlan(n, 0, 1, 1, aligned, (), ())
    if processes * workers > total:
        raise ValueError(
            f"{processes} x {workers} exceeds the {total} available iterates"
        )
    psize = _ceil_div(total, processes)
    superranges = []
    for t in range(processes):
        s = 1 + t * psize
        if s > total:
            break
        superranges.append((s, min(total, s + psize - 1)))
    inner = []
    for (s, e) in superranges:
        length = e - s + 1
        w = min(workers, length)
        size = _ceil_div(length, w)
        if aligned:
            size = _floor_pow2(size)
        group = []
        for t in range(w):
            ls = s + t * size
            if ls > e:
                break
            group.append((ls, min(e, ls + size - 1)))
        covered = group[-1][1]
        if covered < e:
            group.append((covered + 1, e))
        inner.append(tuple(group))
    return HierarchyPlan(n, total, len(superranges), workers, aligned, tuple(superranges), tuple(inner))


def execute_hierarchy(
    m: MatrixLike,
    hplan: HierarchyPlan,
    policy: AccumulatorPolicy = AccumulatorPolicy.DD,
    process_index: Optional[int] = None,
    max_threads: Optional[int] = None,
) -> List[PartialResult]:
    """Run all superranges, or just one when process_index is given."""
    if process_index is None:
        jobs = hplan.flatten()
    else:
        jobs = hplan.jobs_for(process_index)
    if not jobs:
        return []
    if max_threads is None:
        max_threads = min(len(jobs), os.cpu_count() or 1)
    if max_threads <= 1 or len(jobs) == 1:
        return [run_range(m, s, e, policy, wid) for (wid, s, e) in jobs]
    with ThreadPoolExecutor(max_workers=max_threads) as pool:
        futs = [pool.submit(run_range, m, s, e, policy, wid) for (wid, s, e) in jobs]
        results = [f.result() for f in futs]
    results.sort(key=lambda p: p.worker_id)
    return results


# ---------------------------------------------------------------------------
# partial-result files


def matrix_content_hash(m: MatrixLike) -> str:
    """Content hash over the nonzero triplets, identical for a dense matrix
    and its sparsified twin."""
    if isinstance(m, DenseMatrix):
        n, kind = m.n, m.kind
        trips = [
            (i, j, m.entry(i, j))
            for i in range(n)
            for j in range(n)
            if m.entry(i, j) != 0
        ]
    else:
        n, kind = m.n, m.kind
        trips = m.crs.triplets()
    h = hashlib.sha256()
    h.update(f"permkit-matrix v1|{n}|{kind}".encode())
    for (i, j, v) in trips:
        h.update(f"|{i},{j},{_scalar_token(v, kind)}".encode())
    return h.hexdigest()


def _scalar_token(v: Scalar, kind: str) -> str:
    if kind == KIND_INT:
        return str(int(v))
    if kind == KIND_COMPLEX:
        c = complex(v)
        return f"{c.real.hex()},{c.imag.hex()}"
    return float(v).hex()


def write_partials_file(
    path: Union[str, Path],
    m: MatrixLike,
    policy: AccumulatorPolicy,
    partials: Sequence[PartialResult],
) -> None:
    """Serialize partial results with bit-exact payload encoding."""
    n = m.n
    lines = [FORMAT_MAGIC]
    lines.append(
        f"# n={n} kind={m.kind} policy={policy.value} "
        f"total={kernels.total_iterates(n)} matrix_sha256={matrix_content_hash(m)}"
    )
    for p in sorted(partials, key=lambda q: q.worker_id):
        if p.kind == KIND_INT:
            payload = str(p.value)
        elif p.kind == KIND_COMPLEX:
            v = complex(p.value)
            payload = f"{v.real.hex()} {v.imag.hex()}"
        else:
            dd = p.value
            payload = f"{dd.hi.hex()} {dd.lo.hex()}"
        lines.append(f"W {p.worker_id} {p.start} {p.end} {p.iterations_done} {payload}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_partials_file(path: Union[str, Path]) -> Tuple[dict, List[PartialResult]]:
    """Parse one partials file; returns (header fields, partial results)."""
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines or lines[0].strip() != FORMAT_MAGIC:
        raise ParseError(f"{path}: not a partial-results file", line=1)
    if len(lines) < 2 or not lines[1].startswith("# "):
        raise ParseError(f"{path}: missing header line", line=2)
    header = {}
    for token in lines[1][2:].split():
        if "=" not in token:
            raise ParseError(f"{path}: bad header token {token!r}", line=2)
        k, v = token.split("=", 1)
        header[k] = v
    for key in ("n", "kind", "policy", "total", "matrix_sha256"):
        if key not in header:
            raise ParseError(f"{path}: header misses {key}", line=2)
    header["n"] = int(header["n"])
    header["total"] = int(header["total"])
    kind = header["kind"]
    partials = []
    for ln, line in enumerate(lines[2:], start=3):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] != "W":
            raise ParseError(f"{path}: expected worker record", line=ln)
        try:
            wid, start, end, iters = (int(t) for t in parts[1:5])
            if kind == KIND_INT:
                value: Union[int, complex, DoubleDouble] = int(parts[5])
            elif kind == KIND_COMPLEX:
                value = complex(float.fromhex(parts[5]), float.fromhex(parts[6]))
            else:
                value = DoubleDouble(float.fromhex(parts[5]), float.fromhex(parts[6]))
        except (ValueError, IndexError) as exc:
            raise ParseError(f"{path}: bad worker record ({exc})", line=ln) from None
        partials.append(PartialResult(wid, start, end, iters, kind, value))
    return header, partials


def merge_partial_files(
    paths: Sequence[Union[str, Path]],
    m: MatrixLike,
    policy: AccumulatorPolicy = AccumulatorPolicy.DD,
) -> Scalar:
    """Load partial files, validate them against the matrix, reduce.

    Bit-identical to the single-invocation result over the same plan: the
    payload encoding is lossless and the reduction order is fixed.
    """
    if not paths:
        raise StructureError("no partial files to merge")
    want_hash = matrix_content_hash(m)
    partials: List[PartialResult] = []
    for path in sorted(str(p) for p in paths):
        header, part = read_partials_file(path)
        if header["n"] != m.n or header["kind"] != m.kind:
            raise StructureError(f"{path}: partials belong to a different matrix shape")
        if header["matrix_sha256"] != want_hash:
            raise StructureError(f"{path}: partials belong to a different matrix")
        if header["policy"] != policy.value:
            raise StructureError(
                f"{path}: partials were produced under policy {header['policy']!r}, "
                f"requested {policy.value!r}"
            )
        partials.extend(part)
    return reduce_partials(partials, initial_product(m, policy), m.n)
