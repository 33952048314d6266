"""Structural preprocessing: matching-based filtering and compression.

Two permanent-preserving reductions run before the exponential kernels:

* The matching filter. Rows and columns form a bipartite graph with an edge
  per stored nonzero. No perfect matching means every permutation product
  hits a zero, so the permanent is exactly 0 (a SingularVerdict). Otherwise
  the matching orients the graph; entries whose endpoints fall in different
  strongly connected components lie on no permutation that avoids zeros and
  can be deleted without changing the permanent. Matched pairs are
  contracted before the component search, which keeps every matched entry
  alive by construction.

* Compression. A row (or column) with very few nonzeros lets the matrix
  shrink: one nonzero scales the complementary minor, two nonzeros fold into
  a combined column of the minor, and three-or-four split into a zeroed-out
  copy plus a folded minor. The driver applies these until every row and
  column is dense enough, then hands the leaves to the exponential kernels
  and combines leaf values deterministically.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

from .errors import DecompTimeout, StructureError
from .kernels import perm_nw, perm_spa
from .matrix import (
    KIND_COMPLEX,
    KIND_INT,
    DenseMatrix,
    Scalar,
    SparsePair,
    density,
    sparse_from_triplets,
    sparse_to_dense,
)
from .precision import AccumulatorPolicy, DoubleDouble, dd_add

DENSE_LEAF_DENSITY = 0.30
DEFAULT_TASK_LIMIT = 10_000_000
DEFAULT_TIME_LIMIT = 600.0


@dataclass(frozen=True)
class BipartiteGraph:
    """Rows vs columns; one edge per stored nonzero."""

    n: int
    row_adj: Tuple[Tuple[int, ...], ...]

    @classmethod
    def from_sparse(cls, s: SparsePair) -> "BipartiteGraph":
        crs = s.crs
        adj = tuple(
            tuple(crs.cids[crs.rptrs[i]: crs.rptrs[i + 1]]) for i in range(s.n)
        )
        return cls(s.n, adj)


@dataclass(frozen=True)
class Matching:
    row_to_col: Tuple[int, ...]  # -1 where unmatched
    col_to_row: Tuple[int, ...]
    size: int

    @property
    def perfect(self) -> bool:
        return self.size == len(self.row_to_col)


def max_matching(graph: BipartiteGraph) -> Matching:
    """Maximum bipartite matching (Hopcroft-Karp), deterministic order."""
    n = graph.n
    adj = graph.row_adj
    INF = n + 1
    row_to_col = [-1] * n
    col_to_row = [-1] * n
    dist = [0] * n

    def bfs() -> bool:
        q = deque()
        for r in range(n):
            if row_to_col[r] == -1:
                dist[r] = 0
                q.append(r)
            else:
                dist[r] = INF
        reachable_free = False
        while q:
            r = q.popleft()
            for c in adj[r]:
                r2 = col_to_row[c]
                if r2 == -1:
                    reachable_free = True
                elif dist[r2] == INF:
                    dist[r2] = dist[r] + 1
                    q.append(r2)
        return reachable_free

    def augment(r: int) -> bool:
        for c in adj[r]:
            r2 = col_to_row[c]
            if r2 == -1 or (dist[r2] == dist[r] + 1 and augment(r2)):
                row_to_col[r] = c
                col_to_row[c] = r
                return True
        dist[r] = INF
        return False

    size = 0
    while bfs():
        for r in range(n):
            if row_to_col[r] == -1 and augment(r):
                size += 1
    return Matching(tuple(row_to_col), tuple(col_to_row), size)


@dataclass(frozen=True)
class SccLabeling:
    """Component ids of the matched-pair digraph, exposed per row/column."""

    count: int
    row_component: Tuple[int, ...]
    col_component: Tuple[int, ...]


@dataclass(frozen=True)
class SingularVerdict:
    """Structural certificate that the permanent is exactly zero."""

    reason: str

    @property
    def value(self) -> int:
        return 0


@dataclass(frozen=True)
class DmResult:
    matching: Matching
    labeling: SccLabeling
    removed: Tuple[Tuple[int, int], ...]
    filtered: SparsePair
    nnz_before: int
    nnz_after: int


def _tarjan_scc(adj: Sequence[Sequence[int]]) -> Tuple[int, List[int]]:
    """Iterative Tarjan; returns (component count, node -> component id)."""
    n = len(adj)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    comp = [-1] * n
    stack: List[int] = []
    counter = 0
    ncomp = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            for k in range(pi, len(adj[v])):
                w = adj[v][k]
                if index[w] == -1:
                    work[-1] = (v, k + 1)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if low[v] == index[v]:
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp[w] = ncomp
                    if w == v:
                        break
                ncomp += 1
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    return ncomp, comp


def scc_labeling(s: SparsePair, matching: Matching) -> SccLabeling:
    """Components of the digraph whose nodes are matched row/column pairs.

    Pair i owns row i and column row_to_col[i]; an unmatched entry (r, c)
    contributes the edge pair(c) -> pair(r).
    """
    n = s.n
    adj: List[List[int]] = [[] for _ in range(n)]
    crs = s.crs
    for r in range(n):
        for p in range(crs.rptrs[r], crs.rptrs[r + 1]):
            c = crs.cids[p]
            u = matching.col_to_row[c]
            if u != r:
                adj[u].append(r)
    count, comp = _tarjan_scc(adj)
    row_comp = tuple(comp)
    col_comp = tuple(comp[matching.col_to_row[c]] for c in range(n))
    return SccLabeling(count, row_comp, col_comp)


def dm_decompose(s: SparsePair) -> Union[DmResult, SingularVerdict]:
    """Full matching-filter analysis of one sparse matrix."""
    matching = max_matching(BipartiteGraph.from_sparse(s))
    if not matching.perfect:
        return SingularVerdict(
            f"maximum matching has size {matching.size} < {s.n}; permanent is 0"
        )
    labeling = scc_labeling(s, matching)
    kept = []
    removed = []
    for (r, c, v) in s.crs.triplets():
        if matching.row_to_col[r] != c and labeling.row_component[r] != labeling.col_component[c]:
            removed.append((r, c))
        else:
            kept.append((r, c, v))
    nnz_before = s.crs.nnz
    if not removed:
        return DmResult(matching, labeling, (), s, nnz_before, nnz_before)
    filtered = sparse_from_triplets(s.n, kept, kind=s.kind)
    return DmResult(matching, labeling, tuple(removed), filtered, nnz_before, len(kept))


def dm_filter(s: SparsePair) -> Union[SparsePair, SingularVerdict]:
    """Permanent-preserving entry deletion; SingularVerdict when perm = 0."""
    res = dm_decompose(s)
    if isinstance(res, SingularVerdict):
        return res
    return res.filtered


class MinNnz(NamedTuple):
    axis: str  # "row" or "col"
    index: int
    count: int


def min_nnz_row_col(s: SparsePair) -> MinNnz:
    """Sparsest row or column; rows win ties, then lowest index."""
    best = MinNnz("row", 0, s.n + 1)
    rptrs = s.crs.rptrs
    for i in range(s.n):
        c = rptrs[i + 1] - rptrs[i]
        if c < best.count:
            best = MinNnz("row", i, c)
    cptrs = s.ccs.cptrs
    for j in range(s.n):
        c = cptrs[j + 1] - cptrs[j]
        if c < best.count:
            best = MinNnz("col", j, c)
    return best


def _row_entries(s: SparsePair, r: int) -> List[Tuple[int, Scalar]]:
    crs = s.crs
    return [
        (crs.cids[p], crs.vals[p]) for p in range(crs.rptrs[r], crs.rptrs[r + 1])
    ]


def _minor_triplets(s: SparsePair, drop_row: int, drop_col: int) -> List[Tuple[int, int, Scalar]]:
    out = []
    for (i, j, v) in s.crs.triplets():
        if i == drop_row or j == drop_col:
            continue
        out.append((i - (i > drop_row), j - (j > drop_col), v))
    return out


def d1compress(s: SparsePair, axis: str, index: int) -> Tuple[Scalar, SparsePair]:
    """Row/column with one nonzero: perm(A) = alpha * perm(minor). n >= 2."""
    if axis == "col":
        alpha, minor = d1compress(s.transpose(), "row", index)
        return alpha, minor.transpose()
    if s.n < 2:
        raise StructureError("d1compress needs n >= 2")
    entries = _row_entries(s, index)
    if len(entries) != 1:
        raise StructureError(f"row {index} has {len(entries)} nonzeros, d1 needs 1")
    col, alpha = entries[0]
    minor = sparse_from_triplets(s.n - 1, _minor_triplets(s, index, col), kind=s.kind)
    return alpha, minor


def _fold_two(s: SparsePair, row: int, j1: int, a1: Scalar, j2: int, a2: Scalar) -> SparsePair:
    """Shrink by one: drop `row`, replace columns j1 and j2 by the single
    combined column a1*col(j2) + a2*col(j1), placed at index 0."""
    n = s.n
    combined: dict = {}
    trips: List[Tuple[int, int, Scalar]] = []
    # surviving columns keep their relative order after the combined column
    old_cols = [j for j in range(n) if j != j1 and j != j2]
    col_pos = {j: k + 1 for k, j in enumerate(old_cols)}
    for (i, j, v) in s.crs.triplets():
        if i == row:
            continue
        i2 = i - (i > row)
        if j == j1:
            combined[i2] = combined.get(i2, 0) + a2 * v
        elif j == j2:
            combined[i2] = combined.get(i2, 0) + a1 * v
        else:
            trips.append((i2, col_pos[j], v))
    for i2, v in combined.items():
        if v != 0:
            trips.append((i2, 0, v))
    return sparse_from_triplets(n - 1, trips, kind=s.kind)


def d2compress(s: SparsePair, axis: str, index: int) -> SparsePair:
    """Row/column with two nonzeros folds into an (n-1)-sized matrix. n >= 2."""
    if axis == "col":
        return d2compress(s.transpose(), "row", index).transpose()
    if s.n < 2:
        raise StructureError("d2compress needs n >= 2")
    entries = _row_entries(s, index)
    if len(entries) != 2:
        raise StructureError(f"row {index} has {len(entries)} nonzeros, d2 needs 2")
    (j1, a1), (j2, a2) = entries
    return _fold_two(s, index, j1, a1, j2, a2)


def d34compress(s: SparsePair, axis: str, index: int) -> Tuple[SparsePair, SparsePair]:
    """Split on the two lowest-index nonzeros of a 3+ entry row/column.

    Returns (same-size matrix with those two entries zeroed, folded
    (n-1)-sized matrix); the permanents of the two pieces sum to perm(A).
    """
    if axis == "col":
        zp, fp = d34compress(s.transpose(), "row", index)
        return zp.transpose(), fp.transpose()
    if s.n < 2:
        raise StructureError("d34compress needs n >= 2")
    entries = _row_entries(s, index)
    if len(entries) < 3:
        raise StructureError(f"row {index} has {len(entries)} nonzeros, d34 needs >= 3")
    (j1, a1), (j2, a2) = entries[0], entries[1]
    kept = [
        (i, j, v)
        for (i, j, v) in s.crs.triplets()
        if not (i == index and (j == j1 or j == j2))
    ]
    zeroed = sparse_from_triplets(s.n, kept, kind=s.kind)
    folded = _fold_two(s, index, j1, a1, j2, a2)
    return zeroed, folded


@dataclass(frozen=True)
class DecompTask:
    matrix: SparsePair
    multiplier: Scalar
    depth: int
    task_id: int


@dataclass
class DecompStats:
    tasks_created: int = 0
    d1_applied: int = 0
    d2_applied: int = 0
    d34_applied: int = 0
    trivial_leaves: int = 0
    kernel_leaves: int = 0
    dense_kernel_leaves: int = 0
    max_depth: int = 0
    elapsed: float = 0.0
    leaf_sizes: List[int] = field(default_factory=list)
    leaf_nnzs: List[int] = field(default_factory=list)

    @property
    def avg_leaf_n(self) -> float:
        return sum(self.leaf_sizes) / len(self.leaf_sizes) if self.leaf_sizes else 0.0

    @property
    def avg_leaf_nnz(self) -> float:
        return sum(self.leaf_nnzs) / len(self.leaf_nnzs) if self.leaf_nnzs else 0.0


def _combine_contributions(contribs: List[Tuple[int, Scalar]], kind: str) -> Scalar:
    """Sum leaf contributions in ascending task-id order, double-double."""
    contribs.sort(key=lambda t: t[0])
    if kind == KIND_INT:
        total = 0
        for _, v in contribs:
            total += v
        return total
    if kind == KIND_COMPLEX:
        re = DoubleDouble(0.0, 0.0)
        im = DoubleDouble(0.0, 0.0)
        for _, v in contribs:
            c = complex(v)
            re = dd_add(re, DoubleDouble.from_float(c.real))
            im = dd_add(im, DoubleDouble.from_float(c.imag))
        return complex(re.hi, im.hi)
    acc = DoubleDouble(0.0, 0.0)
    for _, v in contribs:
        acc = dd_add(acc, DoubleDouble.from_float(float(v)))
    return acc.hi


def decomp_run(
    s: SparsePair,
    policy: AccumulatorPolicy = AccumulatorPolicy.DD,
    task_limit: int = DEFAULT_TASK_LIMIT,
    time_limit: float = DEFAULT_TIME_LIMIT,
    min_nnz_threshold: int = 4,
    dense_leaf_density: float = DENSE_LEAF_DENSITY,
) -> Tuple[Scalar, DecompStats]:
    """Worklist compression driver; returns (permanent, statistics).

    Tasks are processed LIFO so memory stays proportional to the recursion
    depth. Exceeding the task budget or the wall-clock budget raises
    DecompTimeout with progress attached.
    """
    kind = s.kind
    if kind == KIND_INT:
        one: Scalar = 1
    elif kind == KIND_COMPLEX:
        one = complex(1.0)
    else:
        one = 1.0
    stats = DecompStats()
    started = time.monotonic()
    next_id = 1
    stack = [DecompTask(s, one, 0, 0)]
    stats.tasks_created = 1
    contribs: List[Tuple[int, Scalar]] = []

    while stack:
        if stats.tasks_created > task_limit:
            raise DecompTimeout(
                f"task budget of {task_limit} exhausted",
                tasks_done=stats.tasks_created,
                elapsed=time.monotonic() - started,
            )
        if time.monotonic() - started > time_limit:
            raise DecompTimeout(
                f"wall-clock budget of {time_limit:.1f}s exhausted",
                tasks_done=stats.tasks_created,
                elapsed=time.monotonic() - started,
            )
        task = stack.pop()
        m = task.matrix
        stats.max_depth = max(stats.max_depth, task.depth)
        pick = min_nnz_row_col(m)
        if pick.count == 0:
            stats.trivial_leaves += 1
            continue  # empty row/col: contributes 0
        if m.n == 1:
            stats.trivial_leaves += 1
            (_, _, v0) = m.crs.triplets()[0]
            contribs.append((task.task_id, task.multiplier * v0))
            continue
        if pick.count == 1:
            alpha, minor = d1compress(m, pick.axis, pick.index)
            stats.d1_applied += 1
            stack.append(DecompTask(minor, task.multiplier * alpha, task.depth + 1, next_id))
            next_id += 1
            stats.tasks_created += 1
            continue
        if pick.count == 2:
            folded = d2compress(m, pick.axis, pick.index)
            stats.d2_applied += 1
            stack.append(DecompTask(folded, task.multiplier, task.depth + 1, next_id))
            next_id += 1
            stats.tasks_created += 1
            continue
        if pick.count <= min_nnz_threshold:
            zeroed, folded = d34compress(m, pick.axis, pick.index)
            stats.d34_applied += 1
            stack.append(DecompTask(zeroed, task.multiplier, task.depth + 1, next_id))
            stack.append(DecompTask(folded, task.multiplier, task.depth + 1, next_id + 1))
            next_id += 2
            stats.tasks_created += 2
            continue
        # dense enough everywhere: evaluate the leaf with a full kernel
        stats.kernel_leaves += 1
        stats.leaf_sizes.append(m.n)
        stats.leaf_nnzs.append(m.crs.nnz)
        if density(m) >= dense_leaf_density:
            stats.dense_kernel_leaves += 1
            value = perm_nw(sparse_to_dense(m), policy)
        else:
            value = perm_spa(m, policy)
        contribs.append((task.task_id, task.multiplier * value))

    stats.elapsed = time.monotonic() - started
    return _combine_contributions(contribs, kind), stats


def decomp_ryser(
    s: SparsePair,
    policy: AccumulatorPolicy = AccumulatorPolicy.DD,
    task_limit: int = DEFAULT_TASK_LIMIT,
    time_limit: float = DEFAULT_TIME_LIMIT,
) -> Scalar:
    """Compression-first permanent of a sparse matrix."""
    value, _ = decomp_run(s, policy, task_limit, time_limit)
    return value
