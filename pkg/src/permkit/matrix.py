"""Dense and sparse square-matrix containers.

Three scalar kinds are supported and tracked explicitly:

* ``real64``      -- Python floats (IEEE binary64),
* ``complex128``  -- Python complex,
* ``integer``     -- Python ints, arbitrary width, exact.

Sparse matrices come in row-compressed (CRS) and column-compressed (CCS)
layouts. The permanent kernels walk columns while bookkeeping rows, so a
``SparsePair`` carries both layouts for the same nonzero set; consistency
between the two is checked where it matters.

All containers are bounded to 1 <= n <= 63: the subset-enumeration state of
the kernels must fit one 64-bit word.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple, Union

from .errors import ImpossibleError, StructureError

Scalar = Union[int, float, complex]

KIND_REAL = "real64"
KIND_COMPLEX = "complex128"
KIND_INT = "integer"
KINDS = (KIND_REAL, KIND_COMPLEX, KIND_INT)

N_MAX = 63


def _check_n(n: int) -> None:
    if not isinstance(n, int) or n < 1:
        raise StructureError(f"matrix order must be a positive integer, got {n!r}")
    if n > N_MAX:
        raise ImpossibleError(
            f"matrix order {n} exceeds the supported maximum of {N_MAX} "
            "(subset-enumeration state must fit one 64-bit word)"
        )


def _is_finite(v: Scalar) -> bool:
    if isinstance(v, complex):
        return v.real == v.real and v.imag == v.imag and abs(v.real) != float("inf") and abs(v.imag) != float("inf")
    if isinstance(v, float):
        return v == v and abs(v) != float("inf")
    return True  # ints are always finite


def infer_kind(values: Iterable[Scalar]) -> str:
    """Most specific kind that holds every value: integer < real64 < complex128."""
    kind = KIND_INT
    for v in values:
        if isinstance(v, complex):
            return KIND_COMPLEX
        if isinstance(v, float):
            kind = KIND_REAL
        elif isinstance(v, bool) or not isinstance(v, int):
            raise StructureError(f"unsupported scalar {v!r}")
    return kind


def coerce_value(v: Scalar, kind: str) -> Scalar:
    if kind == KIND_INT:
        if isinstance(v, int) and not isinstance(v, bool):
            return v
        raise StructureError(f"non-integer value {v!r} in integer-exact matrix")
    if kind == KIND_REAL:
        if isinstance(v, complex):
            raise StructureError(f"complex value {v!r} in real64 matrix")
        return float(v)
    if kind == KIND_COMPLEX:
        return complex(v)
    raise StructureError(f"unknown kind {kind!r}")


@dataclass(frozen=True)
class DenseMatrix:
    """Row-major dense square matrix with an explicit scalar kind."""

    n: int
    data: Tuple[Scalar, ...]  # row-major, length n*n
    kind: str

    def __post_init__(self):
        _check_n(self.n)
        if self.kind not in KINDS:
            raise StructureError(f"unknown kind {self.kind!r}")
        if len(self.data) != self.n * self.n:
            raise StructureError(
                f"dense data has {len(self.data)} entries, expected {self.n * self.n}"
            )
        for v in self.data:
            if not _is_finite(v):
                raise StructureError(f"non-finite entry {v!r}")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Scalar]], kind: str | None = None) -> "DenseMatrix":
        n = len(rows)
        _check_n(n)
        if any(len(r) != n for r in rows):
            raise StructureError("matrix must be square")
        flat = [v for row in rows for v in row]
        if kind is None:
            kind = infer_kind(flat)
        data = tuple(coerce_value(v, kind) for v in flat)
        return cls(n, data, kind)

    def entry(self, i: int, j: int) -> Scalar:
        return self.data[i * self.n + j]

    def row(self, i: int) -> List[Scalar]:
        return list(self.data[i * self.n : (i + 1) * self.n])

    def col(self, j: int) -> List[Scalar]:
        return [self.data[i * self.n + j] for i in range(self.n)]

    def rows(self) -> List[List[Scalar]]:
        return [self.row(i) for i in range(self.n)]

    def transpose(self) -> "DenseMatrix":
        n = self.n
        data = tuple(self.data[j * n + i] for i in range(n) for j in range(n))
        return DenseMatrix(n, data, self.kind)

    def nnz(self, zero_tolerance: float = 0.0) -> int:
        return sum(1 for v in self.data if abs(v) > zero_tolerance)

    def to_kind(self, kind: str) -> "DenseMatrix":
        if kind == self.kind:
            return self
        return DenseMatrix(self.n, tuple(coerce_value(v, kind) for v in self.data), kind)


@dataclass(frozen=True)
class CrsMatrix:
    """Compressed-row storage: rptrs[i]..rptrs[i+1] index the nonzeros of row i."""

    n: int
    rptrs: Tuple[int, ...]
    cids: Tuple[int, ...]
    vals: Tuple[Scalar, ...]
    kind: str

    def __post_init__(self):
        _check_n(self.n)
        _validate_compressed(self.n, self.rptrs, self.cids, self.vals, self.kind, "row")

    @property
    def nnz(self) -> int:
        return self.rptrs[self.n]

    def row_slice(self, i: int) -> Tuple[Tuple[int, ...], Tuple[Scalar, ...]]:
        lo, hi = self.rptrs[i], self.rptrs[i + 1]
        return self.cids[lo:hi], self.vals[lo:hi]

    def triplets(self) -> List[Tuple[int, int, Scalar]]:
        out = []
        for i in range(self.n):
            for k in range(self.rptrs[i], self.rptrs[i + 1]):
                out.append((i, self.cids[k], self.vals[k]))
        return out


@dataclass(frozen=True)
class CcsMatrix:
    """Compressed-column storage: cptrs[j]..cptrs[j+1] index the nonzeros of column j."""

    n: int
    cptrs: Tuple[int, ...]
    rids: Tuple[int, ...]
    vals: Tuple[Scalar, ...]
    kind: str

    def __post_init__(self):
        _check_n(self.n)
        _validate_compressed(self.n, self.cptrs, self.rids, self.vals, self.kind, "column")

    @property
    def nnz(self) -> int:
        return self.cptrs[self.n]

    def col_slice(self, j: int) -> Tuple[Tuple[int, ...], Tuple[Scalar, ...]]:
        lo, hi = self.cptrs[j], self.cptrs[j + 1]
        return self.rids[lo:hi], self.vals[lo:hi]

    def triplets(self) -> List[Tuple[int, int, Scalar]]:
        out = []
        for j in range(self.n):
            for k in range(self.cptrs[j], self.cptrs[j + 1]):
                out.append((self.rids[k], j, self.vals[k]))
        return out


def _validate_compressed(n, ptrs, ids, vals, kind, axis: str) -> None:
    if kind not in KINDS:
        raise StructureError(f"unknown kind {kind!r}")
    if len(ptrs) != n + 1:
        raise StructureError(f"{axis} pointer array has length {len(ptrs)}, expected {n + 1}")
    if ptrs[0] != 0:
        raise StructureError(f"{axis} pointers must start at 0")
    for a, b in zip(ptrs, ptrs[1:]):
        if b < a:
            raise StructureError(f"{axis} pointers must be nondecreasing")
    if len(ids) != ptrs[n] or len(vals) != ptrs[n]:
        raise StructureError(
            f"{axis} storage length mismatch: ptrs say {ptrs[n]}, got {len(ids)} ids / {len(vals)} values"
        )
    for k in range(n):
        prev = -1
        for p in range(ptrs[k], ptrs[k + 1]):
            idx = ids[p]
            if not 0 <= idx < n:
                raise StructureError(f"index {idx} out of range in {axis} {k}")
            if idx <= prev:
                raise StructureError(f"indices must be strictly increasing within {axis} {k}")
            prev = idx
            if not _is_finite(vals[p]):
                raise StructureError(f"non-finite value {vals[p]!r}")


@dataclass(frozen=True)
class SparsePair:
    """CRS and CCS views of the same nonzero set.

    The kernels read columns (CCS) while updating per-row state seeded from
    row sums (CRS), so both layouts travel together.
    """

    crs: CrsMatrix
    ccs: CcsMatrix

    def __post_init__(self):
        if self.crs.n != self.ccs.n:
            raise StructureError("CRS and CCS disagree on matrix order")
        if self.crs.nnz != self.ccs.nnz:
            raise StructureError("CRS and CCS disagree on nonzero count")
        if self.crs.kind != self.ccs.kind:
            raise StructureError("CRS and CCS disagree on scalar kind")

    @property
    def n(self) -> int:
        return self.crs.n

    @property
    def nnz(self) -> int:
        return self.crs.nnz

    @property
    def kind(self) -> str:
        return self.crs.kind

    def validate(self) -> None:
        """Full consistency check: both layouts must describe identical triplets."""
        if sorted(self.crs.triplets()) != sorted(self.ccs.triplets()):
            raise StructureError("CRS and CCS describe different nonzero sets")

    def transpose(self) -> "SparsePair":
        # Transposition swaps the roles of the two layouts.
        crs_t = CrsMatrix(self.ccs.n, self.ccs.cptrs, self.ccs.rids, self.ccs.vals, self.kind)
        ccs_t = CcsMatrix(self.crs.n, self.crs.rptrs, self.crs.cids, self.crs.vals, self.kind)
        return SparsePair(crs_t, ccs_t)


def sparse_from_triplets(n: int, triplets: Iterable[Tuple[int, int, Scalar]], kind: str) -> SparsePair:
    """Build a SparsePair from (row, col, value) triplets, dropping exact zeros.

    Duplicate coordinates are a structural error.
    """
    _check_n(n)
    items = [(i, j, coerce_value(v, kind)) for (i, j, v) in triplets if v != 0]
    for (i, j, _) in items:
        if not (0 <= i < n and 0 <= j < n):
            raise StructureError(f"triplet index ({i}, {j}) out of range for n={n}")
    seen = set()
    for (i, j, _) in items:
        if (i, j) in seen:
            raise StructureError(f"duplicate entry at ({i}, {j})")
        seen.add((i, j))

    by_row = sorted(items)
    rptrs = [0] * (n + 1)
    for (i, _, _) in by_row:
        rptrs[i + 1] += 1
    for i in range(n):
        rptrs[i + 1] += rptrs[i]
    crs = CrsMatrix(n, tuple(rptrs), tuple(j for (_, j, _) in by_row),
                    tuple(v for (_, _, v) in by_row), kind)

    by_col = sorted(items, key=lambda t: (t[1], t[0]))
    cptrs = [0] * (n + 1)
    for (_, j, _) in by_col:
        cptrs[j + 1] += 1
    for j in range(n):
        cptrs[j + 1] += cptrs[j]
    ccs = CcsMatrix(n, tuple(cptrs), tuple(i for (i, _, _) in by_col),
                    tuple(v for (_, _, v) in by_col), kind)
    return SparsePair(crs, ccs)


def dense_to_sparse(a: DenseMatrix, zero_tolerance: float = 0.0) -> SparsePair:
    """Sparsify, dropping entries with |a_ij| <= zero_tolerance."""
    if zero_tolerance < 0:
        raise StructureError("zero_tolerance must be nonnegative")
    trips = []
    for i in range(a.n):
        for j in range(a.n):
            v = a.entry(i, j)
            if abs(v) > zero_tolerance:
                trips.append((i, j, v))
    return sparse_from_triplets(a.n, trips, a.kind)


def sparse_to_dense(s: SparsePair) -> DenseMatrix:
    """Densify. Raises StructureError if the CRS and CCS views disagree."""
    s.validate()
    n = s.n
    zero: Scalar = {KIND_REAL: 0.0, KIND_COMPLEX: 0j, KIND_INT: 0}[s.kind]
    grid: List[Scalar] = [zero] * (n * n)
    for (i, j, v) in s.crs.triplets():
        grid[i * n + j] = v
    return DenseMatrix(n, tuple(grid), s.kind)


def density(s: SparsePair) -> float:
    """Fraction of stored nonzeros: nnz / n^2."""
    return s.nnz / (s.n * s.n)


def row_sums(a: Union[DenseMatrix, SparsePair]) -> List[Scalar]:
    """Per-row sums in ascending column order (the kernel seeding order)."""
    if isinstance(a, DenseMatrix):
        out = []
        for i in range(a.n):
            acc = a.data[i * a.n]
            for j in range(1, a.n):
                acc = acc + a.data[i * a.n + j]
            out.append(acc)
        return out
    crs = a.crs
    zero: Scalar = {KIND_REAL: 0.0, KIND_COMPLEX: 0j, KIND_INT: 0}[crs.kind]
    out = []
    for i in range(crs.n):
        lo, hi = crs.rptrs[i], crs.rptrs[i + 1]
        if lo == hi:
            out.append(zero)
            continue
        acc = crs.vals[lo]
        for k in range(lo + 1, hi):
            acc = acc + crs.vals[k]
        out.append(acc)
    return out
