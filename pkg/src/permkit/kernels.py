"""Serial permanent kernels.

Four entry points, in increasing sophistication:

* ``perm_naive``        -- sum over all n! permutations (oracle, n <= 10);
* ``perm_ryser_basic``  -- inclusion-exclusion over all 2^n column subsets,
                           recomputing row sums from scratch (independent
                           oracle, n <= 30);
* ``perm_nw``           -- half-space Gray walk with running per-row state,
                           O(n 2^(n-1));
* ``perm_spa``          -- the same walk on compressed sparse storage,
                           touching only the nonzeros of the changed column.

``perm_nw`` and ``perm_spa`` share their inner loops with the parallel
engine; a chunk of the walk is a plain function over an iterate range, so
the serial kernel is just the full-range chunk seeded with the initial
product.

Integer-exact matrices take a dedicated path that keeps the doubled state
y = 2x (the initial state subtracts half the row sum, which would otherwise
leave the integers), accumulates exactly, and divides the signed total by
2^(n-1) at the end; divisibility is asserted. Binary 0/1 matrices therefore
get exact matching counts.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Tuple, Union

import numpy as np

from . import _loops
from .errors import PolicyError
from .graycode import changed_bit
from .matrix import (
    KIND_COMPLEX,
    KIND_INT,
    KIND_REAL,
    DenseMatrix,
    Scalar,
    SparsePair,
    row_sums,
)
from .precision import (
    AccumulatorPolicy,
    DoubleDouble,
    dd_mul_double,
)

_POLICY_CODE = {
    AccumulatorPolicy.DD: _loops.POLICY_DD,
    AccumulatorPolicy.KAHAN: _loops.POLICY_KAHAN,
    AccumulatorPolicy.DQ: _loops.POLICY_DQ,
    AccumulatorPolicy.QQ: _loops.POLICY_QQ,
}


def _sign_factor(n: int) -> int:
    # 4*(n mod 2) - 2: +2 for odd n, -2 for even n.
    return 4 * (n % 2) - 2


def total_iterates(n: int) -> int:
    """Number of Gray-walk iterates beyond the initial state: 2^(n-1) - 1."""
    return (1 << (n - 1)) - 1


# ---------------------------------------------------------------------------
# state builders shared with the parallel engine


def dense_float_state(a: DenseMatrix) -> Tuple[np.ndarray, np.ndarray]:
    """(cols, x0) for the float64 walk.

    cols[j, i] holds a_ij for the n-1 toggled columns; x0 seeds each row with
    its last-column entry minus half the row sum.
    """
    n = a.n
    grid = np.array(a.rows(), dtype=np.float64)
    cols = np.ascontiguousarray(grid[:, : n - 1].T) if n > 1 else np.empty((0, 1))
    rs = np.empty(n, dtype=np.float64)
    sums = row_sums(a)
    for i in range(n):
        rs[i] = sums[i]
    x0 = grid[:, n - 1] - rs / 2.0
    return cols, np.ascontiguousarray(x0)


def dense_complex_state(a: DenseMatrix) -> Tuple[np.ndarray, np.ndarray]:
    n = a.n
    grid = np.array(a.rows(), dtype=np.complex128)
    cols = np.ascontiguousarray(grid[:, : n - 1].T) if n > 1 else np.empty((0, 1), dtype=np.complex128)
    rs = np.empty(n, dtype=np.complex128)
    sums = row_sums(a)
    for i in range(n):
        rs[i] = sums[i]
    x0 = grid[:, n - 1] - rs / 2.0
    return cols, np.ascontiguousarray(x0)


def dense_int_state(a: DenseMatrix) -> Tuple[List[Tuple[int, ...]], List[int]]:
    """(doubled columns, y0) for the integer-exact walk, y = 2x."""
    n = a.n
    cols2 = [tuple(2 * a.entry(i, j) for i in range(n)) for j in range(n - 1)]
    sums = row_sums(a)
    y0 = [2 * a.entry(i, n - 1) - sums[i] for i in range(n)]
    return cols2, y0


def sparse_float_state(s: SparsePair) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(cptrs, rids, cvals, x0) arrays for the sparse float64 walk."""
    ccs = s.ccs
    n = s.n
    cptrs = np.array(ccs.cptrs, dtype=np.int64)
    rids = np.array(ccs.rids, dtype=np.int64)
    cvals = np.array(ccs.vals, dtype=np.float64)
    x0 = np.zeros(n, dtype=np.float64)
    rows_last, vals_last = ccs.col_slice(n - 1)
    for r, v in zip(rows_last, vals_last):
        x0[r] = v
    sums = row_sums(s)
    for i in range(n):
        x0[i] = x0[i] - sums[i] / 2.0
    return cptrs, rids, cvals, x0


def sparse_complex_state(s: SparsePair) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    ccs = s.ccs
    n = s.n
    cptrs = np.array(ccs.cptrs, dtype=np.int64)
    rids = np.array(ccs.rids, dtype=np.int64)
    cvals = np.array(ccs.vals, dtype=np.complex128)
    x0 = np.zeros(n, dtype=np.complex128)
    rows_last, vals_last = ccs.col_slice(n - 1)
    for r, v in zip(rows_last, vals_last):
        x0[r] = v
    sums = row_sums(s)
    for i in range(n):
        x0[i] = x0[i] - sums[i] / 2.0
    return cptrs, rids, cvals, x0


def sparse_int_state(s: SparsePair) -> Tuple[List[Tuple[int, ...]], List[Tuple[int, ...]], List[int]]:
    """(column rows, doubled column values, y0) for the sparse integer walk."""
    ccs = s.ccs
    n = s.n
    colrows = []
    colvals2 = []
    for j in range(n - 1):
        rows, vals = ccs.col_slice(j)
        colrows.append(tuple(rows))
        colvals2.append(tuple(2 * v for v in vals))
    y0 = [0] * n
    rows_last, vals_last = ccs.col_slice(n - 1)
    for r, v in zip(rows_last, vals_last):
        y0[r] = 2 * v
    sums = row_sums(s)
    for i in range(n):
        y0[i] = y0[i] - sums[i]
    return colrows, colvals2, y0


def policy_product(xs, policy: AccumulatorPolicy) -> Union[float, DoubleDouble]:
    """Product of the state entries in the policy's inner precision."""
    if policy is AccumulatorPolicy.QQ:
        acc = DoubleDouble(1.0, 0.0)
        for v in xs:
            acc = dd_mul_double(acc, float(v))
        return acc
    prod = 1.0
    for v in xs:
        prod = prod * float(v)
    return prod


def seed_accumulator(p0: Union[float, DoubleDouble], policy: AccumulatorPolicy) -> Tuple[float, float]:
    """Initial (acc_a, acc_b) pair holding the g = 0 product."""
    if policy is AccumulatorPolicy.QQ:
        assert isinstance(p0, DoubleDouble)
        return p0.hi, p0.lo
    return float(p0), 0.0


def collapse_accumulator(acc_a: float, acc_b: float, policy: AccumulatorPolicy) -> float:
    """Fold the policy payload to a single double (logical value)."""
    if policy is AccumulatorPolicy.DD:
        return acc_a
    return acc_a + acc_b


# ---------------------------------------------------------------------------
# oracles


@lru_cache(maxsize=None)
def _perm_index_array(n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(n))), dtype=np.int8)


def _perm_blocks(n: int):
    """Permutation index arrays in blocks; cached whole for n <= 9."""
    if n <= 9:
        yield _perm_index_array(n)
        return
    it = itertools.permutations(range(n))
    while True:
        block = list(itertools.islice(it, 131072))
        if not block:
            return
        yield np.array(block, dtype=np.int8)


def perm_naive(a: DenseMatrix) -> Scalar:
    """Permanent by direct permutation enumeration. Oracle-grade; n <= 10."""
    if a.n > 10:
        raise ValueError("perm_naive is limited to n <= 10")
    n = a.n
    if a.kind == KIND_INT:
        total = 0
        rows = a.rows()
        for sigma in itertools.permutations(range(n)):
            prod = 1
            for i in range(n):
                prod *= rows[i][sigma[i]]
            total += prod
        return total
    dtype = np.complex128 if a.kind == KIND_COMPLEX else np.float64
    grid = np.array(a.rows(), dtype=dtype)
    rows_idx = np.arange(n)
    total = 0.0 if a.kind == KIND_REAL else 0j
    for block in _perm_blocks(n):
        picked = grid[rows_idx[None, :], block]
        total = total + picked.prod(axis=1).sum()
    return complex(total) if a.kind == KIND_COMPLEX else float(total)


def perm_ryser_basic(a: DenseMatrix) -> Scalar:
    """Permanent by inclusion-exclusion over all column subsets.

    Kept deliberately independent of the Gray-walk machinery: every subset
    recomputes its row sums from scratch. O(n^2 2^n); n <= 30.
    """
    if a.n > 30:
        raise ValueError("perm_ryser_basic is limited to n <= 30")
    n = a.n
    rows = a.rows()
    if a.kind == KIND_INT:
        total = 0
    elif a.kind == KIND_COMPLEX:
        total = 0j
    else:
        total = 0.0
    for mask in range(1, 1 << n):
        size = mask.bit_count()
        if a.kind == KIND_INT:
            prod = 1
        elif a.kind == KIND_COMPLEX:
            prod = complex(1.0)
        else:
            prod = 1.0
        for i in range(n):
            row = rows[i]
            srow = None
            m = mask
            j = 0
            while m:
                if m & 1:
                    srow = row[j] if srow is None else srow + row[j]
                m >>= 1
                j += 1
            prod = prod * srow
            if prod == 0:
                break
        if size & 1:
            total = total - prod
        else:
            total = total + prod
    if n % 2:
        total = -total
    return total


# ---------------------------------------------------------------------------
# Gray-walk kernels


def _finalize_int(total_y: int, n: int) -> int:
    signed = total_y if n % 2 else -total_y
    q, r = divmod(signed, 1 << (n - 1))
    assert r == 0, "integer-exact walk produced a non-divisible total"
    return q


def perm_nw(a: DenseMatrix, policy: AccumulatorPolicy = AccumulatorPolicy.DD) -> Scalar:
    """Permanent via the running-state Gray walk over half the subsets."""
    n = a.n
    end = total_iterates(n)
    if a.kind == KIND_INT:
        cols2, y = dense_int_state(a)
        p0 = 1
        for v in y:
            p0 *= v
        total = p0 + (_loops.chunk_dense_int(cols2, y, 1, end) if end >= 1 else 0)
        return _finalize_int(total, n)
    if a.kind == KIND_COMPLEX:
        if policy is not AccumulatorPolicy.DD:
            raise PolicyError("complex matrices support the plain-double policy only")
        cols, x = dense_complex_state(a)
        p0 = complex(1.0)
        for v in x:
            p0 = p0 * complex(v)
        acc = _loops.chunk_dense_c128(cols, x.copy(), 1, end, p0) if end >= 1 else p0
        return complex(acc) * _sign_factor(n)
    cols, x = dense_float_state(a)
    p0 = policy_product(x, policy)
    acc_a, acc_b = seed_accumulator(p0, policy)
    if end >= 1:
        acc_a, acc_b = _loops.chunk_dense_f64(
            cols, x.copy(), 1, end, _POLICY_CODE[policy], acc_a, acc_b
        )
    return collapse_accumulator(acc_a, acc_b, policy) * _sign_factor(n)


def perm_spa(s: SparsePair, policy: AccumulatorPolicy = AccumulatorPolicy.DD) -> Scalar:
    """Permanent via the Gray walk on compressed sparse storage.

    Structurally inconsistent pairs are rejected before any arithmetic.
    """
    s.validate()
    n = s.n
    end = total_iterates(n)
    if s.kind == KIND_INT:
        colrows, colvals2, y = sparse_int_state(s)
        p0 = 1
        for v in y:
            p0 *= v
        total = p0 + (_loops.chunk_sparse_int(colrows, colvals2, y, 1, end) if end >= 1 else 0)
        return _finalize_int(total, n)
    if s.kind == KIND_COMPLEX:
        if policy is not AccumulatorPolicy.DD:
            raise PolicyError("complex matrices support the plain-double policy only")
        cptrs, rids, cvals, x = sparse_complex_state(s)
        p0 = complex(1.0)
        for v in x:
            p0 = p0 * complex(v)
        acc = (
            _loops.chunk_sparse_c128(cptrs, rids, cvals, x.copy(), 1, end, p0)
            if end >= 1
            else p0
        )
        return complex(acc) * _sign_factor(n)
    cptrs, rids, cvals, x = sparse_float_state(s)
    p0 = policy_product(x, policy)
    acc_a, acc_b = seed_accumulator(p0, policy)
    if end >= 1:
        acc_a, acc_b = _loops.chunk_sparse_f64(
            cptrs, rids, cvals, x.copy(), 1, end, _POLICY_CODE[policy], acc_a, acc_b
        )
    return collapse_accumulator(acc_a, acc_b, policy) * _sign_factor(n)


# ---------------------------------------------------------------------------
# transparent reference stepping (float/complex kinds)


@dataclass
class RunningState:
    """Step-by-step walk state for float or complex matrices.

    Slow but transparent: each ``advance`` applies one changed-bit update and
    folds the signed product into the partial sum with plain arithmetic. Used
    by tests as the reference against which jump-in initialization and the
    chunk loops are checked.
    """

    a: DenseMatrix
    x: List[Scalar]
    prod: Scalar
    partial: Scalar
    g: int

    @classmethod
    def initial(cls, a: DenseMatrix) -> "RunningState":
        if a.kind == KIND_INT:
            raise ValueError("RunningState covers the float and complex walks")
        n = a.n
        sums = row_sums(a)
        x = [a.entry(i, n - 1) - sums[i] / 2 for i in range(n)]
        prod = 1.0 if a.kind == KIND_REAL else complex(1.0)
        for v in x:
            prod = prod * v
        return cls(a=a, x=x, prod=prod, partial=prod, g=0)

    def advance(self) -> "RunningState":
        g = self.g + 1
        step = changed_bit(g)
        for i in range(self.a.n):
            self.x[i] = self.x[i] + step.s * self.a.entry(i, step.j)
        prod = 1.0 if self.a.kind == KIND_REAL else complex(1.0)
        for v in self.x:
            prod = prod * v
        self.prod = prod
        self.partial = self.partial - prod if g & 1 else self.partial + prod
        self.g = g
        return self

    def value(self) -> Scalar:
        """Permanent implied by the state; meaningful once g reaches the last iterate."""
        return self.partial * _sign_factor(self.a.n)
