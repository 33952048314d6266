"""Single-source inner loops for the Gray-walk kernels.

Each float/complex loop below is written once in plain Python and, when
numba is importable, compiled as-is with njit(cache=True, nogil=True). The
plain function object stays exported (``*_py``) as the authoritative
semantics; tests assert the compiled path agrees bit for bit, so the fast
path cannot drift. Integer-exact loops stay pure Python: they rely on
arbitrary-width ints.

All loops walk the inclusive iterate range [start, end] of the half-space
subset enumeration, mutate the per-row state x in place, and fold the signed
products into an accumulator passed in (and returned) as a pair of floats
whose meaning depends on the policy code:

  0  plain double           (value, unused)
  1  compensated            (sum, compensation)
  2  double-double partial  (hi, lo), products in plain double
  3  double-double both     (hi, lo), products in double-double

The trailing-zero position of the iterate selects the changed column; the
corresponding Gray-code bit gives the direction. Iterate parity gives the
term sign.
"""

from __future__ import annotations

POLICY_DD = 0
POLICY_KAHAN = 1
POLICY_DQ = 2
POLICY_QQ = 3

_SPLITTER = 134217729.0  # 2**27 + 1


def chunk_dense_f64_py(cols, x, start, end, policy, acc_a, acc_b):
    n = x.shape[0]
    g = start
    while g <= end:
        j = 0
        while ((g >> j) & 1) == 0:
            j += 1
        gray = g ^ (g >> 1)
        if (gray >> j) & 1:
            s = 1.0
        else:
            s = -1.0
        for i in range(n):
            x[i] = x[i] + s * cols[j, i]

        if policy == 3:
            ph = 1.0
            pl = 0.0
            for i in range(n):
                xi = x[i]
                p = ph * xi
                t = _SPLITTER * ph
                ahi = t - (t - ph)
                alo = ph - ahi
                t2 = _SPLITTER * xi
                bhi = t2 - (t2 - xi)
                blo = xi - bhi
                e = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
                e = e + pl * xi
                ph = p + e
                pl = e - (ph - p)
            if g & 1:
                th = -ph
                tl = -pl
            else:
                th = ph
                tl = pl
            s1 = acc_a + th
            bb = s1 - acc_a
            s2 = (acc_a - (s1 - bb)) + (th - bb)
            t1 = acc_b + tl
            bb2 = t1 - acc_b
            t2e = (acc_b - (t1 - bb2)) + (tl - bb2)
            s2 = s2 + t1
            sh = s1 + s2
            sl = s2 - (sh - s1)
            sl = sl + t2e
            acc_a = sh + sl
            acc_b = sl - (acc_a - sh)
        else:
            prod = 1.0
            for i in range(n):
                prod = prod * x[i]
            if g & 1:
                term = -prod
            else:
                term = prod
            if policy == 0:
                acc_a = acc_a + term
            elif policy == 1:
                y = term + acc_b
                t = acc_a + y
                acc_b = (acc_a - t) + y
                acc_a = t
            else:
                s1 = acc_a + term
                bb = s1 - acc_a
                e = (acc_a - (s1 - bb)) + (term - bb)
                e = e + acc_b
                acc_a = s1 + e
                acc_b = e - (acc_a - s1)
        g += 1
    return acc_a, acc_b


def chunk_sparse_f64_py(cptrs, rids, cvals, x, start, end, policy, acc_a, acc_b):
    n = x.shape[0]
    g = start
    while g <= end:
        j = 0
        while ((g >> j) & 1) == 0:
            j += 1
        gray = g ^ (g >> 1)
        if (gray >> j) & 1:
            s = 1.0
        else:
            s = -1.0
        for ptr in range(cptrs[j], cptrs[j + 1]):
            r = rids[ptr]
            x[r] = x[r] + s * cvals[ptr]

        if policy == 3:
            ph = 1.0
            pl = 0.0
            for i in range(n):
                xi = x[i]
                p = ph * xi
                t = _SPLITTER * ph
                ahi = t - (t - ph)
                alo = ph - ahi
                t2 = _SPLITTER * xi
                bhi = t2 - (t2 - xi)
                blo = xi - bhi
                e = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
                e = e + pl * xi
                ph = p + e
                pl = e - (ph - p)
            if g & 1:
                th = -ph
                tl = -pl
            else:
                th = ph
                tl = pl
            s1 = acc_a + th
            bb = s1 - acc_a
            s2 = (acc_a - (s1 - bb)) + (th - bb)
            t1 = acc_b + tl
            bb2 = t1 - acc_b
            t2e = (acc_b - (t1 - bb2)) + (tl - bb2)
            s2 = s2 + t1
            sh = s1 + s2
            sl = s2 - (sh - s1)
            sl = sl + t2e
            acc_a = sh + sl
            acc_b = sl - (acc_a - sh)
        else:
            prod = 1.0
            for i in range(n):
                prod = prod * x[i]
            if g & 1:
                term = -prod
            else:
                term = prod
            if policy == 0:
                acc_a = acc_a + term
            elif policy == 1:
                y = term + acc_b
                t = acc_a + y
                acc_b = (acc_a - t) + y
                acc_a = t
            else:
                s1 = acc_a + term
                bb = s1 - acc_a
                e = (acc_a - (s1 - bb)) + (term - bb)
                e = e + acc_b
                acc_a = s1 + e
                acc_b = e - (acc_a - s1)
        g += 1
    return acc_a, acc_b


def chunk_dense_c128_py(cols, x, start, end, acc):
    # Complex runs plain-double only; no compensated complex arithmetic.
    n = x.shape[0]
    g = start
    while g <= end:
        j = 0
        while ((g >> j) & 1) == 0:
            j += 1
        gray = g ^ (g >> 1)
        if (gray >> j) & 1:
            s = 1.0
        else:
            s = -1.0
        for i in range(n):
            x[i] = x[i] + s * cols[j, i]
        prod = complex(1.0, 0.0)
        for i in range(n):
            prod = prod * x[i]
        if g & 1:
            acc = acc - prod
        else:
            acc = acc + prod
        g += 1
    return acc


def chunk_sparse_c128_py(cptrs, rids, cvals, x, start, end, acc):
    n = x.shape[0]
    g = start
    while g <= end:
        j = 0
        while ((g >> j) & 1) == 0:
            j += 1
        gray = g ^ (g >> 1)
        if (gray >> j) & 1:
            s = 1.0
        else:
            s = -1.0
        for ptr in range(cptrs[j], cptrs[j + 1]):
            r = rids[ptr]
            x[r] = x[r] + s * cvals[ptr]
        prod = complex(1.0, 0.0)
        for i in range(n):
            prod = prod * x[i]
        if g & 1:
            acc = acc - prod
        else:
            acc = acc + prod
        g += 1
    return acc


def chunk_dense_int(cols2, y, start, end):
    """Integer-exact walk on the doubled state y = 2x; returns the signed
    term sum in y-space (caller divides by 2^(n-1) after the global sign)."""
    n = len(y)
    total = 0
    for g in range(start, end + 1):
        j = (g & -g).bit_length() - 1
        gray = g ^ (g >> 1)
        col = cols2[j]
        if (gray >> j) & 1:
            for i in range(n):
                y[i] += col[i]
        else:
            for i in range(n):
                y[i] -= col[i]
        prod = 1
        for v in y:
            prod *= v
        if g & 1:
            total -= prod
        else:
            total += prod
    return total


def chunk_sparse_int(colrows, colvals2, y, start, end):
    """Sparse integer-exact walk; colvals2 holds doubled column values."""
    total = 0
    for g in range(start, end + 1):
        j = (g & -g).bit_length() - 1
        gray = g ^ (g >> 1)
        rows = colrows[j]
        vals = colvals2[j]
        if (gray >> j) & 1:
            for k in range(len(rows)):
                y[rows[k]] += vals[k]
        else:
            for k in range(len(rows)):
                y[rows[k]] -= vals[k]
        prod = 1
        for v in y:
            prod *= v
        if g & 1:
            total -= prod
        else:
            total += prod
    return total


HAVE_NUMBA = False
chunk_dense_f64 = chunk_dense_f64_py
chunk_sparse_f64 = chunk_sparse_f64_py
chunk_dense_c128 = chunk_dense_c128_py
chunk_sparse_c128 = chunk_sparse_c128_py

try:  # pragma: no cover - exercised implicitly by the parity tests
    from numba import njit

    _opts = dict(cache=True, nogil=True)
    chunk_dense_f64 = njit(
        "UniTuple(float64, 2)(float64[:, ::1], float64[::1], int64, int64, int64, float64, float64)",
        **_opts,
    )(chunk_dense_f64_py)
    chunk_sparse_f64 = njit(
        "UniTuple(float64, 2)(int64[::1], int64[::1], float64[::1], float64[::1], int64, int64, int64, float64, float64)",
        **_opts,
    )(chunk_sparse_f64_py)
    chunk_dense_c128 = njit(
        "complex128(complex128[:, ::1], complex128[::1], int64, int64, complex128)",
        **_opts,
    )(chunk_dense_c128_py)
    chunk_sparse_c128 = njit(
        "complex128(int64[::1], int64[::1], complex128[::1], complex128[::1], int64, int64, complex128)",
        **_opts,
    )(chunk_sparse_c128_py)
    HAVE_NUMBA = True
except ImportError:
    pass
