"""Reflected Gray codes and the changed-bit structure of their walk.

The permanent kernels enumerate column subsets in Gray order so that
consecutive subsets differ in exactly one column. Everything here is pure
bit arithmetic on Python ints; iteration indices stay below 2^63 by
construction (matrix order is capped at 63).
"""

from __future__ import annotations

from typing import List, NamedTuple, Set


class GrayStep(NamedTuple):
    """One step of the Gray walk: flipped bit position and its direction."""

    j: int   # bit (column) that changed between g-1 and g
    s: int   # +1 if the bit turned on, -1 if it turned off


def gray_of(g: int) -> int:
    """Reflected Gray code of g: g XOR (g >> 1)."""
    return g ^ (g >> 1)


def changed_bit(g: int) -> GrayStep:
    """Which bit flips between gray_of(g-1) and gray_of(g), and which way.

    The flipped position equals the number of trailing zeros of g; the
    XOR-of-neighbors formula is kept as a debug assertion.
    """
    if g <= 0:
        raise ValueError("changed_bit is defined for g >= 1")
    j = (g & -g).bit_length() - 1
    assert gray_of(g) ^ gray_of(g - 1) == 1 << j
    s = 1 if (gray_of(g) >> j) & 1 else -1
    return GrayStep(j, s)


def subset_columns(g: int, n: int) -> Set[int]:
    """Column subset encoded by iterate g for an n-column matrix.

    Bits of gray_of(g) select among the first n-1 columns; the last column
    is folded into the kernel's initial state and never appears here.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 <= g < (1 << (n - 1)):
        raise ValueError(f"iterate {g} out of range for n={n}")
    code = gray_of(g)
    cols = set()
    j = 0
    while code:
        if code & 1:
            cols.add(j)
        code >>= 1
        j += 1
    return cols


def cbl_sequence(k: int) -> List[int]:
    """Changed-bit locations of the full k-bit Gray walk, built recursively.

    The sequence for k bits is the (k-1)-bit sequence, then bit k-1, then the
    (k-1)-bit sequence reversed; length 2^k - 1. It is a palindrome and equals
    [changed_bit(g).j for g in 1..2^k - 1].
    """
    if not 1 <= k <= 20:
        raise ValueError("cbl_sequence supports 1 <= k <= 20 (length 2^k - 1 explodes)")
    seq: List[int] = [0]
    for b in range(1, k):
        seq = seq + [b] + seq[::-1]
    return seq
