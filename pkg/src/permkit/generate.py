"""Seeded matrix generators for benchmarks and reproduction scripts.

Every generator takes an explicit seed; reports and scripts record it so a
run can be reproduced exactly. Value matrices come back dense, the sparse
generators come back as a CRS/CCS pair.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .matrix import (
    KIND_INT,
    KIND_REAL,
    DenseMatrix,
    SparsePair,
    sparse_from_triplets,
)


def uniform(n: int, a: float = 1.0) -> DenseMatrix:
    """Constant matrix; its permanent is n! * a^n, the standard benchmark."""
    if isinstance(a, int):
        return DenseMatrix.from_rows([[a] * n for _ in range(n)])
    return DenseMatrix.from_rows([[float(a)] * n for _ in range(n)])


def random_real(n: int, seed: int, low: float = -1.0, high: float = 1.0) -> DenseMatrix:
    rng = np.random.default_rng(seed)
    grid = rng.uniform(low, high, size=(n, n))
    return DenseMatrix.from_rows([[float(v) for v in row] for row in grid])


def random_binary(n: int, seed: int, density: float = 0.5) -> DenseMatrix:
    """0/1 matrix of the exact integer kind (permanent = matching count)."""
    rng = np.random.default_rng(seed)
    grid = (rng.random((n, n)) < density).astype(int)
    return DenseMatrix.from_rows([[int(v) for v in row] for row in grid], kind=KIND_INT)


def random_ternary(n: int, seed: int, density: float = 0.5) -> DenseMatrix:
    """Entries in {-1, 0, 1}; nonzeros appear with the given density."""
    rng = np.random.default_rng(seed)
    mask = rng.random((n, n)) < density
    signs = rng.integers(0, 2, size=(n, n)) * 2 - 1
    grid = mask * signs
    return DenseMatrix.from_rows([[int(v) for v in row] for row in grid], kind=KIND_INT)


def random_sparse_real(n: int, density: float, seed: int,
                       low: float = -1.0, high: float = 1.0) -> SparsePair:
    rng = np.random.default_rng(seed)
    mask = rng.random((n, n)) < density
    vals = rng.uniform(low, high, size=(n, n))
    trips = [
        (i, j, float(vals[i, j]))
        for i in range(n)
        for j in range(n)
        if mask[i, j] and vals[i, j] != 0.0
    ]
    return sparse_from_triplets(n, trips, KIND_REAL)


def random_sparse_int(n: int, density: float, seed: int,
                      low: int = -9, high: int = 9) -> SparsePair:
    rng = np.random.default_rng(seed)
    mask = rng.random((n, n)) < density
    vals = rng.integers(low, high + 1, size=(n, n))
    trips = [
        (i, j, int(vals[i, j]))
        for i in range(n)
        for j in range(n)
        if mask[i, j] and vals[i, j] != 0
    ]
    return sparse_from_triplets(n, trips, KIND_INT)


GENERATORS = {
    "uniform": uniform,
    "random-real": random_real,
    "random-binary": random_binary,
    "random-ternary": random_ternary,
    "random-sparse-real": random_sparse_real,
    "random-sparse-int": random_sparse_int,
}


def generate(name: str, n: int, seed: Optional[int] = None,
             fill: float = 1.0, density: float = 0.5):
    """Name-dispatched entry point used by the command line."""
    if name == "uniform":
        return uniform(n, fill)
    if seed is None:
        raise ValueError(f"generator {name!r} needs a seed")
    if name == "random-real":
        return random_real(n, seed)
    if name == "random-binary":
        return random_binary(n, seed, density)
    if name == "random-ternary":
        return random_ternary(n, seed, density)
    if name == "random-sparse-real":
        return random_sparse_real(n, density, seed)
    if name == "random-sparse-int":
        return random_sparse_int(n, density, seed)
    raise ValueError(f"unknown generator {name!r}")
