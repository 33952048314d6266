import sys
from pathlib import Path

import pytest

# make the sibling oracles module importable from every test file
sys.path.insert(0, str(Path(__file__).parent))

from permkit.matrix import sparse_from_triplets

DATA_DIR = Path(__file__).parent.parent / "data"

# 6x6 demo: diagonal matching, one 3-cycle of matched pairs, 4 crossing entries
DEMO6_POSITIONS = (
    (0, 0), (0, 2), (1, 0), (1, 1), (2, 1), (2, 2),
    (3, 0), (3, 3), (3, 5), (4, 2), (4, 4), (5, 1), (5, 5),
)

# frozen {-1,0,1} matrix (random_ternary(12, 20260816, 0.30)); every signed
# product and partial sum is exactly representable in binary64, permanent = 2
TERNARY12 = (
    (-1,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  1),
    ( 0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0, -1),
    (-1,  0, -1,  1,  0,  0,  0,  1,  0,  1,  1,  0),
    ( 1,  0,  0,  1,  0, -1,  0, -1,  0, -1,  1,  0),
    ( 0,  1,  1,  0, -1,  0,  0,  0,  0,  0,  0,  0),
    ( 0,  0,  0,  1,  0,  1,  0,  0,  0,  1,  0, -1),
    ( 0,  1,  0,  0,  0,  0,  1,  1,  0,  0, -1,  0),
    ( 0,  0,  0,  1,  0,  0,  0,  0,  0,  0,  0, -1),
    ( 0,  0,  0,  1,  0,  1,  0, -1,  0,  1,  1,  0),
    ( 0,  0,  0,  1,  0,  0,  0,  1,  1,  0,  0, -1),
    ( 1,  0,  1,  0,  0, -1, -1,  0,  0,  0,  0,  0),
    (-1,  0,  1,  0,  0,  0,  1,  0,  1,  0,  1, -1),
)


@pytest.fixture
def demo6_sparse():
    trips = [(i, j, k + 1) for k, (i, j) in enumerate(DEMO6_POSITIONS)]
    return sparse_from_triplets(6, trips, "integer")


@pytest.fixture
def demo6_path():
    return DATA_DIR / "demo6x6.mtx"
