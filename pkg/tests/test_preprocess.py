import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import DEMO6_POSITIONS
from oracles import matching_count, perm_expansion

from permkit.errors import DecompTimeout, StructureError
from permkit.kernels import perm_naive
from permkit.matrix import DenseMatrix, SparsePair, dense_to_sparse, sparse_from_triplets, sparse_to_dense
from permkit.preprocess import (
    BipartiteGraph,
    DmResult,
    SingularVerdict,
    d1compress,
    d2compress,
    d34compress,
    decomp_run,
    decomp_ryser,
    dm_decompose,
    dm_filter,
    max_matching,
    min_nnz_row_col,
)


def random_sparse(n, seed, density=0.5, kind="integer"):
    rng = random.Random(seed)
    trips = []
    for i in range(n):
        for j in range(n):
            if rng.random() < density:
                if kind == "integer":
                    v = rng.choice([-3, -2, -1, 1, 2, 3])
                elif kind == "complex128":
                    v = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
                else:
                    v = rng.uniform(-3.0, 3.0)
                trips.append((i, j, v))
    if not trips:
        trips = [(0, 0, 1 if kind == "integer" else 1.0)]
    return sparse_from_triplets(n, trips, kind=kind)


def dense_rows(s: SparsePair):
    return sparse_to_dense(s).rows()


# ---------------------------------------------------------------------------
# matching


@given(st.integers(min_value=1, max_value=8), st.integers(min_value=0, max_value=10**6))
@settings(max_examples=100, deadline=None)
def test_matching_is_valid_and_maximal(n, seed):
    s = random_sparse(n, seed, density=0.4)
    m = max_matching(BipartiteGraph.from_sparse(s))
    # validity: matched pairs are actual entries, no column reused
    seen_cols = set()
    size = 0
    for r, c in enumerate(m.row_to_col):
        if c < 0:
            continue
        size += 1
        assert c not in seen_cols
        seen_cols.add(c)
        assert any(j == c for (i, j, _) in s.crs.triplets() if i == r)
        assert m.col_to_row[c] == r
    assert size == m.size
    assert m.perfect == (size == n)
    # perfect matching exists iff the 0/1 support has a nonzero permanent
    support = [[1 if any(i == r and j == c for (r, c, _) in s.crs.triplets()) else 0 for j in range(n)] for i in range(n)]
    assert m.perfect == (matching_count(support) > 0)


def test_matching_deterministic():
    s = random_sparse(7, seed=99, density=0.5)
    a = max_matching(BipartiteGraph.from_sparse(s))
    b = max_matching(BipartiteGraph.from_sparse(s))
    assert a.row_to_col == b.row_to_col


# ---------------------------------------------------------------------------
# matching filter


def demo_matrix():
    trips = [(r, c, k + 1) for k, (r, c) in enumerate(DEMO6_POSITIONS)]
    return sparse_from_triplets(6, trips, kind="integer")


def test_dm_demo_fixture():
    s = demo_matrix()
    res = dm_decompose(s)
    assert isinstance(res, DmResult)
    assert res.nnz_before == 13
    assert res.nnz_after == 9
    assert len(res.removed) == 4
    assert res.labeling.count == 4
    # value preserved exactly
    before = perm_expansion(dense_rows(s))
    after = perm_expansion(dense_rows(res.filtered))
    assert before == after
    # matched entries all survive
    removed = set(res.removed)
    for r, c in enumerate(res.matching.row_to_col):
        assert (r, c) not in removed


def test_dm_lower_triangular_reduces_to_diagonal():
    n = 8
    trips = [(i, j, 1) for i in range(n) for j in range(i + 1)]
    s = sparse_from_triplets(n, trips, kind="integer")
    res = dm_decompose(s)
    assert isinstance(res, DmResult)
    assert res.labeling.count == n
    assert res.nnz_after == n
    assert all(i == j for (i, j, _) in res.filtered.crs.triplets())
    assert perm_expansion(dense_rows(res.filtered)) == 1


def test_dm_singular_matrix():
    # a zero column makes every matching miss it
    trips = [(i, j, 1) for i in range(4) for j in range(3)]
    s = sparse_from_triplets(4, trips, kind="integer")
    verdict = dm_filter(s)
    assert isinstance(verdict, SingularVerdict)
    assert verdict.value == 0
    assert perm_expansion(dense_rows(s)) == 0


@given(st.integers(min_value=2, max_value=8), st.integers(min_value=0, max_value=10**6))
@settings(max_examples=100, deadline=None)
def test_dm_preserves_permanent(n, seed):
    s = random_sparse(n, seed, density=0.45)
    out = dm_filter(s)
    want = perm_expansion(dense_rows(s))
    if isinstance(out, SingularVerdict):
        assert want == 0
    else:
        assert perm_expansion(dense_rows(out)) == want
        assert out.crs.nnz <= s.crs.nnz


# ---------------------------------------------------------------------------
# pivot selection


def test_min_nnz_prefers_rows_then_low_index():
    # row 1 and col 2 both have a single nonzero: the row wins
    s = sparse_from_triplets(
        3, [(0, 0, 1), (0, 1, 1), (1, 2, 1), (2, 0, 1), (2, 1, 1)], kind="integer"
    )
    pick = min_nnz_row_col(s)
    assert (pick.axis, pick.index, pick.count) == ("row", 1, 1)

    t = sparse_from_triplets(
        2, [(0, 0, 1), (0, 1, 1), (1, 0, 1), (1, 1, 1)], kind="integer"
    )
    pick = min_nnz_row_col(t)
    assert (pick.axis, pick.index) == ("row", 0)


# ---------------------------------------------------------------------------
# compression identities


def forced_sparse(n, seed, row_count):
    """Random matrix whose row 0 has exactly row_count nonzeros."""
    rng = random.Random(seed)
    trips = []
    cols = rng.sample(range(n), row_count)
    for j in cols:
        trips.append((0, j, rng.choice([-3, -2, -1, 1, 2, 3])))
    for i in range(1, n):
        for j in range(n):
            if rng.random() < 0.6:
                trips.append((i, j, rng.choice([-2, -1, 1, 2])))
    return sparse_from_triplets(n, trips, kind="integer")


@given(st.integers(min_value=3, max_value=7), st.integers(min_value=0, max_value=10**6))
@settings(max_examples=80, deadline=None)
def test_d1_identity(n, seed):
    s = forced_sparse(n, seed, 1)
    alpha, minor = d1compress(s, "row", 0)
    assert minor.n == n - 1
    assert perm_expansion(dense_rows(s)) == alpha * perm_expansion(dense_rows(minor))


@given(st.integers(min_value=3, max_value=7), st.integers(min_value=0, max_value=10**6))
@settings(max_examples=80, deadline=None)
def test_d2_identity(n, seed):
    s = forced_sparse(n, seed, 2)
    folded = d2compress(s, "row", 0)
    assert folded.n == n - 1
    assert perm_expansion(dense_rows(s)) == perm_expansion(dense_rows(folded))


@given(
    st.integers(min_value=4, max_value=7),
    st.integers(min_value=0, max_value=10**6),
    st.integers(min_value=3, max_value=4),
)
@settings(max_examples=80, deadline=None)
def test_d34_split_identity(n, seed, count):
    s = forced_sparse(n, seed, count)
    zeroed, folded = d34compress(s, "row", 0)
    assert zeroed.n == n and folded.n == n - 1
    assert zeroed.crs.nnz == s.crs.nnz - 2
    want = perm_expansion(dense_rows(s))
    assert want == perm_expansion(dense_rows(zeroed)) + perm_expansion(dense_rows(folded))


def test_column_compressions_via_transpose():
    s = forced_sparse(5, seed=77, row_count=2).transpose()
    folded = d2compress(s, "col", 0)
    assert perm_expansion(dense_rows(s)) == perm_expansion(dense_rows(folded))


def test_compress_rejects_wrong_counts():
    s = forced_sparse(5, seed=3, row_count=3)
    with pytest.raises(StructureError):
        d1compress(s, "row", 0)
    with pytest.raises(StructureError):
        d2compress(s, "row", 0)
    t = forced_sparse(5, seed=4, row_count=2)
    with pytest.raises(StructureError):
        d34compress(t, "row", 0)


# ---------------------------------------------------------------------------
# full decomposition driver


@pytest.mark.parametrize("kind", ["integer", "real64", "complex128"])
def test_decomp_matches_expansion(kind):
    for seed in range(12):
        s = random_sparse(6, seed=1000 + seed, density=0.45, kind=kind)
        value, stats = decomp_run(s)
        want = perm_expansion(dense_rows(s))
        if kind == "integer":
            assert value == want
        else:
            assert abs(value - want) <= 1e-10 * max(1.0, abs(want))
        assert stats.tasks_created >= 1
        assert stats.elapsed >= 0.0


def test_decomp_handles_trivial_cases():
    one = sparse_from_triplets(1, [(0, 0, 5)], kind="integer")
    value, stats = decomp_run(one)
    assert value == 5
    empty_row = sparse_from_triplets(2, [(0, 0, 1)], kind="integer")
    value, _ = decomp_run(empty_row)
    assert value == 0


def test_decomp_task_budget():
    s = random_sparse(8, seed=55, density=0.6)
    with pytest.raises(DecompTimeout) as err:
        decomp_run(s, task_limit=1)
    assert err.value.tasks_done >= 1

    with pytest.raises(DecompTimeout):
        decomp_run(s, time_limit=0.0)


def test_decomp_dense_leaf_dispatch():
    # dense leaves go to the dense kernel once density crosses the threshold
    s = random_sparse(7, seed=91, density=0.95)
    _, stats = decomp_run(s, min_nnz_threshold=4)
    assert stats.dense_kernel_leaves >= 1


def test_decomp_ryser_name():
    s = random_sparse(5, seed=7, density=0.5)
    assert decomp_ryser(s) == perm_expansion(dense_rows(s))


def test_decomp_agrees_with_walk_engine():
    from permkit.kernels import perm_spa

    for seed in (5, 6, 7):
        s = random_sparse(7, seed=seed, density=0.4, kind="real64")
        value, _ = decomp_run(s)
        walk = perm_spa(s)
        assert abs(value - walk) <= 1e-9 * max(1.0, abs(walk))
