"""permkit: exact and precision-hardened matrix permanents.

The permanent is computed by a Gray-code walk over half the column
subsets (O(2^(n-1)) signed products with O(n) or O(nnz-touched) updates),
with:

* dense, sparse (CRS/CCS), and exact-integer walk variants,
* compensated / double-double accumulator policies,
* deterministic chunked parallelism with power-of-2 aligned chunks,
* a matching-based entry filter and few-nonzero compressions for sparse
  inputs, and
* partial-result files for resumable multi-process runs.

Quick use::


    import permkit
    permkit.permanent([[1, 2], [3, 4]])   # 10 (exact: integer entries)
"""

from .errors import (
    DecompTimeout,
    ImpossibleError,
    ParseError,
    PermanentError,
    PolicyError,
    StructureError,
)
from .generate import (
    random_binary,
    random_real,
    random_sparse_int,
    random_sparse_real,
    random_ternary,
    uniform,
)
from .graycode import GrayStep, cbl_sequence, changed_bit, gray_of, subset_columns
from .kernels import (
    perm_naive,
    perm_nw,
    perm_ryser_basic,
    perm_spa,
    total_iterates,
)
from .matrix import (
    CcsMatrix,
    CrsMatrix,
    DenseMatrix,
    Scalar,
    SparsePair,
    dense_to_sparse,
    density,
    sparse_from_triplets,
    sparse_to_dense,
)
from .mmio import ingest, read_dense_text, read_matrix_market, write_matrix_market
from .parallel import (
    ChunkPlan,
    HierarchyPlan,
    PartialResult,
    cbl_alignment_report,
    execute_hierarchy,
    execute_plan,
    fixed_chunk_plan,
    init_x_at,
    initial_product,
    merge_partial_files,
    permanent_chunked,
    plan_chunks,
    plan_hierarchy,
    read_partials_file,
    reduce_partials,
    run_range,
    write_partials_file,
)
from .precision import (
    AccumulatorPolicy,
    DoubleDouble,
    KahanAccumulator,
    dd_add,
    dd_mul,
    kahan_add,
    reference_permanent,
    relative_error,
    two_prod,
    two_sum,
)
from .preprocess import (
    DecompStats,
    DecompTask,
    Matching,
    SccLabeling,
    SingularVerdict,
    d1compress,
    d2compress,
    d34compress,
    decomp_ryser,
    decomp_run,
    dm_decompose,
    dm_filter,
    max_matching,
    min_nnz_row_col,
)
from .selfcheck import run_selfcheck

__version__ = "0.1.0"


def permanent(matrix, policy: "AccumulatorPolicy | str" = AccumulatorPolicy.DD,
              workers: int = 1, aligned: bool = True):
    """Permanent of a square matrix given as rows, DenseMatrix, or SparsePair.

    Integer entries are computed exactly; float/complex entries use the
    Gray-code walk under the given accumulator policy.
    """
    if isinstance(policy, str):
        policy = AccumulatorPolicy.parse(policy)
    if isinstance(matrix, (DenseMatrix, SparsePair)):
        m = matrix
    else:
        m = DenseMatrix.from_rows(matrix)
    return permanent_chunked(m, policy, tau=workers, aligned=aligned)
