"""Batched singular value decompositions of 2x2 matrices.

Factors A = U diag(sigma_max, sigma_min) V* for large batches of real
or complex 2x2 matrices with no overflow, no underflow-induced failure
and no data-dependent branches.  Inputs are first scaled by an exact
power of two, reduced to a non-negative upper-triangular middle factor
by unitary column/row ordering, a row-phase reduction and one Givens
rotation, then the triangle's SVD is solved in closed form and the
factors are assembled.  Identical arithmetic runs at any lane width,
so the vectorized and pointwise paths agree bit for bit.

Quality is measured against a >=106-bit reference in :mod:`.verify`.
"""

from .lanes import LANE_WIDTH, assert_fp_env
from .layout import Batch2x2, MatrixSvd, SvdBatchOut, padded_len
from .driver import RunConfig, run_batch, svd2_chunk, svd2_single
from .verify import Metrics, metrics, oracle_svd2

assert_fp_env()

__all__ = [
    "LANE_WIDTH", "padded_len", "Batch2x2", "SvdBatchOut", "MatrixSvd",
    "RunConfig", "run_batch", "svd2_chunk", "svd2_single",
    "Metrics", "metrics", "oracle_svd2",
]

__version__ = "0.1.0"
