# ellbench/services/matrix_market.py

"""Matrix Market coordinate files (real, general or symmetric) for dense and ELLPACK matrices."""

import logging
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import scipy.io
import scipy.sparse

from ellbench.errors import MatrixMarketError
from ellbench.models.matrices import DenseMatrix, EllpackMatrix
from ellbench.services.ellpack_core import from_coordinates
from ellbench.services.worker_pool import Runtime

logger = logging.getLogger(__name__)

SUPPORTED_FIELDS = ('real', 'integer')
SUPPORTED_SYMMETRIES = ('general', 'symmetric')


def _read_coordinates(path) -> Tuple[int, np.ndarray, np.ndarray, np.ndarray]:
    path = Path(path)
    try:
        rows, cols, entries, fmt, field, symmetry = scipy.io.mminfo(str(path))
    except ValueError as exc:
        raise MatrixMarketError(f"{path}: not a Matrix Market file ({exc})") from exc

    if fmt != 'coordinate':
        raise MatrixMarketError(f"{path}: format {fmt!r} not supported, expected coordinate")
    if field not in SUPPORTED_FIELDS:
        raise MatrixMarketError(f"{path}: field {field!r} not supported, expected real")
    if symmetry not in SUPPORTED_SYMMETRIES:
        raise MatrixMarketError(f"{path}: symmetry {symmetry!r} not supported")
    if rows != cols:
        raise MatrixMarketError(f"{path}: matrix is {rows}x{cols}, expected square")

    try:
        coo = scipy.sparse.coo_matrix(scipy.io.mmread(str(path)))
    except ValueError as exc:
        raise MatrixMarketError(f"{path}: {exc}") from exc
    coo.sum_duplicates()
    logger.debug(f"Read {path}: n={rows} entries={entries} symmetry={symmetry}")
    return rows, coo.row, coo.col, coo.data.astype(np.float64)


def _write_coordinates(path, n: int, rows, cols, vals, symmetric: bool):
    if symmetric:
        lower = rows >= cols
        rows, cols, vals = rows[lower], cols[lower], vals[lower]
    coo = scipy.sparse.coo_matrix((vals, (rows, cols)), shape=(n, n))
    scipy.io.mmwrite(str(path), coo, field='real', precision=17,
                     symmetry='symmetric' if symmetric else 'general')
    logger.info(f"Wrote {path} (n={n}, entries={coo.nnz}, symmetric={symmetric})")


def read_dense(path) -> DenseMatrix:
    n, rows, cols, vals = _read_coordinates(path)
    values = np.zeros((n, n))
    values[rows, cols] = vals
    return DenseMatrix(values, symmetric=bool(np.array_equal(values, values.T)))


def write_dense(path, d: DenseMatrix, symmetric: Optional[bool] = None):
    """
    Write the nonzero entries of d; symmetric files keep only the lower triangle.

    symmetric=None detects exact symmetry.
    """
    if symmetric is None:
        symmetric = bool(np.array_equal(d.values, d.values.T))
    rows, cols = np.nonzero(d.values)
    _write_coordinates(path, d.n, rows, cols, d.values[rows, cols], symmetric)


def read_ellpack(path, threshold: float = 0.0, m_max: Optional[int] = None,
                 runtime: Optional[Runtime] = None) -> EllpackMatrix:
    n, rows, cols, vals = _read_coordinates(path)
    return from_coordinates(n, rows, cols, vals, threshold=threshold, m_max=m_max, runtime=runtime)


def write_ellpack(path, a: EllpackMatrix, symmetric: Optional[bool] = None):
    mask = a.stored_mask()
    rows, _ = np.nonzero(mask)
    cols = a.col_index[mask].astype(np.int64)
    vals = a.values[mask]
    if symmetric is None:
        forward = scipy.sparse.coo_matrix((vals, (rows, cols)), shape=(a.n, a.n)).tocsr()
        symmetric = (forward != forward.T).nnz == 0
    _write_coordinates(path, a.n, rows, cols, vals, symmetric)
