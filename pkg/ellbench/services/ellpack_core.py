# ellbench/services/ellpack_core.py

"""
ELLPACK storage and threshold-pruned kernels.

Every kernel works on a block of output rows and is dispatched through the
runtime's worker pool; rows are accumulated in a dense scratch row with a
touched-column list, then pruned (|v| > threshold is kept).
"""

import logging
import math
from typing import Optional, Tuple

import numpy as np
from numba import njit

from ellbench.errors import DimensionMismatch, EllpackOverflowError
from ellbench.models.matrices import DenseMatrix, EllpackMatrix
from ellbench.services.micro_kernels import checksum_array
from ellbench.services.worker_pool import Runtime, default_runtime

logger = logging.getLogger(__name__)

NO_OVERFLOW = -1


@njit(nogil=True, cache=True)
def _from_dense_block(d, threshold, vals, cols, nnz, start, stop):
    n = d.shape[1]
    m_max = vals.shape[1]
    for i in range(start, stop):
        count = 0
        for j in range(n):
            if abs(d[i, j]) > threshold:
                count += 1
        if count > m_max:
            return i, count
        slot = 0
        for j in range(n):
            v = d[i, j]
            if abs(v) > threshold:
                vals[i, slot] = v
                cols[i, slot] = j
                slot += 1
        nnz[i] = slot
    return NO_OVERFLOW, 0


@njit(nogil=True, cache=True)
def _flush_row(i, scratch, touched, count, threshold, c_vals, c_cols, c_nnz):
    """Prune the accumulated row into slot storage; returns the surviving count"""
    m_max = c_vals.shape[1]
    kept = 0
    for t in range(count):
        if abs(scratch[touched[t]]) > threshold:
            kept += 1
    if kept > m_max:
        for t in range(count):
            scratch[touched[t]] = 0.0
        return kept
    slot = 0
    for t in range(count):
        j = touched[t]
        v = scratch[j]
        scratch[j] = 0.0
        if abs(v) > threshold:
            c_vals[i, slot] = v
            c_cols[i, slot] = j
            slot += 1
    c_nnz[i] = slot
    return kept


@njit(nogil=True, cache=True)
def _multiply_block(a_vals, a_cols, a_nnz, b_vals, b_cols, b_nnz, threshold,
                    c_vals, c_cols, c_nnz, start, stop):
    n = a_nnz.shape[0]
    m_max = c_vals.shape[1]
    scratch = np.zeros(n)
    marker = np.full(n, -1, np.int64)
    touched = np.empty(n, np.int64)
    trace_a = 0.0
    trace_c = 0.0
    for i in range(start, stop):
        count = 0
        for jj in range(a_nnz[i]):
            k = a_cols[i, jj]
            a_ik = a_vals[i, jj]
            if k == i:
                trace_a += a_ik
            for kk in range(b_nnz[k]):
                j = b_cols[k, kk]
                if marker[j] != i:
                    marker[j] = i
                    touched[count] = j
                    count += 1
                scratch[j] += a_ik * b_vals[k, kk]
        kept = _flush_row(i, scratch, touched, count, threshold, c_vals, c_cols, c_nnz)
        if kept > m_max:
            return i, kept, trace_a, trace_c
        for slot in range(c_nnz[i]):
            if c_cols[i, slot] == i:
                trace_c += c_vals[i, slot]
    return NO_OVERFLOW, 0, trace_a, trace_c


@njit(nogil=True, cache=True)
def _add_block(alpha, a_vals, a_cols, a_nnz, beta, b_vals, b_cols, b_nnz, threshold,
               c_vals, c_cols, c_nnz, start, stop):
    n = a_nnz.shape[0]
    m_max = c_vals.shape[1]
    scratch = np.zeros(n)
    marker = np.full(n, -1, np.int64)
    touched = np.empty(n, np.int64)
    for i in range(start, stop):
        count = 0
        for jj in range(a_nnz[i]):
            j = a_cols[i, jj]
            if marker[j] != i:
                marker[j] = i
                touched[count] = j
                count += 1
            scratch[j] += alpha * a_vals[i, jj]
        for jj in range(b_nnz[i]):
            j = b_cols[i, jj]
            if marker[j] != i:
                marker[j] = i
                touched[count] = j
                count += 1
            scratch[j] += beta * b_vals[i, jj]
        kept = _flush_row(i, scratch, touched, count, threshold, c_vals, c_cols, c_nnz)
        if kept > m_max:
            return i, kept
    return NO_OVERFLOW, 0


@njit(nogil=True, cache=True)
def _diff_squares_block(a_vals, a_cols, a_nnz, b_vals, b_cols, b_nnz, start, stop):
    n = a_nnz.shape[0]
    scratch = np.zeros(n)
    marker = np.full(n, -1, np.int64)
    touched = np.empty(n, np.int64)
    total = 0.0
    for i in range(start, stop):
        count = 0
        for jj in range(a_nnz[i]):
            j = a_cols[i, jj]
            if marker[j] != i:
                marker[j] = i
                touched[count] = j
                count += 1
            scratch[j] += a_vals[i, jj]
        for jj in range(b_nnz[i]):
            j = b_cols[i, jj]
            if marker[j] != i:
                marker[j] = i
                touched[count] = j
                count += 1
            scratch[j] -= b_vals[i, jj]
        for t in range(count):
            j = touched[t]
            total += scratch[j] * scratch[j]
            scratch[j] = 0.0
    return total


def _allocate(n: int, m_max: int, runtime: Runtime) -> EllpackMatrix:
    if m_max < 1:
        raise ValueError(f"m_max must be >= 1, got {m_max}")
    values = runtime.allocate(n * m_max, np.float64, row_width=m_max).reshape(n, m_max)
    col_index = runtime.allocate(n * m_max, np.int32, row_width=m_max, fill_value=0).reshape(n, m_max)
    row_nnz = runtime.allocate(n, np.int32, fill_value=0)
    return EllpackMatrix(values, col_index, row_nnz, runtime.alloc.effective_alignment)


def _raise_first_overflow(outcomes, m_max: int):
    overflows = [(row, count) for row, count in outcomes if row != NO_OVERFLOW]
    if overflows:
        row, count = min(overflows)
        raise EllpackOverflowError(row, count, m_max)


def _check_same_n(a: EllpackMatrix, b: EllpackMatrix):
    if a.n != b.n:
        raise DimensionMismatch(f"Dimension mismatch: {a.n} vs {b.n}")


def product_width(a: EllpackMatrix, b: EllpackMatrix) -> int:
    """Upper bound on the stored entries of any row of A B (before pruning)"""
    _check_same_n(a, b)
    reach = np.where(a.stored_mask(), b.row_nnz[a.col_index], 0).sum(axis=1)
    return int(max(1, min(a.n, reach.max(initial=0))))


def zeros(n: int, m_max: int, runtime: Optional[Runtime] = None) -> EllpackMatrix:
    return _allocate(n, m_max, runtime or default_runtime())


def identity(n: int, m_max: int = 1, runtime: Optional[Runtime] = None) -> EllpackMatrix:
    a = _allocate(n, m_max, runtime or default_runtime())
    a.values[:, 0] = 1.0
    a.col_index[:, 0] = np.arange(n, dtype=np.int32)
    a.row_nnz[:] = 1
    return a


def from_dense(d: DenseMatrix, threshold: float = 0.0, m_max: Optional[int] = None,
               runtime: Optional[Runtime] = None) -> EllpackMatrix:
    """
    Keep entry (i, j) iff |d[i][j]| > threshold.

    Args:
        d: dense source
        threshold: pruning threshold (>= 0)
        m_max: ELLPACK width; defaults to n, which always fits
        runtime: pool and allocation policy for the backing arrays

    Raises:
        EllpackOverflowError: a row keeps more than m_max entries
    """
    if threshold < 0:
        raise ValueError(f"threshold must be >= 0, got {threshold}")
    runtime = runtime or default_runtime()
    n = d.n
    m_max = n if m_max is None else m_max
    a = _allocate(n, m_max, runtime)
    outcomes = runtime.pool.map_blocks(
        lambda w, start, stop: _from_dense_block(d.values, threshold, a.values, a.col_index,
                                                 a.row_nnz, start, stop),
        n,
    )
    _raise_first_overflow(outcomes, m_max)
    return a


def from_coordinates(n: int, rows: np.ndarray, cols: np.ndarray, vals: np.ndarray,
                     threshold: float = 0.0, m_max: Optional[int] = None,
                     runtime: Optional[Runtime] = None) -> EllpackMatrix:
    """
    Build an ELLPACK matrix from coordinate triplets (no duplicates, 0-based).

    Rows keep ascending column order, the same layout from_dense produces.
    m_max defaults to the longest row.
    """
    runtime = runtime or default_runtime()
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.float64)

    keep = np.abs(vals) > threshold
    rows, cols, vals = rows[keep], cols[keep], vals[keep]
    if rows.size and (rows.min() < 0 or rows.max() >= n or cols.min() < 0 or cols.max() >= n):
        raise DimensionMismatch(f"Coordinates fall outside a {n}x{n} matrix")

    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]

    counts = np.bincount(rows, minlength=n)
    if m_max is None:
        m_max = max(1, int(counts.max(initial=0)))
    if counts.size and counts.max() > m_max:
        row = int(np.argmax(counts > m_max))
        raise EllpackOverflowError(row, int(counts[row]), m_max)

    a = _allocate(n, m_max, runtime)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    slots = np.arange(rows.size) - starts[rows]
    a.values[rows, slots] = vals
    a.col_index[rows, slots] = cols
    a.row_nnz[:] = counts
    return a


def to_dense(a: EllpackMatrix) -> DenseMatrix:
    mask = a.stored_mask()
    rows, _ = np.nonzero(mask)
    out = np.zeros((a.n, a.n))
    out[rows, a.col_index[mask]] = a.values[mask]
    return DenseMatrix(out)


def multiply(a: EllpackMatrix, b: EllpackMatrix, threshold: float = 0.0, m_max: Optional[int] = None,
             runtime: Optional[Runtime] = None) -> EllpackMatrix:
    """
    C = A B with entries of magnitude <= threshold dropped after accumulation.

    Result width defaults to max(a.m_max, b.m_max).
    """
    c, _, _ = _multiply(a, b, threshold, m_max, runtime)
    return c


def _multiply(a, b, threshold, m_max, runtime):
    _check_same_n(a, b)
    if threshold < 0:
        raise ValueError(f"threshold must be >= 0, got {threshold}")
    runtime = runtime or default_runtime()
    m_max = max(a.m_max, b.m_max) if m_max is None else m_max
    c = _allocate(a.n, m_max, runtime)
    outcomes = runtime.pool.map_blocks(
        lambda w, start, stop: _multiply_block(
            a.values, a.col_index, a.row_nnz, b.values, b.col_index, b.row_nnz, threshold,
            c.values, c.col_index, c.row_nnz, start, stop),
        a.n,
    )
    _raise_first_overflow([(row, count) for row, count, _, _ in outcomes], m_max)
    trace_a = math.fsum(t for _, _, t, _ in outcomes)
    trace_c = math.fsum(t for _, _, _, t in outcomes)
    return c, trace_a, trace_c


def x_squared(x: EllpackMatrix, threshold: float = 0.0, m_max: Optional[int] = None,
              runtime: Optional[Runtime] = None) -> Tuple[EllpackMatrix, float, float]:
    """
    X^2 together with tr(X) and tr(X^2), gathered in the same pass over the rows.
    """
    x2, trace_x, trace_x2 = _multiply(x, x, threshold, m_max, runtime)
    return x2, trace_x, trace_x2


def add_scaled(alpha: float, a: EllpackMatrix, beta: float, b: EllpackMatrix, threshold: float = 0.0,
               m_max: Optional[int] = None, runtime: Optional[Runtime] = None) -> EllpackMatrix:
    """alpha A + beta B, pruned after accumulation"""
    _check_same_n(a, b)
    runtime = runtime or default_runtime()
    m_max = max(a.m_max, b.m_max) if m_max is None else m_max
    c = _allocate(a.n, m_max, runtime)
    outcomes = runtime.pool.map_blocks(
        lambda w, start, stop: _add_block(
            alpha, a.values, a.col_index, a.row_nnz, beta, b.values, b.col_index, b.row_nnz,
            threshold, c.values, c.col_index, c.row_nnz, start, stop),
        a.n,
    )
    _raise_first_overflow(outcomes, m_max)
    return c


def scale(alpha: float, a: EllpackMatrix, threshold: float = 0.0,
          runtime: Optional[Runtime] = None) -> EllpackMatrix:
    runtime = runtime or default_runtime()
    return add_scaled(alpha, a, 0.0, zeros(a.n, 1, runtime), threshold, a.m_max, runtime)


def trace(a: EllpackMatrix) -> float:
    return float(np.sum(a.diagonal()))


def fnorm_diff(a: EllpackMatrix, b: EllpackMatrix, runtime: Optional[Runtime] = None) -> float:
    """Frobenius norm of A - B"""
    _check_same_n(a, b)
    runtime = runtime or default_runtime()
    partials = runtime.pool.map_blocks(
        lambda w, start, stop: _diff_squares_block(
            a.values, a.col_index, a.row_nnz, b.values, b.col_index, b.row_nnz, start, stop),
        a.n,
    )
    return math.sqrt(math.fsum(partials))


def checksum(a: EllpackMatrix) -> float:
    """Fixed-order sum of the value slots (padding holds 0.0)"""
    return float(checksum_array(a.values.reshape(-1)))
