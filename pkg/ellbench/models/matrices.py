# ellbench/models/matrices.py

from dataclasses import dataclass, field

import numpy as np


@dataclass
class DenseMatrix:
    """
    Row-major dense square matrix used as oracle and interchange format
    """
    values: np.ndarray
    symmetric: bool = False

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[0] != self.values.shape[1]:
            raise ValueError(f"DenseMatrix must be square, got shape {self.values.shape}")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def is_symmetric(self, rtol: float = 1e-12) -> bool:
        """Check |a_ij - a_ji| <= rtol * max(1, |a_ij|) for every pair"""
        v = self.values
        bound = rtol * np.maximum(1.0, np.abs(v))
        return bool(np.all(np.abs(v - v.T) <= bound))

    def validate(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError("DenseMatrix holds non-finite entries")
        if self.symmetric and not self.is_symmetric():
            raise ValueError("DenseMatrix is flagged symmetric but is not")

    def to_dict(self):
        return {
            'n': self.n,
            'symmetric': self.symmetric,
            'nonzeros': int(np.count_nonzero(self.values)),
        }

    def __repr__(self):
        return f'<DenseMatrix n={self.n} symmetric={self.symmetric}>'


@dataclass
class EllpackMatrix:
    """
    Row-padded sparse matrix: each row keeps up to m_max (value, column) slots.

    Slots at or beyond row_nnz[i] are padding and are never read.
    """
    values: np.ndarray
    col_index: np.ndarray
    row_nnz: np.ndarray
    alignment: int = field(default=64)

    @property
    def n(self) -> int:
        return self.row_nnz.shape[0]

    @property
    def m_max(self) -> int:
        return self.values.shape[1]

    @property
    def nnz(self) -> int:
        return int(self.row_nnz.sum())

    def stored_mask(self) -> np.ndarray:
        """Boolean n x m_max mask of the slots that hold entries"""
        return np.arange(self.m_max)[None, :] < self.row_nnz[:, None]

    def diagonal(self) -> np.ndarray:
        """Dense vector of stored diagonal entries (0.0 where absent)"""
        mask = self.stored_mask() & (self.col_index == np.arange(self.n)[:, None])
        diag = np.zeros(self.n)
        rows, slots = np.nonzero(mask)
        diag[rows] = self.values[rows, slots]
        return diag

    def validate(self):
        """Check the storage invariants, raising ValueError on the first broken one"""
        n, m_max = self.n, self.m_max
        if self.values.shape != (n, m_max) or self.col_index.shape != (n, m_max):
            raise ValueError("values and col_index must both be n x m_max")
        if np.any(self.row_nnz < 0) or np.any(self.row_nnz > m_max):
            raise ValueError("row_nnz out of range [0, m_max]")
        mask = self.stored_mask()
        cols = self.col_index[mask]
        if cols.size and (cols.min() < 0 or cols.max() >= n):
            raise ValueError("column index out of range")
        for i in range(n):
            row = self.col_index[i, :self.row_nnz[i]]
            if np.unique(row).size != row.size:
                raise ValueError(f"duplicate column index in row {i}")
        if self.alignment < 8 or self.alignment & (self.alignment - 1):
            raise ValueError(f"alignment {self.alignment} is not a power of two >= 8")
        for array in (self.values, self.col_index, self.row_nnz):
            if array.ctypes.data % self.alignment:
                raise ValueError(f"backing array not aligned to {self.alignment} bytes")

    def to_dict(self):
        return {
            'n': self.n,
            'm_max': self.m_max,
            'nnz': self.nnz,
            'alignment': self.alignment,
        }

    def __repr__(self):
        return f'<EllpackMatrix n={self.n} m_max={self.m_max} nnz={self.nnz}>'
