# ellbench/services/dense_oracle.py

"""
Dense reference implementations used to verify the sparse path.
"""

import logging

import numpy as np
import scipy.linalg
from numba import njit

from ellbench.errors import ConvergenceFailure, DegenerateGap, DimensionMismatch, InvalidParameters
from ellbench.models.matrices import DenseMatrix
from ellbench.models.physics_models import EigenDecomposition

logger = logging.getLogger(__name__)

JACOBI_MAX_SWEEPS = 100
JACOBI_TOL = 1e-14
GAP_TOL = 1e-10


def dense_multiply(a: DenseMatrix, b: DenseMatrix) -> DenseMatrix:
    if a.n != b.n:
        raise DimensionMismatch(f"Dimension mismatch: {a.n} vs {b.n}")
    return DenseMatrix(a.values @ b.values)


@njit(cache=True)
def _cyclic_jacobi(a, max_sweeps, tol):
    """
    Cyclic Jacobi rotations on a copy of symmetric `a`.

    Returns (eigenvalues, eigenvectors, sweeps); sweeps is -1 when the
    off-diagonal norm did not drop below tol * ||a||_F within max_sweeps.
    """
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n)
    scale = np.sqrt(np.sum(a * a))
    target = tol * scale
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += 2.0 * a[p, q] * a[p, q]
        if np.sqrt(off) <= target:
            return np.diag(a).copy(), v, sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                tau = (aqq - app) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                for i in range(n):
                    if i != p and i != q:
                        aip = a[i, p]
                        aiq = a[i, q]
                        a[i, p] = c * aip - s * aiq
                        a[p, i] = a[i, p]
                        a[i, q] = s * aip + c * aiq
                        a[q, i] = a[i, q]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for i in range(n):
                    vip = v[i, p]
                    viq = v[i, q]
                    v[i, p] = c * vip - s * viq
                    v[i, q] = s * vip + c * viq
    return np.diag(a).copy(), v, -1


def eigh(h: DenseMatrix, method: str = 'lapack') -> EigenDecomposition:
    """
    Symmetric eigendecomposition, eigenvalues ascending.

    Args:
        h: symmetric matrix
        method: 'lapack' (scipy) or 'jacobi' (cyclic rotations, limited to
            JACOBI_MAX_SWEEPS sweeps)

    Raises:
        ConvergenceFailure: the solver did not converge
    """
    if not h.is_symmetric(rtol=1e-10):
        raise InvalidParameters("eigh requires a symmetric matrix")

    if method == 'lapack':
        try:
            eigenvalues, eigenvectors = scipy.linalg.eigh(h.values)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceFailure(f"LAPACK eigensolver failed: {exc}") from exc
    elif method == 'jacobi':
        eigenvalues, eigenvectors, sweeps = _cyclic_jacobi(h.values, JACOBI_MAX_SWEEPS, JACOBI_TOL)
        if sweeps < 0:
            raise ConvergenceFailure(f"Jacobi did not converge within {JACOBI_MAX_SWEEPS} sweeps")
        logger.debug(f"Jacobi converged after {sweeps} sweeps (n={h.n})")
        order = np.argsort(eigenvalues, kind='stable')
        eigenvalues, eigenvectors = eigenvalues[order], eigenvectors[:, order]
    else:
        raise ValueError(f"Unknown eigensolver method: {method}")

    return EigenDecomposition(eigenvalues, eigenvectors)


def exact_density_matrix(h: DenseMatrix, n_occ: int) -> DenseMatrix:
    """Projector onto the n_occ lowest eigenvectors of h"""
    if not 0 < n_occ <= h.n:
        raise InvalidParameters(f"n_occ must satisfy 0 < n_occ <= {h.n}, got {n_occ}")
    if n_occ == h.n:
        return DenseMatrix(np.eye(h.n), symmetric=True)

    eig = eigh(h)
    gap = eig.eigenvalues[n_occ] - eig.eigenvalues[n_occ - 1]
    if gap <= GAP_TOL:
        raise DegenerateGap(f"Gap {gap:.3e} at occupation {n_occ} is below {GAP_TOL}")

    q = eig.eigenvectors[:, :n_occ]
    return DenseMatrix(q @ q.T, symmetric=True)


def reconstruction_residual(h: DenseMatrix, eig: EigenDecomposition) -> float:
    """||Q diag(w) Q^T - H||_F"""
    q = eig.eigenvectors
    return float(np.linalg.norm(q @ np.diag(eig.eigenvalues) @ q.T - h.values))


def orthogonality_residual(eig: EigenDecomposition) -> float:
    q = eig.eigenvectors
    return float(np.linalg.norm(q.T @ q - np.eye(eig.n)))


def commutator_norm(a: DenseMatrix, b: DenseMatrix) -> float:
    if a.n != b.n:
        raise DimensionMismatch(f"Dimension mismatch: {a.n} vs {b.n}")
    return float(np.linalg.norm(a.values @ b.values - b.values @ a.values))
