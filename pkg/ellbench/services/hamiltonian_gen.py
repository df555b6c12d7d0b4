# ellbench/services/hamiltonian_gen.py

"""
Model Hamiltonians built from a chain of coupled two-level systems (dimers).

Orbitals are interleaved [A0, B0, A1, B1, ...]: orbital i is an A orbital when
i is even and belongs to dimer i // 2. Couplings decay as exp(k * d) where d
is the dimer distance, and every parameter value v becomes v * (1 + r * u)
with u uniform in [-1, 1], drawn once per unordered pair from
numpy.random.Generator(PCG64(seed)) band by band (offset 0, 1, 2, ...).
"""

import logging
import math
from typing import Iterator, Optional, Tuple, Union

import numpy as np

from ellbench.errors import InvalidDimension, InvalidParameters
from ellbench.models.matrices import DenseMatrix, EllpackMatrix
from ellbench.models.physics_models import DOSHistogram, ModelParams, SystemKind
from ellbench.services import dense_oracle
from ellbench.services.ellpack_core import from_coordinates
from ellbench.services.worker_pool import Runtime

logger = logging.getLogger(__name__)

COUPLING_CUTOFF = 1e-14

PRESETS = {
    SystemKind.METAL: ModelParams(delta_aa=-1.0, delta_bb=-1.0, k=-0.01),
    SystemKind.SEMICONDUCTOR: ModelParams(delta_bb=-1.0, delta_ab_intra=-2.0, k=-0.01),
    SystemKind.SOFT_MATTER: ModelParams(eps_a=-10.0, delta_bb=-1.0, delta_ab_intra=-1.0, k=-0.1, r=1.0),
}

# magnitude thresholds reproducing the published sparsity of each preset at n = 1024
SPARSITY_THRESHOLDS = {
    SystemKind.METAL: 1e-5,
    SystemKind.SEMICONDUCTOR: 0.5,
    SystemKind.SOFT_MATTER: 1e-9,
}


def preset(kind: Union[SystemKind, str]) -> ModelParams:
    kind = SystemKind.parse(kind) if isinstance(kind, str) else kind
    if kind not in PRESETS:
        raise InvalidParameters(f"No model preset for system {kind.value!r}")
    return PRESETS[kind]


def _max_dimer_distance(n: int, p: ModelParams) -> int:
    """Largest dimer distance whose coupling can exceed COUPLING_CUTOFF"""
    dimers = n // 2
    largest = max(abs(c) for c in p.couplings) * (1.0 + p.r)
    if largest <= COUPLING_CUTOFF:
        return 0
    if p.k == 0.0:
        return dimers - 1
    # exp(k d) * largest >= cutoff  <=>  d <= ln(cutoff / largest) / k
    return min(dimers - 1, int(math.floor(math.log(COUPLING_CUTOFF / largest) / p.k)))


def _bands(n: int, p: ModelParams) -> Iterator[Tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Yield (rows, cols, values) of the upper-triangle band at each orbital offset"""
    rng = np.random.Generator(np.random.PCG64(p.seed))
    d_max = _max_dimer_distance(n, p)
    max_offset = min(n - 1, 2 * d_max + 1) if any(p.couplings) else 0

    for offset in range(max_offset + 1):
        i = np.arange(n - offset)
        j = i + offset
        d = j // 2 - i // 2
        i_is_a = i % 2 == 0
        j_is_a = j % 2 == 0

        if offset == 0:
            param = np.where(i_is_a, p.eps_a, p.eps_b)
        else:
            param = np.select(
                [i_is_a & j_is_a, ~i_is_a & ~j_is_a, d == 0],
                [p.delta_aa, p.delta_bb, p.delta_ab_intra],
                default=p.delta_ab_cross,
            )
        values = param * np.exp(p.k * d)
        if p.r:
            values = values * (1.0 + p.r * rng.uniform(-1.0, 1.0, n - offset))
        if offset:
            values = np.where(d <= d_max, values, 0.0)
        yield i, j, values


def _check_size(n: int):
    if n < 2 or n % 2:
        raise InvalidDimension(f"n must be a positive even number (n/2 dimers), got {n}")


def generate(n: int, p: ModelParams) -> DenseMatrix:
    """
    Dense symmetric model Hamiltonian of n orbitals (eV).

    Raises:
        InvalidDimension: n is odd or < 2
    """
    _check_size(n)
    h = np.zeros((n, n))
    for i, j, values in _bands(n, p):
        h[i, j] = values
        h[j, i] = values
    logger.debug(f"Generated n={n} Hamiltonian from {p.to_dict()}")
    return DenseMatrix(h, symmetric=True)


def generate_ellpack(n: int, p: ModelParams, threshold: float = 0.0, m_max: Optional[int] = None,
                     runtime: Optional[Runtime] = None) -> EllpackMatrix:
    """
    The same matrix as generate(), assembled band by band straight into ELLPACK
    storage with entries of magnitude <= threshold dropped.
    """
    _check_size(n)
    rows, cols, vals = [], [], []
    for i, j, values in _bands(n, p):
        keep = np.abs(values) > threshold
        i, j, values = i[keep], j[keep], values[keep]
        rows.append(i)
        cols.append(j)
        vals.append(values)
        if j.size and j[0] != i[0]:
            rows.append(j)
            cols.append(i)
            vals.append(values)
    return from_coordinates(n, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals),
                            threshold=threshold, m_max=m_max, runtime=runtime)


def sparsity(h: Union[DenseMatrix, EllpackMatrix], threshold: float = 0.0) -> float:
    """Fraction of the n^2 entries with |value| <= threshold"""
    if threshold < 0:
        raise ValueError(f"threshold must be >= 0, got {threshold}")
    if isinstance(h, EllpackMatrix):
        kept = int(np.count_nonzero(np.abs(h.values[h.stored_mask()]) > threshold))
    else:
        kept = int(np.count_nonzero(np.abs(h.values) > threshold))
    return 1.0 - kept / float(h.n * h.n)


def calibrate_threshold(h: DenseMatrix, target_sparsity: float) -> float:
    """Smallest magnitude threshold at which sparsity(h, threshold) >= target_sparsity"""
    if not 0.0 <= target_sparsity <= 1.0:
        raise ValueError(f"target_sparsity must be in [0, 1], got {target_sparsity}")
    magnitudes = np.sort(np.abs(h.values), axis=None)
    needed = int(math.ceil(target_sparsity * magnitudes.size))
    if needed == 0:
        return 0.0
    return float(magnitudes[needed - 1])


def calibrated_sparsity(kind: Union[SystemKind, str], n: int = 1024, seed: int = 0) -> float:
    kind = SystemKind.parse(kind) if isinstance(kind, str) else kind
    h = generate_ellpack(n, preset(kind).with_seed(seed), threshold=SPARSITY_THRESHOLDS[kind])
    return sparsity(h, SPARSITY_THRESHOLDS[kind])


def dos(h: DenseMatrix, bins: int = 1000, broadening: float = 0.1, fermi_level: float = 0.0) -> DOSHistogram:
    """
    Gaussian-broadened density of states, energies relative to fermi_level.

    The grid spans 5 broadening widths beyond the extreme eigenvalues.
    """
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    if broadening <= 0:
        raise ValueError(f"broadening must be positive, got {broadening}")

    eigenvalues = dense_oracle.eigh(h).eigenvalues - fermi_level
    energies = np.linspace(eigenvalues[0] - 5 * broadening, eigenvalues[-1] + 5 * broadening, bins)
    norm = 1.0 / (broadening * math.sqrt(2.0 * math.pi))
    density = np.zeros(bins)
    for chunk in np.array_split(eigenvalues, max(1, eigenvalues.size // 256)):
        density += norm * np.exp(-0.5 * ((energies[:, None] - chunk[None, :]) / broadening) ** 2).sum(axis=1)
    return DOSHistogram(energies, density, broadening)
