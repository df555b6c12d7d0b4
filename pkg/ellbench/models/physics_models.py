# ellbench/models/physics_models.py

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from ellbench.errors import InvalidParameters

PHASES = (
    'read_hamiltonian',
    'init_misc',
    'sp2_loop_x2',
    'sp2_loop_norm',
    'sp2_loop_misc',
)


class SystemKind(str, Enum):
    METAL = 'metal'
    SEMICONDUCTOR = 'semiconductor'
    SOFT_MATTER = 'soft_matter'
    SYNTHETIC = 'synthetic'

    @classmethod
    def parse(cls, name: str) -> 'SystemKind':
        """Accept 'softmatter' / 'soft-matter' spellings used on the command line"""
        key = name.strip().lower().replace('-', '_')
        if key == 'softmatter':
            key = 'soft_matter'
        return cls(key)


@dataclass(frozen=True)
class ModelParams:
    """
    Two-level chain model: onsite energies, four couplings, decay constant k and noise factor r.

    All energies in eV. Couplings are damped by exp(k * d) with d the dimer distance.
    """
    eps_a: float = 0.0
    eps_b: float = 0.0
    delta_aa: float = 0.0
    delta_bb: float = 0.0
    delta_ab_intra: float = 0.0
    delta_ab_cross: float = 0.0
    k: float = 0.0
    r: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.k > 0:
            raise InvalidParameters(f"decay constant k must be <= 0, got {self.k}")
        if self.r < 0:
            raise InvalidParameters(f"randomization factor r must be >= 0, got {self.r}")

    def with_seed(self, seed: int) -> 'ModelParams':
        return replace(self, seed=seed)

    @property
    def couplings(self) -> Tuple[float, float, float, float]:
        return (self.delta_aa, self.delta_bb, self.delta_ab_intra, self.delta_ab_cross)

    def to_dict(self):
        return {
            'eps_a': self.eps_a,
            'eps_b': self.eps_b,
            'delta_aa': self.delta_aa,
            'delta_bb': self.delta_bb,
            'delta_ab_intra': self.delta_ab_intra,
            'delta_ab_cross': self.delta_ab_cross,
            'k': self.k,
            'r': self.r,
            'seed': self.seed,
        }


@dataclass
class DOSHistogram:
    """Gaussian-broadened density of states on an energy grid (eV, states/eV)"""
    energies: np.ndarray
    density: np.ndarray
    broadening: float

    def integral(self) -> float:
        """Trapezoidal integral of the density; approximately the number of states"""
        widths = np.diff(self.energies)
        return float(np.sum(0.5 * (self.density[1:] + self.density[:-1]) * widths))

    def density_at(self, energy: float) -> float:
        return float(np.interp(energy, self.energies, self.density))

    def to_dict(self):
        return {
            'energies': self.energies.tolist(),
            'density': self.density.tolist(),
            'broadening': self.broadening,
        }


@dataclass
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]


class Branch(str, Enum):
    SQUARE = 'square'
    EXPAND = 'expand'


@dataclass
class SP2Config:
    """
    Controls for the SP2 purification loop

    n_occ defaults to half filling when left as None (resolved against the matrix size).
    """
    n_occ: Optional[int] = None
    threshold: float = 0.0
    max_iterations: int = 100
    idempotency_tol: float = 1e-6
    bounds: Optional[Tuple[float, float]] = None
    m_max: Optional[int] = None
    stagnation_window: int = 10

    def __post_init__(self):
        if self.n_occ is not None and self.n_occ <= 0:
            raise InvalidParameters(f"n_occ must be positive, got {self.n_occ}")
        if self.threshold < 0:
            raise InvalidParameters(f"threshold must be >= 0, got {self.threshold}")
        if self.max_iterations < 1:
            raise InvalidParameters(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.idempotency_tol <= 0:
            raise InvalidParameters(f"idempotency_tol must be positive, got {self.idempotency_tol}")

    def resolve(self, n: int) -> 'SP2Config':
        """Fill in the occupation default and check 0 < n_occ < n"""
        n_occ = n // 2 if self.n_occ is None else self.n_occ
        if not 0 < n_occ < n:
            raise InvalidParameters(f"n_occ must satisfy 0 < n_occ < {n}, got {n_occ}")
        return replace(self, n_occ=n_occ)

    def to_dict(self):
        return {
            'n_occ': self.n_occ,
            'threshold': self.threshold,
            'max_iterations': self.max_iterations,
            'idempotency_tol': self.idempotency_tol,
            'bounds': list(self.bounds) if self.bounds else None,
        }


@dataclass
class IterationRecord:
    trace_x: float
    branch: Branch
    idempotency_error: float

    def to_dict(self):
        return {
            'trace_x': self.trace_x,
            'branch': self.branch.value,
            'idempotency_error': self.idempotency_error,
        }


@dataclass
class SP2Report:
    iterations: int = 0
    per_iteration: List[IterationRecord] = field(default_factory=list)
    phase_times: Dict[str, float] = field(default_factory=lambda: {name: 0.0 for name in PHASES})
    converged: bool = False
    total_seconds: float = 0.0
    density: Optional[object] = field(default=None, repr=False, compare=False)

    def to_dict(self):
        return {
            'iterations': self.iterations,
            'converged': self.converged,
            'total_seconds': self.total_seconds,
            'phase_times': dict(self.phase_times),
            'per_iteration': [record.to_dict() for record in self.per_iteration],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())
