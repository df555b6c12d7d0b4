# ellbench/models/perf_models.py

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np

CACHE_LINE = 64
PAGE_SIZE = 4096
WORD_SIZE = 8


class Variant(str, Enum):
    BASELINE = 'baseline'
    TUNED = 'tuned'


class InitMode(str, Enum):
    SERIAL_FILL = 'serial_fill'
    PARALLEL_FIRST_TOUCH = 'parallel_first_touch'


class Placement(str, Enum):
    COMPACT = 'compact'
    SCATTER = 'scatter'


PRESET_COMPUTE_BOUND = 'compute-bound'
PRESET_MEMORY_BOUND = 'memory-bound'
AFFINITY_PRESETS = (PRESET_COMPUTE_BOUND, PRESET_MEMORY_BOUND)


@dataclass(frozen=True)
class AllocPolicy:
    """
    How a buffer is aligned and which threads write it first
    """
    alignment: int = CACHE_LINE
    init_mode: InitMode = InitMode.SERIAL_FILL
    fill_value: float = 0.0

    def __post_init__(self):
        if self.alignment not in (1, CACHE_LINE, PAGE_SIZE):
            raise ValueError(f"alignment must be 1, {CACHE_LINE} or {PAGE_SIZE}, got {self.alignment}")
        object.__setattr__(self, 'init_mode', InitMode(self.init_mode))

    @property
    def effective_alignment(self) -> int:
        # alignment 1 still lands on a word boundary (start is offset 8 bytes past a cache line)
        return max(self.alignment, WORD_SIZE)

    @classmethod
    def for_variant(cls, variant: Variant, fill_value: float = 0.0) -> 'AllocPolicy':
        if Variant(variant) is Variant.TUNED:
            return cls(CACHE_LINE, InitMode.PARALLEL_FIRST_TOUCH, fill_value)
        return cls(1, InitMode.SERIAL_FILL, fill_value)

    def to_dict(self):
        return {
            'alignment': self.alignment,
            'init_mode': self.init_mode.value,
            'fill_value': self.fill_value,
        }


@dataclass(frozen=True)
class HwSubset:
    """Active sockets, hardware threads per core and cores per socket"""
    sockets: int = 1
    threads_per_core: int = 1
    cores_per_socket: int = 1

    def __post_init__(self):
        for name in ('sockets', 'threads_per_core', 'cores_per_socket'):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    @property
    def workers(self) -> int:
        return self.sockets * self.threads_per_core * self.cores_per_socket


@dataclass(frozen=True)
class CpuTopology:
    """
    Logical CPU layout: layout[socket][core] is the tuple of hardware-thread CPU ids
    """
    layout: Tuple[Tuple[Tuple[int, ...], ...], ...]

    @property
    def sockets(self) -> int:
        return len(self.layout)

    @property
    def cores_per_socket(self) -> int:
        return min(len(cores) for cores in self.layout)

    @property
    def threads_per_core(self) -> int:
        return min(len(threads) for cores in self.layout for threads in cores)

    @property
    def logical_cpus(self) -> int:
        return sum(len(threads) for cores in self.layout for threads in cores)

    def full_subset(self) -> HwSubset:
        return HwSubset(self.sockets, self.threads_per_core, self.cores_per_socket)

    def socket_of(self, cpu: int) -> int:
        for s, cores in enumerate(self.layout):
            for threads in cores:
                if cpu in threads:
                    return s
        raise KeyError(cpu)

    def locate(self, cpu: int) -> Tuple[int, int, int]:
        """Return (socket, core, thread) for a logical CPU id"""
        for s, cores in enumerate(self.layout):
            for c, threads in enumerate(cores):
                if cpu in threads:
                    return s, c, threads.index(cpu)
        raise KeyError(cpu)

    @classmethod
    def synthetic(cls, sockets: int, cores_per_socket: int, threads_per_core: int = 1) -> 'CpuTopology':
        """
        Build a uniform topology numbered the way Linux usually enumerates CPUs:
        every physical core first, hardware-thread siblings after.
        """
        per_thread = sockets * cores_per_socket
        return cls(tuple(
            tuple(
                tuple(t * per_thread + s * cores_per_socket + c for t in range(threads_per_core))
                for c in range(cores_per_socket)
            )
            for s in range(sockets)
        ))

    def to_dict(self):
        return {
            'sockets': self.sockets,
            'cores_per_socket': self.cores_per_socket,
            'threads_per_core': self.threads_per_core,
            'logical_cpus': self.logical_cpus,
        }


@dataclass(frozen=True)
class AffinityPolicy:
    placement: Placement = Placement.COMPACT
    subset: Optional[HwSubset] = None
    migration_locked: bool = True

    def __post_init__(self):
        object.__setattr__(self, 'placement', Placement(self.placement))

    @classmethod
    def preset(cls, name: str, topology: CpuTopology) -> 'AffinityPolicy':
        """
        Placement presets for the two arithmetic-intensity regimes.

        compute-bound: compact over every logical CPU of the machine.
        memory-bound: scatter over half the hardware threads of each socket
        (one thread per core when cores are hyper-threaded, else half the cores).
        """
        if name == PRESET_COMPUTE_BOUND:
            return cls(Placement.COMPACT)
        if name == PRESET_MEMORY_BOUND:
            full = topology.full_subset()
            if full.threads_per_core >= 2:
                half = HwSubset(full.sockets, full.threads_per_core // 2, full.cores_per_socket)
            else:
                half = HwSubset(full.sockets, 1, max(1, full.cores_per_socket // 2))
            return cls(Placement.SCATTER, half)
        raise ValueError(f"Unknown affinity preset: {name}")

    def to_dict(self):
        return {
            'placement': self.placement.value,
            'subset': None if self.subset is None else {
                'sockets': self.subset.sockets,
                'threads_per_core': self.subset.threads_per_core,
                'cores_per_socket': self.subset.cores_per_socket,
            },
            'migration_locked': self.migration_locked,
        }


@dataclass
class KernelResult:
    """Outcome of one micro-kernel run; ``values`` holds the output array"""
    checksum: float
    elapsed_seconds: float
    variant: Variant
    threads: int
    values: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    details: Dict = field(default_factory=dict, repr=False, compare=False)

    def to_dict(self):
        return {
            'checksum': self.checksum,
            'elapsed_seconds': self.elapsed_seconds,
            'variant': Variant(self.variant).value,
            'threads': self.threads,
        }
