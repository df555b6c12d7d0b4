# ellbench/models/bench_models.py

from dataclasses import dataclass, field
from typing import Optional, Tuple

from ellbench.models.perf_models import AffinityPolicy, Variant
from ellbench.models.physics_models import SystemKind

CSV_FIELDS = (
    'experiment', 'system', 'n', 'threads', 'variant',
    'reps', 'min_s', 'median_s', 'stddev_s', 'checksum',
)


@dataclass
class BenchResult:
    """One timed benchmark record: a (experiment, system, n, threads, variant) instance"""
    experiment: str
    system: SystemKind
    n: int
    threads: int
    variant: Variant
    reps: int
    min_s: float
    median_s: float
    stddev_s: float
    checksum: float

    def __post_init__(self):
        self.system = SystemKind.parse(self.system) if isinstance(self.system, str) else self.system
        self.variant = Variant(self.variant)

    @property
    def instance(self) -> Tuple[str, str, int, int]:
        return (self.experiment, self.system.value, self.n, self.threads)

    @property
    def sort_key(self):
        return self.instance + (self.variant.value,)

    def to_row(self) -> dict:
        return {
            'experiment': self.experiment,
            'system': self.system.value,
            'n': self.n,
            'threads': self.threads,
            'variant': self.variant.value,
            'reps': self.reps,
            'min_s': repr(self.min_s),
            'median_s': repr(self.median_s),
            'stddev_s': repr(self.stddev_s),
            'checksum': repr(self.checksum),
        }

    @classmethod
    def from_row(cls, row: dict) -> 'BenchResult':
        return cls(
            experiment=row['experiment'],
            system=row['system'],
            n=int(row['n']),
            threads=int(row['threads']),
            variant=row['variant'],
            reps=int(row['reps']),
            min_s=float(row['min_s']),
            median_s=float(row['median_s']),
            stddev_s=float(row['stddev_s']),
            checksum=float(row['checksum']),
        )

    def to_dict(self):
        return self.to_row()


@dataclass
class HarnessConfig:
    """Settings shared by every experiment family of one harness invocation"""
    thread_counts: Tuple[int, ...] = (1,)
    reps: int = 10
    warmup: int = 1
    seed: int = 1234
    threshold: float = 1e-8
    affinity: Optional[AffinityPolicy] = None
    m_max: Optional[int] = None
    sp2_tol: float = 1e-6
    sp2_max_iter: int = 100
    n_occ: Optional[int] = None
    topology: Optional[object] = field(default=None, repr=False)
    variants: Tuple[Variant, ...] = (Variant.BASELINE, Variant.TUNED)

    def __post_init__(self):
        if not self.thread_counts:
            raise ValueError("thread_counts must not be empty")
        if self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps}")
        self.variants = tuple(Variant(v) for v in self.variants)
        if not self.variants or len(set(self.variants)) != len(self.variants):
            raise ValueError(f"variants must be distinct and non-empty, got {self.variants}")
