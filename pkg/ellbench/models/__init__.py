# ellbench/models/__init__.py

from ellbench.models.matrices import DenseMatrix, EllpackMatrix
from ellbench.models.perf_models import (
    AffinityPolicy,
    AllocPolicy,
    CpuTopology,
    HwSubset,
    InitMode,
    KernelResult,
    Placement,
    Variant,
)
from ellbench.models.physics_models import (
    PHASES,
    Branch,
    DOSHistogram,
    EigenDecomposition,
    IterationRecord,
    ModelParams,
    SP2Config,
    SP2Report,
    SystemKind,
)
from ellbench.models.bench_models import CSV_FIELDS, BenchResult, HarnessConfig

__all__ = [
    'DenseMatrix',
    'EllpackMatrix',
    'AffinityPolicy',
    'AllocPolicy',
    'CpuTopology',
    'HwSubset',
    'InitMode',
    'KernelResult',
    'Placement',
    'Variant',
    'PHASES',
    'Branch',
    'DOSHistogram',
    'EigenDecomposition',
    'IterationRecord',
    'ModelParams',
    'SP2Config',
    'SP2Report',
    'SystemKind',
    'CSV_FIELDS',
    'BenchResult',
    'HarnessConfig',
]
