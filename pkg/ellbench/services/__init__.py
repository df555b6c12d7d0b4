# ellbench/services/__init__.py

from ellbench.services.worker_pool import Runtime, WorkerPool, allocate, default_runtime, first_touch, partition
from ellbench.services.affinity import detect_topology, format_subset, parse_subset, resolve_pin_map
from ellbench.services.micro_kernels import kernel_ft, kernel_ma, kernel_sr
from ellbench.services.ellpack_core import (
    add_scaled,
    checksum,
    fnorm_diff,
    from_dense,
    identity,
    multiply,
    to_dense,
    trace,
    x_squared,
)
from ellbench.services.matrix_market import read_dense, read_ellpack, write_dense, write_ellpack
from ellbench.services.dense_oracle import dense_multiply, eigh, exact_density_matrix
from ellbench.services.hamiltonian_gen import dos, generate, generate_ellpack, preset, sparsity
from ellbench.services.sp2_solver import gershgorin_bounds, run_proxy, sp2_basic, sp2_init
from ellbench.services.bench_harness import emit_csv, run_microbench, run_sp2_bench, run_spmm_sweep

__all__ = [
    'Runtime',
    'WorkerPool',
    'allocate',
    'default_runtime',
    'first_touch',
    'partition',
    'detect_topology',
    'format_subset',
    'parse_subset',
    'resolve_pin_map',
    'kernel_ft',
    'kernel_ma',
    'kernel_sr',
    'add_scaled',
    'checksum',
    'fnorm_diff',
    'from_dense',
    'identity',
    'multiply',
    'to_dense',
    'trace',
    'x_squared',
    'read_dense',
    'read_ellpack',
    'write_dense',
    'write_ellpack',
    'dense_multiply',
    'eigh',
    'exact_density_matrix',
    'dos',
    'generate',
    'generate_ellpack',
    'preset',
    'sparsity',
    'gershgorin_bounds',
    'run_proxy',
    'sp2_basic',
    'sp2_init',
    'emit_csv',
    'run_microbench',
    'run_sp2_bench',
    'run_spmm_sweep',
]
