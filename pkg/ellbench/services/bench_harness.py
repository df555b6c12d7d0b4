# ellbench/services/bench_harness.py

"""
Baseline vs tuned experiment runner: micro-kernels, ELLPACK x^2 sweeps and
phase-timed SP2 proxy runs, written out as CSV.
"""

import csv
import logging
import math
import statistics
import sys
import tempfile
import time
from pathlib import Path
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from threadpoolctl import threadpool_limits

from ellbench.errors import ChecksumMismatch, InvalidParameters
from ellbench.models.bench_models import CSV_FIELDS, BenchResult, HarnessConfig
from ellbench.models.perf_models import AffinityPolicy, AllocPolicy, Variant
from ellbench.models.physics_models import PHASES, SP2Config, SP2Report, SystemKind
from ellbench.services import ellpack_core
from ellbench.services.affinity import detect_topology
from ellbench.services.hamiltonian_gen import generate_ellpack, preset
from ellbench.services.matrix_market import write_ellpack
from ellbench.services.micro_kernels import KERNELS
from ellbench.services.sp2_solver import run_proxy
from ellbench.services.worker_pool import Runtime

logger = logging.getLogger(__name__)

PHASE_CSV_FIELDS = ('experiment', 'system', 'n', 'threads', 'variant') + PHASES

SP2_SYSTEMS = (SystemKind.SEMICONDUCTOR, SystemKind.SOFT_MATTER)

# SR divides in one variant and multiplies by a reciprocal in the other
ULP_TOLERANT_EXPERIMENTS = ('micro-sr',)
ULPS_PER_ELEMENT = 4


def default_thread_counts(logical: Optional[int] = None) -> Tuple[int, ...]:
    """
    Powers of two below the logical CPU count, plus the count itself.

    The count defaults to the CPUs this process may run on, which is also the
    number of slots a whole-machine placement provides.
    """
    logical = logical or detect_topology().logical_cpus
    counts = []
    t = 1
    while t < logical:
        counts.append(t)
        t *= 2
    counts.append(logical)
    return tuple(counts)


def summarize(samples: Sequence[float]) -> Tuple[float, float, float]:
    """(min, median, population stddev) of the timed repetitions"""
    if not samples:
        raise ValueError("no samples to summarize")
    return min(samples), statistics.median(samples), statistics.pstdev(samples)


def _variant_order(rng: np.random.Generator, variants: Sequence[Variant]) -> List[Variant]:
    return [variants[i] for i in rng.permutation(len(variants))]


def _measure(run: Callable[[], Tuple[float, float]], reps: int, warmup: int) -> Tuple[List[float], float]:
    """Warm up, then time `reps` calls; run() returns (seconds, checksum)"""
    for _ in range(warmup):
        run()
    samples, checksum = [], math.nan
    for _ in range(reps):
        elapsed, checksum = run()
        samples.append(elapsed)
    return samples, checksum


def _result(experiment: str, system: SystemKind, n: int, threads: int, variant: Variant,
            samples: List[float], checksum: float) -> BenchResult:
    low, median, spread = summarize(samples)
    return BenchResult(experiment, system, n, threads, variant, len(samples), low, median, spread, checksum)


def run_microbench(kernel: str, sizes: Iterable[int], thread_counts: Iterable[int], reps: int,
                   cfg: Optional[HarnessConfig] = None) -> List[BenchResult]:
    """
    One row per (size, threads, variant) of a micro-kernel ('sr', 'ft' or 'ma').
    """
    if kernel not in KERNELS:
        raise InvalidParameters(f"Unknown micro-kernel {kernel!r}, expected one of {sorted(KERNELS)}")
    sizes, thread_counts = list(sizes), list(thread_counts)
    if not sizes or not thread_counts:
        raise InvalidParameters("sizes and thread_counts must not be empty")
    cfg = cfg or HarnessConfig(thread_counts=tuple(thread_counts), reps=reps)
    rng = np.random.default_rng(cfg.seed)
    experiment = f"micro-{kernel}"
    body = KERNELS[kernel]

    results = []
    with threadpool_limits(limits=1, user_api='blas'):
        for n in sizes:
            for threads in thread_counts:
                logger.info(f"{experiment}: n={n} threads={threads}")
                for variant in _variant_order(rng, cfg.variants):
                    with Runtime.for_variant(variant, threads, cfg.affinity, cfg.topology) as runtime:
                        def run():
                            outcome = body(n, variant, runtime)
                            return outcome.elapsed_seconds, outcome.checksum

                        samples, checksum = _measure(run, reps, cfg.warmup)
                    results.append(_result(experiment, SystemKind.SYNTHETIC, n, threads, variant,
                                           samples, checksum))
    return results


def run_spmm_sweep(systems: Iterable, sizes: Iterable[int], cfg: HarnessConfig) -> List[BenchResult]:
    """
    Time x_squared on each model Hamiltonian in both variants.

    H is rebuilt inside every variant's runtime so it is allocated (and first
    touched) under that variant's policy; the generator is deterministic.
    """
    results = []
    rng = np.random.default_rng(cfg.seed)
    with threadpool_limits(limits=1, user_api='blas'):
        for system in systems:
            system = SystemKind.parse(system) if isinstance(system, str) else system
            params = preset(system).with_seed(cfg.seed)
            for n in sizes:
                for threads in cfg.thread_counts:
                    logger.info(f"spmm-x2: system={system.value} n={n} threads={threads}")
                    for variant in _variant_order(rng, cfg.variants):
                        with Runtime.for_variant(variant, threads, cfg.affinity, cfg.topology) as runtime:
                            h = generate_ellpack(n, params, cfg.threshold, runtime=runtime)
                            width = cfg.m_max or ellpack_core.product_width(h, h)

                            def run():
                                started = time.perf_counter()
                                x2, _, _ = ellpack_core.x_squared(h, cfg.threshold, width, runtime)
                                elapsed = time.perf_counter() - started
                                return elapsed, ellpack_core.checksum(x2)

                            samples, checksum = _measure(run, cfg.reps, cfg.warmup)
                        results.append(_result('spmm-x2', system, n, threads, variant, samples, checksum))
    return results


def run_sp2_bench(systems: Iterable, n: int, cfg: HarnessConfig,
                  workdir: Optional[Path] = None) -> List[Tuple[BenchResult, SP2Report]]:
    """
    Phase-timed proxy runs per variant; the reported checksum is that of the density matrix.

    Only gapped systems (semiconductor, soft matter) are accepted.
    """
    pairs = []
    rng = np.random.default_rng(cfg.seed)
    sp2_cfg = SP2Config(n_occ=cfg.n_occ, threshold=cfg.threshold, max_iterations=cfg.sp2_max_iter,
                        idempotency_tol=cfg.sp2_tol, m_max=cfg.m_max)

    with tempfile.TemporaryDirectory(dir=workdir) as tmp, threadpool_limits(limits=1, user_api='blas'):
        for system in systems:
            system = SystemKind.parse(system) if isinstance(system, str) else system
            if system not in SP2_SYSTEMS:
                raise InvalidParameters(f"SP2 needs a gapped system, got {system.value!r}")
            path = Path(tmp) / f"{system.value}_{n}.mtx"
            write_ellpack(path, generate_ellpack(n, preset(system).with_seed(cfg.seed)), symmetric=True)

            for threads in cfg.thread_counts:
                logger.info(f"sp2: system={system.value} n={n} threads={threads}")
                for variant in _variant_order(rng, cfg.variants):
                    affinity = (cfg.affinity or AffinityPolicy()) if variant is Variant.TUNED else None
                    alloc = AllocPolicy.for_variant(variant)
                    reports = []

                    def run():
                        report = run_proxy(path, sp2_cfg, affinity, alloc, threads, cfg.topology)
                        reports.append(report)
                        return report.total_seconds, ellpack_core.checksum(report.density)

                    samples, checksum = _measure(run, cfg.reps, cfg.warmup)
                    pairs.append((_result('sp2', system, n, threads, variant, samples, checksum), reports[-1]))
    return pairs


def _checksum_tolerance(result: BenchResult, other: BenchResult) -> float:
    if result.experiment not in ULP_TOLERANT_EXPERIMENTS:
        return 0.0
    # SR outputs share one sign, so sum|out_i| equals |checksum| and
    # ulp(out_i) <= eps * |out_i|; each correctly rounded checksum adds half an ulp
    magnitude = max(abs(result.checksum), abs(other.checksum))
    return ULPS_PER_ELEMENT * sys.float_info.epsilon * magnitude + math.ulp(magnitude)


def check_neutrality(results: Iterable[BenchResult]) -> List[Tuple[str, str, int, int]]:
    """Instances whose baseline and tuned checksums disagree"""
    by_instance = {}
    for result in results:
        by_instance.setdefault(result.instance, []).append(result)

    mismatches = []
    for instance, group in sorted(by_instance.items()):
        reference = group[0]
        for other in group[1:]:
            if abs(reference.checksum - other.checksum) > _checksum_tolerance(reference, other):
                logger.warning(f"Checksum mismatch for {instance}: "
                               f"{reference.variant.value}={reference.checksum!r} "
                               f"{other.variant.value}={other.checksum!r}")
                mismatches.append(instance)
                break
    return mismatches


def require_neutrality(results: Iterable[BenchResult]):
    mismatches = check_neutrality(results)
    if mismatches:
        raise ChecksumMismatch(f"{len(mismatches)} instance(s) differ between variants: {mismatches}")


def emit_csv(results: Iterable[BenchResult], path):
    rows = sorted(results, key=lambda r: r.sort_key)
    with open(path, 'w', newline='') as handle:
        writer = csv.DictWriter(handle, fieldnames=CSV_FIELDS, lineterminator='\n')
        writer.writeheader()
        for result in rows:
            writer.writerow(result.to_row())
    logger.info(f"Wrote {len(rows)} result rows to {path}")


def read_csv(path) -> List[BenchResult]:
    with open(path, newline='') as handle:
        reader = csv.DictReader(handle)
        if tuple(reader.fieldnames or ()) != CSV_FIELDS:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [BenchResult.from_row(row) for row in reader]


def emit_phase_csv(pairs: Iterable[Tuple[BenchResult, SP2Report]], path):
    rows = sorted(pairs, key=lambda pair: pair[0].sort_key)
    with open(path, 'w', newline='') as handle:
        writer = csv.DictWriter(handle, fieldnames=PHASE_CSV_FIELDS, lineterminator='\n')
        writer.writeheader()
        for result, report in rows:
            row = {key: value for key, value in result.to_row().items() if key in PHASE_CSV_FIELDS}
            row.update({name: repr(report.phase_times[name]) for name in PHASES})
            writer.writerow(row)
    logger.info(f"Wrote {len(rows)} phase rows to {path}")
