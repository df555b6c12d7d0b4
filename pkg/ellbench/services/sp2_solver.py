# ellbench/services/sp2_solver.py

"""
SP2 spectral projection: the density matrix of a Hamiltonian from repeated
ELLPACK squaring, with wall time split into the five proxy phases.
"""

import logging
import math
import time
from contextlib import contextmanager
from typing import Optional, Tuple

import numpy as np
import psutil

from ellbench.errors import DegenerateBounds, NoConvergence
from ellbench.models.matrices import EllpackMatrix
from ellbench.models.perf_models import AffinityPolicy, AllocPolicy, CpuTopology
from ellbench.models.physics_models import PHASES, Branch, IterationRecord, SP2Config, SP2Report
from ellbench.services.ellpack_core import add_scaled, fnorm_diff, identity, trace, x_squared
from ellbench.services.matrix_market import read_ellpack
from ellbench.services.worker_pool import Runtime, default_runtime

logger = logging.getLogger(__name__)

# half-width of the interval used when every Gershgorin disc collapses to one point (eV)
DEGENERATE_PAD = 1.0

# relative spread of the idempotency error below which a window counts as stagnant
STAGNATION_RTOL = 1e-3


class PhaseTimer:
    """Accumulates wall time per proxy phase"""

    def __init__(self):
        self.times = {name: 0.0 for name in PHASES}

    @contextmanager
    def phase(self, name: str):
        if name not in self.times:
            raise KeyError(f"Unknown phase: {name}")
        started = time.perf_counter()
        try:
            yield
        finally:
            self.times[name] += time.perf_counter() - started

    @property
    def total(self) -> float:
        return sum(self.times.values())


def gershgorin_bounds(h: EllpackMatrix) -> Tuple[float, float]:
    """min/max over rows of h[i][i] -/+ sum_{j != i} |h[i][j]|"""
    mask = h.stored_mask()
    off_diagonal = mask & (h.col_index != np.arange(h.n)[:, None])
    radii = np.where(off_diagonal, np.abs(h.values), 0.0).sum(axis=1)
    centers = h.diagonal()
    return float(np.min(centers - radii)), float(np.max(centers + radii))


def sp2_init(h: EllpackMatrix, bounds: Tuple[float, float], threshold: float = 0.0,
             m_max: Optional[int] = None, runtime: Optional[Runtime] = None) -> EllpackMatrix:
    """
    X0 = (eps_max I - H) / (eps_max - eps_min)

    Raises:
        DegenerateBounds: eps_max <= eps_min
    """
    eps_min, eps_max = bounds
    if not eps_max > eps_min:
        raise DegenerateBounds(f"Spectral bounds ({eps_min}, {eps_max}) do not span a positive interval")
    runtime = runtime or default_runtime()
    inv_width = 1.0 / (eps_max - eps_min)
    eye = identity(h.n, 1, runtime)
    return add_scaled(-inv_width, h, eps_max * inv_width, eye, threshold,
                      h.n if m_max is None else m_max, runtime)


def _resolve_bounds(h: EllpackMatrix, cfg: SP2Config) -> Tuple[float, float]:
    if cfg.bounds is not None:
        return cfg.bounds
    eps_min, eps_max = gershgorin_bounds(h)
    if eps_max <= eps_min:
        logger.warning(f"Degenerate spectrum at {eps_min} eV; padding bounds by {DEGENERATE_PAD} eV")
        eps_min, eps_max = eps_min - DEGENERATE_PAD, eps_max + DEGENERATE_PAD
    return eps_min, eps_max


def _stagnant(errors, window: int) -> bool:
    if len(errors) <= window:
        return False
    recent = errors[-(window + 1):]
    top = max(recent)
    return top > 0 and (top - min(recent)) <= STAGNATION_RTOL * top


def sp2_basic(h: EllpackMatrix, cfg: SP2Config, runtime: Optional[Runtime] = None,
              timer: Optional[PhaseTimer] = None) -> Tuple[EllpackMatrix, SP2Report]:
    """
    Purify X0 into the density matrix for cfg.n_occ electrons.

    Each pass computes X^2 (with tr X and tr X^2), the idempotency error
    ||X^2 - X||_F, and then X <- X^2 when tr X > n_occ, else X <- 2X - X^2.
    The loop stops once the idempotency error is within cfg.idempotency_tol.

    Args:
        h: symmetric Hamiltonian
        cfg: loop controls (n_occ defaults to n/2)
        runtime: pool and allocation policy for every intermediate matrix
        timer: phase accumulator shared with the caller

    Returns:
        (density matrix, report)

    Raises:
        NoConvergence: max_iterations reached or the error stagnated; the
            report is attached to the exception
        DegenerateBounds: user supplied bounds with eps_max <= eps_min
    """
    started = time.perf_counter()
    cfg = cfg.resolve(h.n)
    runtime = runtime or default_runtime()
    timer = timer or PhaseTimer()
    report = SP2Report(phase_times=timer.times)
    m_max = cfg.m_max or h.n

    with timer.phase('init_misc'):
        bounds = _resolve_bounds(h, cfg)
        x = sp2_init(h, bounds, cfg.threshold, m_max, runtime)
    logger.debug(f"SP2 start: n={h.n} n_occ={cfg.n_occ} bounds={bounds}")

    errors = []
    for _ in range(cfg.max_iterations):
        with timer.phase('sp2_loop_x2'):
            x2, trace_x, trace_x2 = x_squared(x, cfg.threshold, m_max, runtime)
        with timer.phase('sp2_loop_norm'):
            idempotency = fnorm_diff(x2, x, runtime)

        with timer.phase('sp2_loop_misc'):
            branch = Branch.SQUARE if trace_x > cfg.n_occ else Branch.EXPAND
            report.per_iteration.append(IterationRecord(trace_x, branch, idempotency))
            report.iterations = len(report.per_iteration)
            errors.append(idempotency)
            logger.debug(f"SP2 iteration {report.iterations}: tr(X)={trace_x:.12f} "
                         f"tr(X^2)={trace_x2:.12f} error={idempotency:.3e} next={branch.value}")

            if idempotency <= cfg.idempotency_tol:
                report.converged = True
                break
            if _stagnant(errors, cfg.stagnation_window):
                report.total_seconds = time.perf_counter() - started
                raise NoConvergence(
                    f"Idempotency error stagnated at {idempotency:.3e} over "
                    f"{cfg.stagnation_window} iterations (degenerate gap at n_occ={cfg.n_occ}?)",
                    report,
                )
            if branch is Branch.SQUARE:
                x = x2
            else:
                x = add_scaled(2.0, x, -1.0, x2, cfg.threshold, m_max, runtime)

    report.total_seconds = time.perf_counter() - started
    if not report.converged:
        raise NoConvergence(
            f"SP2 did not reach idempotency {cfg.idempotency_tol} within {cfg.max_iterations} iterations",
            report,
        )
    logger.info(f"SP2 converged in {report.iterations} iterations, tr(D)={trace(x):.10f}, "
                f"error={report.per_iteration[-1].idempotency_error:.3e}")
    report.density = x
    return x, report


def run_proxy(hamiltonian_file, cfg: SP2Config, affinity: Optional[AffinityPolicy] = None,
              alloc: Optional[AllocPolicy] = None, threads: Optional[int] = None,
              topology: Optional[CpuTopology] = None) -> SP2Report:
    """
    Read a Matrix Market Hamiltonian and purify it, timing every phase.

    Args:
        hamiltonian_file: path to a real coordinate .mtx file
        cfg: SP2 controls
        affinity: worker placement; None leaves workers unpinned
        alloc: allocation policy for every matrix of the run
        threads: worker count; defaults to the affinity subset size or the physical core count
        topology: machine layout used for pinning (detected when omitted)

    Returns:
        SP2Report with density and total_seconds filled in
    """
    timer = PhaseTimer()
    started = time.perf_counter()
    if threads is None:
        if affinity is not None and affinity.subset is not None:
            threads = affinity.subset.workers
        else:
            threads = psutil.cpu_count(logical=False) or 1

    with timer.phase('init_misc'):
        runtime = Runtime.create(threads, alloc or AllocPolicy(), affinity, topology)
    try:
        with timer.phase('read_hamiltonian'):
            h = read_ellpack(hamiltonian_file, runtime=runtime)
        density, report = sp2_basic(h, cfg, runtime, timer)
        report.total_seconds = time.perf_counter() - started
        covered = timer.total / report.total_seconds if report.total_seconds else 1.0
        logger.info(f"Proxy run on {hamiltonian_file}: {report.total_seconds:.4f}s "
                    f"({covered:.1%} attributed to phases)")
        return report
    finally:
        runtime.close()
