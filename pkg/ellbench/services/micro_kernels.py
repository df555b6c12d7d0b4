# ellbench/services/micro_kernels.py

"""
Paired baseline/tuned micro-kernels for strength reduction (SR),
first-touch data locality (FT) and memory alignment (MA).
"""

import logging
import math
import time
from typing import Optional

import numpy as np
from numba import njit

from ellbench.errors import InvalidScale
from ellbench.models.perf_models import (
    CACHE_LINE,
    AllocPolicy,
    InitMode,
    KernelResult,
    Variant,
)
from ellbench.services.worker_pool import Runtime, allocate, default_runtime

logger = logging.getLogger(__name__)

DOUBLES_PER_LINE = CACHE_LINE // 8

# FT update: a[i] <- a[i] + FT_SCALE * b[i]
FT_FILL_A = 1.0
FT_FILL_B = 2.0
FT_SCALE = 0.5


@njit(nogil=True, cache=True)
def checksum_array(values):
    """Sequential sum of a 1-D array in index order; independent of alignment and partitioning"""
    total = 0.0
    for i in range(values.shape[0]):
        total += values[i]
    return total


@njit(nogil=True, cache=True)
def _ramp_block(out, start, stop):
    for i in range(start, stop):
        out[i] = 1.0 + (i % 97) * 0.25


@njit(nogil=True, cache=True)
def _sr_divide_block(src, out, scale, start, stop):
    for i in range(start, stop):
        out[i] = src[i] / scale


@njit(nogil=True, cache=True)
def _sr_multiply_block(src, out, scale, start, stop):
    inv = 1.0 / scale
    for i in range(start, stop):
        out[i] = src[i] * inv


@njit(nogil=True, cache=True)
def _triad_block(a, b, s, start, stop):
    for i in range(start, stop):
        a[i] = a[i] + s * b[i]


@njit(nogil=True, cache=True)
def _ma_block(x, y, out, partials, slot, start, stop):
    for i in range(start, stop):
        v = x[i] * y[i] + 1.0
        out[i] = v
        partials[slot] += v


def _elapsed(start_ns: int) -> float:
    return max(time.perf_counter_ns() - start_ns, 1) * 1e-9


def kernel_sr(n: int, scale: float, variant: Variant, runtime: Optional[Runtime] = None) -> KernelResult:
    """
    Strength reduction: per-element division (baseline) vs one reciprocal and
    per-element multiplication (tuned).

    The checksum is the correctly rounded sum of the output, so the two
    variants differ only by their elementwise rounding.
    """
    if n <= 0:
        raise ValueError(f"n must be positive, got {n}")
    if scale == 0:
        raise InvalidScale("scale must be non-zero")
    variant = Variant(variant)
    runtime = runtime or default_runtime()
    pool = runtime.pool

    src = runtime.allocate(n)
    out = runtime.allocate(n)
    pool.map_blocks(lambda w, start, stop: _ramp_block(src, start, stop), n)

    block = _sr_divide_block if variant is Variant.BASELINE else _sr_multiply_block
    started = time.perf_counter_ns()
    pool.map_blocks(lambda w, start, stop: block(src, out, scale, start, stop), n)
    elapsed = _elapsed(started)

    return KernelResult(math.fsum(out), elapsed, variant, pool.workers, values=out)


def kernel_ft(n: int, variant: Variant, runtime: Optional[Runtime] = None) -> KernelResult:
    """
    First touch: serial initialization (baseline) vs each worker initializing
    the block it later updates (tuned). Only the update loop is timed.
    """
    if n <= 0:
        raise ValueError(f"n must be positive, got {n}")
    variant = Variant(variant)
    runtime = runtime or default_runtime()
    pool = runtime.pool
    init_mode = InitMode.SERIAL_FILL if variant is Variant.BASELINE else InitMode.PARALLEL_FIRST_TOUCH

    a = allocate(n, AllocPolicy(runtime.alloc.alignment, init_mode, FT_FILL_A), pool)
    b = allocate(n, AllocPolicy(runtime.alloc.alignment, init_mode, FT_FILL_B), pool)

    started = time.perf_counter_ns()
    pool.map_blocks(lambda w, start, stop: _triad_block(a, b, FT_SCALE, start, stop), n)
    elapsed = _elapsed(started)

    return KernelResult(float(checksum_array(a)), elapsed, variant, pool.workers, values=a)


def kernel_ma(n: int, variant: Variant, runtime: Optional[Runtime] = None) -> KernelResult:
    """
    Memory alignment: word-offset buffers, unpadded chunks and adjacent
    per-worker accumulators (baseline) vs cache-line aligned buffers, chunks
    padded to cache-line multiples and one accumulator per cache line (tuned).
    """
    if n <= 0:
        raise ValueError(f"n must be positive, got {n}")
    variant = Variant(variant)
    runtime = runtime or default_runtime()
    pool = runtime.pool
    workers = pool.workers

    if variant is Variant.TUNED:
        alignment, granule, stride = CACHE_LINE, DOUBLES_PER_LINE, DOUBLES_PER_LINE
    else:
        alignment, granule, stride = 1, 1, 1

    init_mode = runtime.alloc.init_mode
    x = allocate(n, AllocPolicy(alignment, init_mode, 1.5), pool)
    y = allocate(n, AllocPolicy(alignment, init_mode, 0.5), pool)
    out = allocate(n, AllocPolicy(alignment, init_mode, 0.0), pool)
    partials = allocate(workers * stride, AllocPolicy(alignment, InitMode.SERIAL_FILL, 0.0))

    def body(worker, start, stop):
        _ma_block(x, y, out, partials, worker * stride, start, stop)
        return out[start:stop].ctypes.data

    started = time.perf_counter_ns()
    chunk_addresses = pool.map_blocks(body, n, granule=granule)
    elapsed = _elapsed(started)

    details = {
        'chunk_addresses': chunk_addresses,
        'partials': partials[::stride].copy(),
    }
    return KernelResult(float(checksum_array(out)), elapsed, variant, workers, values=out, details=details)


KERNELS = {
    'sr': lambda n, variant, runtime: kernel_sr(n, 3.0, variant, runtime),
    'ft': kernel_ft,
    'ma': kernel_ma,
}
