# ellbench/services/worker_pool.py

"""
Pinned worker pool, static partitioner and policy-driven allocation.

Block w of every partitioned loop always runs on worker w, so the rows a
worker first-touches during allocation are the rows it later computes on.
"""

import logging
import os
import queue
import threading
from concurrent.futures import Future
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import psutil

from ellbench.errors import AllocationFailure
from ellbench.models.perf_models import (
    CACHE_LINE,
    AffinityPolicy,
    AllocPolicy,
    CpuTopology,
    InitMode,
    Variant,
    WORD_SIZE,
)

logger = logging.getLogger(__name__)

_AFFINITY_SUPPORTED = hasattr(os, 'sched_setaffinity') and hasattr(os, 'sched_getaffinity')


def partition(n: int, workers: int, granule: int = 1) -> List[Tuple[int, int]]:
    """
    Split range(n) into `workers` contiguous blocks.

    Blocks differ in size by at most one granule; every interior boundary is a
    multiple of `granule`. Trailing blocks may be empty when n is small.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    units = -(-n // granule)
    base, extra = divmod(units, workers)
    blocks = []
    start = 0
    for w in range(workers):
        size = base + (1 if w < extra else 0)
        stop = min(n, start + size * granule)
        blocks.append((start, stop))
        start = stop
    return blocks


class WorkerPool:
    """
    Fixed set of threads with one task queue each.

    Args:
        workers: number of threads
        pin_map: optional list of (worker, logical CPU); a pinned worker binds
            itself before taking any task and stays there for its lifetime
    """

    def __init__(self, workers: int, pin_map: Optional[Sequence[Tuple[int, int]]] = None,
                 name: str = 'ellbench'):
        if workers < 1:
            raise ValueError(f"workers must be >= 1, got {workers}")
        self.workers = workers
        self.pins = dict(pin_map or [])
        self._queues = [queue.SimpleQueue() for _ in range(workers)]
        self._start_affinity = [None] * workers
        self._ready = threading.Barrier(workers + 1)
        self._threads = []
        self._closed = False

        if self.pins and not _AFFINITY_SUPPORTED:
            logger.warning("Current OS does not support thread affinity; running unpinned")

        for w in range(workers):
            thread = threading.Thread(target=self._worker_loop, args=(w,),
                                      name=f"{name}-{w}", daemon=True)
            thread.start()
            self._threads.append(thread)
        self._ready.wait()
        logger.debug(f"Started pool of {workers} workers, pins={self.pins or 'none'}")

    def _worker_loop(self, worker: int):
        cpu = self.pins.get(worker)
        if cpu is not None and _AFFINITY_SUPPORTED:
            try:
                os.sched_setaffinity(0, {cpu})
            except OSError as exc:
                logger.warning(f"Worker {worker} could not be pinned to CPU {cpu}: {exc}")
        if _AFFINITY_SUPPORTED:
            self._start_affinity[worker] = frozenset(os.sched_getaffinity(0))
        self._ready.wait()

        tasks = self._queues[worker]
        while True:
            item = tasks.get()
            if item is None:
                break
            fn, args, future = item
            if not future.set_running_or_notify_cancel():
                continue
            try:
                future.set_result(fn(worker, *args))
            except BaseException as exc:
                future.set_exception(exc)

    def submit(self, worker: int, fn: Callable, *args) -> Future:
        if self._closed:
            raise RuntimeError("WorkerPool is closed")
        future = Future()
        self._queues[worker].put((fn, args, future))
        return future

    def run_on_all(self, fn: Callable, *args) -> list:
        """Run fn(worker, *args) once on every worker; results in worker order"""
        futures = [self.submit(w, fn, *args) for w in range(self.workers)]
        return [f.result() for f in futures]

    def map_blocks(self, fn: Callable, n: int, *args, granule: int = 1) -> list:
        """
        Run fn(worker, start, stop, *args) for each non-empty static block of range(n).

        Results come back in worker order; the first raised exception is re-raised
        after every block has finished.
        """
        blocks = partition(n, self.workers, granule)
        futures = [
            self.submit(w, fn, start, stop, *args)
            for w, (start, stop) in enumerate(blocks) if stop > start
        ]
        results, error = [], None
        for future in futures:
            try:
                results.append(future.result())
            except BaseException as exc:
                error = error or exc
        if error is not None:
            raise error
        return results

    def pin_report(self) -> List[Tuple[int, Optional[frozenset], Optional[frozenset]]]:
        """(worker, CPUs allowed at start, CPUs allowed now) for every worker"""
        if not _AFFINITY_SUPPORTED:
            return [(w, None, None) for w in range(self.workers)]
        now = self.run_on_all(lambda worker: frozenset(os.sched_getaffinity(0)))
        return [(w, self._start_affinity[w], now[w]) for w in range(self.workers)]

    def close(self):
        if self._closed:
            return
        self._closed = True
        for tasks in self._queues:
            tasks.put(None)
        for thread in self._threads:
            thread.join()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()

    def __repr__(self):
        return f'<WorkerPool workers={self.workers} pinned={bool(self.pins)}>'


def _aligned_empty(count: int, dtype, alignment: int) -> np.ndarray:
    itemsize = np.dtype(dtype).itemsize
    nbytes = count * itemsize
    try:
        raw = np.empty(nbytes + 2 * CACHE_LINE + alignment, dtype=np.uint8)
    except (MemoryError, ValueError) as exc:
        raise AllocationFailure(f"Cannot allocate {nbytes} bytes: {exc}") from exc
    address = raw.ctypes.data
    if alignment == 1:
        # force misalignment: start one word past a cache-line boundary
        shift = (-address) % CACHE_LINE + WORD_SIZE
    else:
        shift = (-address) % alignment
    return raw[shift:shift + nbytes].view(dtype)


def first_touch(buf: np.ndarray, fill_value, pool: WorkerPool, row_width: int = 1) -> List[Tuple[int, int, int]]:
    """
    Have each worker write the block of rows it will later compute on.

    Returns:
        list of (worker, first element, end element) actually written
    """
    rows = buf.shape[0] // row_width

    def touch(worker, start, stop):
        lo, hi = start * row_width, stop * row_width
        buf[lo:hi] = fill_value
        return worker, lo, hi

    touched = pool.map_blocks(touch, rows)
    logger.debug(f"First touch of {buf.nbytes} bytes: {touched}")
    return touched


def allocate(count: int, policy: AllocPolicy, pool: Optional[WorkerPool] = None,
             dtype=np.float64, row_width: int = 1) -> np.ndarray:
    """
    Allocate a 1-D buffer of `count` elements under an allocation policy.

    Args:
        count: number of elements (> 0)
        policy: alignment and initialization mode
        pool: workers used for parallel first touch
        dtype: element type
        row_width: elements per logical row; first-touch blocks follow row boundaries

    Returns:
        buffer whose start address is divisible by policy.effective_alignment
    """
    if count <= 0:
        raise AllocationFailure(f"count must be positive, got {count}")
    buf = _aligned_empty(count, dtype, policy.alignment)
    if policy.init_mode is InitMode.PARALLEL_FIRST_TOUCH and pool is not None:
        first_touch(buf, policy.fill_value, pool, row_width)
    else:
        buf[:] = policy.fill_value
    return buf


@dataclass
class Runtime:
    """Worker pool plus the allocation policy every buffer of a run goes through"""
    pool: WorkerPool
    alloc: AllocPolicy
    variant: Variant = Variant.TUNED

    @property
    def threads(self) -> int:
        return self.pool.workers

    def allocate(self, count: int, dtype=np.float64, row_width: int = 1, fill_value=0.0) -> np.ndarray:
        policy = AllocPolicy(self.alloc.alignment, self.alloc.init_mode, fill_value)
        return allocate(count, policy, self.pool, dtype=dtype, row_width=row_width)

    @classmethod
    def create(cls, threads: int, alloc: AllocPolicy, affinity: Optional[AffinityPolicy] = None,
               topology: Optional[CpuTopology] = None, variant: Variant = Variant.TUNED) -> 'Runtime':
        """Start a pool of `threads` workers, pinned per `affinity` when it locks migration"""
        pin_map = None
        if affinity is not None and affinity.migration_locked:
            from ellbench.services.affinity import detect_topology, resolve_pin_map

            pin_map = resolve_pin_map(affinity, topology or detect_topology(), workers=threads)
        pool = WorkerPool(threads, pin_map=pin_map, name=f"ellbench-{Variant(variant).value}")
        return cls(pool, alloc, Variant(variant))

    @classmethod
    def for_variant(cls, variant: Variant, threads: int, affinity: Optional[AffinityPolicy] = None,
                    topology: Optional[CpuTopology] = None) -> 'Runtime':
        """
        Baseline: serial fill, unaligned buffers, unpinned workers.
        Tuned: parallel first touch, cache-line alignment, workers pinned per `affinity`.
        """
        variant = Variant(variant)
        if variant is Variant.TUNED:
            affinity = affinity or AffinityPolicy()
        else:
            affinity = None
        return cls.create(threads, AllocPolicy.for_variant(variant), affinity, topology, variant)

    def close(self):
        self.pool.close()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()


_default_runtime = None
_default_lock = threading.Lock()


def default_runtime() -> Runtime:
    """
    Process-wide runtime for library calls that do not pass one.

    Unpinned, serial fill, cache-line aligned; ELLBENCH_DEFAULT_THREADS sets the
    worker count, otherwise the physical core count.
    """
    global _default_runtime
    with _default_lock:
        if _default_runtime is None:
            threads = int(os.environ.get('ELLBENCH_DEFAULT_THREADS', 0)) or psutil.cpu_count(logical=False) or 1
            pool = WorkerPool(threads, name='ellbench-default')
            _default_runtime = Runtime(pool, AllocPolicy(CACHE_LINE, InitMode.SERIAL_FILL))
            logger.debug(f"Created default runtime with {threads} workers")
        return _default_runtime
