# tests/conftest.py

import numpy as np
import pytest

from config import TestingConfig
from ellbench.models.matrices import DenseMatrix
from ellbench.models.perf_models import CACHE_LINE, AllocPolicy, InitMode
from ellbench.services.worker_pool import Runtime, WorkerPool


@pytest.fixture
def testing_config():
    return TestingConfig()


@pytest.fixture
def runtime():
    """Two unpinned workers, serial fill, cache-line aligned"""
    with Runtime(WorkerPool(2, name='test'), AllocPolicy(CACHE_LINE, InitMode.SERIAL_FILL)) as rt:
        yield rt


@pytest.fixture
def first_touch_runtime():
    with Runtime(WorkerPool(3, name='test-ft'), AllocPolicy(CACHE_LINE, InitMode.PARALLEL_FIRST_TOUCH)) as rt:
        yield rt


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def sparse_symmetric():
    """Factory for random sparse symmetric dense matrices with entries in [-1, 1]"""

    def build(rng, n, density=0.1):
        mask = rng.random((n, n)) < density
        upper = np.triu(np.where(mask, rng.uniform(-1.0, 1.0, (n, n)), 0.0))
        return DenseMatrix(upper + np.triu(upper, 1).T, symmetric=True)

    return build
