# config.py

import os
from dotenv import load_dotenv

load_dotenv()


def _int_list(value):
    return tuple(int(item) for item in value.split(',') if item.strip()) if value else None


class Config:
    """Base configuration"""
    LOG_LEVEL = os.environ.get('ELLBENCH_LOG_LEVEL', 'INFO')

    # Benchmark protocol
    THREADS = _int_list(os.environ.get('ELLBENCH_THREADS'))  # None: powers of two up to the CPU count
    REPS = int(os.environ.get('ELLBENCH_REPS', 10))
    WARMUP = 1
    SEED = int(os.environ.get('ELLBENCH_SEED', 1234))
    SIZES = _int_list(os.environ.get('ELLBENCH_SIZES', '1000,2000,4000,8000'))
    MICRO_SIZES = (1 << 20, 1 << 24)
    OUT = os.environ.get('ELLBENCH_OUT', 'results.csv')

    # Placement
    HW_SUBSET = os.environ.get('ELLBENCH_HW_SUBSET')
    PLACEMENT = os.environ.get('ELLBENCH_PLACEMENT', 'compact')  # compact, scatter, compute-bound, memory-bound

    # Numerics
    THRESHOLD = float(os.environ.get('ELLBENCH_THRESHOLD', 1e-8))
    SP2_TOL = float(os.environ.get('ELLBENCH_SP2_TOL', 1e-6))
    SP2_MAX_ITER = int(os.environ.get('ELLBENCH_SP2_MAX_ITER', 100))
    SP2_SIZE = 2000

    def to_dict(self):
        return {name: getattr(self, name) for name in dir(self) if name.isupper()}


class DevelopmentConfig(Config):
    """Development configuration"""
    LOG_LEVEL = os.environ.get('ELLBENCH_LOG_LEVEL', 'DEBUG')
    REPS = int(os.environ.get('ELLBENCH_REPS', 3))
    SIZES = _int_list(os.environ.get('ELLBENCH_SIZES', '256,512'))
    MICRO_SIZES = (1 << 16,)
    SP2_SIZE = 256


class BenchmarkConfig(Config):
    """Full desk-scale sweeps"""


class TestingConfig(Config):
    """Testing configuration"""
    TESTING = True
    LOG_LEVEL = 'WARNING'
    THREADS = (1, 2)
    REPS = 2
    SIZES = (64, 128)
    MICRO_SIZES = (4096,)
    SP2_SIZE = 64


config = {
    'development': DevelopmentConfig,
    'benchmark': BenchmarkConfig,
    'testing': TestingConfig,
    'default': DevelopmentConfig
}
