# ellbench/errors.py

"""Exception hierarchy shared by every ellbench module.

Each error also derives from the closest builtin so callers that only know
about ``ValueError`` or ``OverflowError`` still catch it.
"""


class EllBenchError(Exception):
    """Base class for all ellbench errors"""


class DimensionMismatch(EllBenchError, ValueError):
    """Operands do not share the same dimension"""


class EllpackOverflowError(EllBenchError, OverflowError):
    """A row holds more entries than the ELLPACK width allows"""

    def __init__(self, row: int, count: int, m_max: int):
        self.row = row
        self.count = count
        self.m_max = m_max
        super().__init__(
            f"Row {row} needs {count} stored entries but m_max is {m_max}"
        )


class AllocationFailure(EllBenchError, MemoryError):
    """A buffer could not be allocated"""


class ParseError(EllBenchError, ValueError):
    """A hardware-subset string could not be parsed"""

    def __init__(self, token: str, reason: str):
        self.token = token
        super().__init__(f"Invalid hw-subset token {token!r}: {reason}")


class TopologyExceeded(EllBenchError, ValueError):
    """The requested thread placement does not fit the machine"""


class InvalidScale(EllBenchError, ValueError):
    """Zero scale passed to the strength-reduction kernel"""


class InvalidDimension(EllBenchError, ValueError):
    """Matrix dimension not allowed by the generator"""


class InvalidParameters(EllBenchError, ValueError):
    """Model or solver parameters violate their invariants"""


class ConvergenceFailure(EllBenchError, ArithmeticError):
    """The eigensolver did not converge"""


class DegenerateGap(EllBenchError, ArithmeticError):
    """No spectral gap at the requested occupation"""


class DegenerateBounds(EllBenchError, ArithmeticError):
    """Spectral bounds do not span a positive interval"""


class NoConvergence(EllBenchError, ArithmeticError):
    """SP2 stopped without reaching idempotency; the report is attached"""

    def __init__(self, message: str, report=None):
        self.report = report
        super().__init__(message)


class MatrixMarketError(EllBenchError, ValueError):
    """Unsupported or malformed Matrix Market file"""


class ChecksumMismatch(EllBenchError):
    """Baseline and tuned variants of one benchmark instance disagree"""
