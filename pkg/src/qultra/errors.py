"""Exception hierarchy.  Every error raised by the library derives from QUltraError."""


class QUltraError(Exception):
    pass


class ParameterError(QUltraError, ValueError):
    """Parameters outside 0 < q < 1, a > 0 (or another domain gate)."""


class TruncationError(QUltraError):
    """A series, product or sum did not meet its tail bound within the term cap."""


class SeriesDomainError(QUltraError, ValueError):
    """A terminating series was requested without a terminating numerator."""


class PoleError(QUltraError, ZeroDivisionError):
    pass


class MethodDisagreementError(QUltraError):
    """Series and recurrence routes disagree beyond tolerance."""


class ConsistencyError(QUltraError):
    pass


class OperatorError(QUltraError):
    """Invariant violation while building a Jacobi operator."""


class FrameError(QUltraError, OverflowError):
    pass


class SolverError(QUltraError):
    pass


class SpectrumViolationError(QUltraError):
    """A computed eigenvalue lies outside the analytic spectral radius a*q."""
