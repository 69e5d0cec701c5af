"""Exception taxonomy shared across the package."""


class AggError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(AggError, ValueError):
    """Bad arguments or API misuse (maps to CLI exit code 2)."""


class SetupError(AggError, RuntimeError):
    """A required registration or binding is missing."""


class UnboundedLatencyError(AggError, ArithmeticError):
    """A latency bound is infinite for the given inputs (fill rate of zero)."""


class OracleMismatch(AggError, RuntimeError):
    """A benchmark result disagrees with its independent oracle (exit code 3)."""


class QuiescenceTimeout(AggError, RuntimeError):
    """A run failed to quiesce within the wall-clock budget (exit code 4).

    Carries a diagnostics dict with queue depths and buffer fills.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class InternalInvariantError(AggError, RuntimeError):
    """An internal consistency check failed; indicates a bug, not bad input."""
