"""Exception types shared across the package."""


class IftemError(Exception):
    """Base class for all package-specific errors."""


class InfeasibleSamplerError(IftemError, ValueError):
    """Sampler bias does not dominate the signal amplitude bound (b <= c)."""


class InsufficientDataError(IftemError, ValueError):
    """Not enough firings/samples to perform the requested operation."""


class MalformedStreamError(IftemError, ValueError):
    """A compressed stream violates its own framing or range invariants."""


class CounterOverflowError(IftemError, OverflowError):
    """An interval does not fit in the hardware counter register."""


class ReconstructionError(IftemError, RuntimeError):
    """The least-squares system could not be solved.

    Carries solver diagnostics in the ``diagnostics`` attribute.
    """

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class InternalConsistencyError(IftemError, RuntimeError):
    """An internal invariant failed (e.g. a firing interval left its bounds)."""
