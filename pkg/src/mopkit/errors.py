"""Exception hierarchy shared across the package."""


class MopError(Exception):
    """Base class for all mopkit errors."""


class InvalidDesignError(MopError, ValueError):
    """Converter sizing violates a design invariant (count, sum, positivity)."""


class UnsupportedOperationError(MopError, ValueError):
    """Operation is undefined for this design kind or parameter regime."""


class EnumerationLimitError(MopError, RuntimeError):
    """Multiplexer configuration count exceeds the enumeration cap."""


class NetworkDataError(MopError, ValueError):
    """Network case file violates the schema or is not a radial tree."""


class PowerFlowError(MopError, RuntimeError):
    """Sweep power flow failed to converge."""


class SolverError(MopError, RuntimeError):
    """Conic subproblem solver did not reach the requested accuracy."""


class UnreachableTargetError(MopError, ValueError):
    """Root-finding target lies outside the attainable range."""
