"""Exception types shared across the package."""


class DistTestError(Exception):
    """Base class for all package errors."""


class ArgumentError(DistTestError, ValueError):
    """An argument violates an operation's precondition."""


class EmptySubcubeError(DistTestError):
    """A conditioning query targets a subcube of zero probability mass."""


class LoadError(DistTestError):
    """An instance, function or tree file is malformed."""


class SolverError(DistTestError, RuntimeError):
    """An internal solver reached a state that valid input cannot produce."""
