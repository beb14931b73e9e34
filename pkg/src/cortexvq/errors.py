"""Exception types raised across the toolkit."""


class CortexVQError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(CortexVQError, ValueError):
    pass


class ShapeError(CortexVQError, ValueError):
    pass


class DegenerateInputError(CortexVQError, ValueError):
    pass


class DomainError(CortexVQError, ValueError):
    pass


class UndertrainedTreeError(CortexVQError):
    """Raised when finalizing a tree that has no full-depth cortex path."""


class InfeasibleKError(CortexVQError, ValueError):
    pass


class CodebookLookupError(CortexVQError, IndexError):
    pass


class FormatError(CortexVQError, ValueError):
    """Malformed or unrecognised serialized file."""
