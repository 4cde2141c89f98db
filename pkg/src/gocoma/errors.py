"""Exception taxonomy shared across the package."""


class GocomaError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(GocomaError):
    """Malformed or inconsistent input (bad shapes, non-finite values, ...)."""


class DomainError(InvalidInputError):
    """Input lies outside the mathematical domain of an operation."""


class NumericalFailureError(GocomaError):
    """A computation produced non-finite values; message names the operation."""


class EmptyArtifactError(GocomaError):
    """A byte artifact ended up empty where content is required."""


class ToolchainError(GocomaError):
    """A required external compiler is missing or unusable."""


class CompilationFailed(GocomaError):
    """Compilation failed; callers should take the fallback-normalization path."""
