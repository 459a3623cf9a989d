"""Exception types shared across the package."""


class MusaeError(Exception):
    """Base class for all package errors."""


class ParseError(MusaeError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class IsolatedNodeError(MusaeError, ValueError):
    pass


class FeatureError(MusaeError, ValueError):
    pass


class ConfigError(MusaeError, ValueError):
    """Invalid or inconsistent configuration values."""


class OracleCapError(MusaeError):
    """Graph too large for the dense oracle."""


class TaskPreconditionError(MusaeError, ValueError):
    """Inputs violate a downstream task's precondition."""
