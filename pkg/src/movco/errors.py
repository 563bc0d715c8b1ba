"""Exception types shared across the toolkit.

Every error carries a short ``category`` used by the CLI to emit
categorized messages and pick exit codes.
"""


class MovcoError(Exception):
    """Base class for all toolkit errors."""

    category = "runtime"


class InvalidArgumentError(MovcoError, ValueError):
    """An argument violated a documented precondition."""

    category = "argument"


class InvalidStateError(MovcoError):
    """An input object is in an unusable state (e.g. unnormalized vector)."""

    category = "state"


class ResourceLimitError(MovcoError):
    """The request exceeds a configured resource limit (qubits, search size)."""

    category = "resource"


class EvaluationError(MovcoError):
    """An objective or fitness evaluation failed; message carries context."""

    category = "evaluation"


class ConfigError(MovcoError):
    """An experiment configuration is invalid; message lists the violations."""

    category = "config"


class SchemaError(MovcoError):
    """A result or instance file has an unknown or malformed schema."""

    category = "schema"
