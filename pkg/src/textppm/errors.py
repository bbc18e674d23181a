"""Exception types shared across the package."""


class TextPpmError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(TextPpmError):
    """Attribute declarations and data disagree."""


class LogParseError(TextPpmError):
    """A log file could not be parsed; carries the offending line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SplitError(TextPpmError):
    """A log cannot be split as requested."""


class FitError(TextPpmError):
    """A model cannot be fitted on the given data."""


class EncodingError(TextPpmError):
    """An event or prefix cannot be encoded under a fitted encoder."""


class TrainingError(TextPpmError):
    """Network training diverged or produced non-finite values."""


class ModelIOError(TextPpmError):
    """A persisted model file is missing, corrupt, or version-incompatible."""


class EvaluationError(TextPpmError):
    """A model failed on a test prefix during evaluation."""


class ConfigError(TextPpmError):
    """A run configuration is missing required entries or is inconsistent."""
