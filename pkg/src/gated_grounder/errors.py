"""Exception hierarchy for the grounding engine."""

from typing import Optional


class GrounderError(Exception):
    """Base class for all errors raised by gated_grounder."""


class ConfigurationError(GrounderError, ValueError):
    """Invalid or inconsistent configuration."""


class UsageError(GrounderError):
    """Command-line misuse: missing inputs, bad flag combinations."""


class GenerationError(GrounderError):
    """Synthetic data generation could not satisfy its constraints."""


class ParseError(GrounderError, ValueError):
    """Input text could not be parsed.

    Attributes:
        position: Offending token position, if known
    """

    def __init__(self, message: str, position: Optional[int] = None):
        super().__init__(message)
        self.position = position


class DatasetParseError(ParseError):
    """A dataset or checkpoint file is malformed."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class NumericError(GrounderError, ArithmeticError):
    """A non-finite value appeared during computation.

    Attributes:
        op: Name of the operation that produced the value
    """

    def __init__(self, message: str, op: Optional[str] = None):
        super().__init__(message)
        self.op = op
