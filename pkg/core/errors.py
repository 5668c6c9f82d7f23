"""Exception hierarchy shared by every SCPR module."""


class ScprError(Exception):
    """Root of all solver errors."""


class InputError(ScprError, ValueError):
    """Bad user input: documents, vertices, flags."""


class ParseError(InputError):
    """A text document could not be parsed."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class GraphValidationError(InputError):
    """The edge list parsed but does not describe a simple connected graph."""


class StrategyError(InputError):
    """Illegal move, bad distribution or wrong strategy kind."""


class IllegalActionError(InputError):
    """An action outside the acting token's legal move set."""


class ConfigError(InputError):
    """Invalid solver or CLI configuration."""
