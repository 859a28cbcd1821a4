"""Exception types shared across the toolkit."""


class LinklabError(Exception):
    """Base class for all toolkit errors."""


class ParseError(LinklabError):
    """A single value (instance ID, name, number) could not be parsed."""


class IngestError(LinklabError):
    """An input file violates its format contract.

    Carries the 1-based data row number where the violation occurred
    (0 for file-level problems such as a bad header).
    """

    def __init__(self, message: str, *, row: int = 0, path: str | None = None):
        self.row = row
        self.path = path
        where = f"{path or '<input>'}, row {row}" if row else (path or "<input>")
        super().__init__(f"{where}: {message}")


class EvaluationError(LinklabError):
    """An evaluation operation has nothing valid to evaluate."""


class ConfigError(LinklabError):
    """Invalid configuration for a generator or a run."""
