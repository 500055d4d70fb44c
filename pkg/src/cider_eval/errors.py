"""Exception types shared across the toolkit."""
from __future__ import annotations


class CiderEvalError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgumentError(CiderEvalError, ValueError):
    """An argument violates an operation's contract (bad n, empty corpus, ...)."""


class InvalidReferenceError(CiderEvalError, ValueError):
    """A reference sentence is unusable, e.g. empty where a length is required."""


class InputFormatError(CiderEvalError, ValueError):
    """A data file does not parse; carries the offending path and line number."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}:" if line is None else f"{path}:{line}: "
        super().__init__(prefix + message)


class VocabularyOverflowError(CiderEvalError, RuntimeError):
    """The scoring session saw more distinct tokens than the key packing allows."""
