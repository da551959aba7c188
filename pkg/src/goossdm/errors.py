"""Exception types shared across the package."""

from __future__ import annotations

from .diagnostics import Diagnostic


class GoossdmError(Exception):
    """Base class for all errors raised by this package."""


class ModelError(GoossdmError):
    """A schema graph value violates a construction-time invariant."""


class SourceError(GoossdmError):
    """Parsing or lowering failed; carries the collected diagnostics."""

    def __init__(self, diagnostics: list[Diagnostic] | tuple[Diagnostic, ...]):
        self.diagnostics = tuple(diagnostics)
        summary = "; ".join(str(d) for d in self.diagnostics[:3])
        if len(self.diagnostics) > 3:
            summary += f"; … ({len(self.diagnostics)} diagnostics)"
        super().__init__(summary)


class XsdError(GoossdmError):
    """An XSD document value or file violates the subset."""

    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"{code}: {message}")


class TransformError(GoossdmError):
    """The schema cannot be compiled to the XSD subset."""

    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"{code}: {message}")


class UnknownCodeError(GoossdmError, KeyError):
    """explain() was asked about a diagnostic code that does not exist."""
