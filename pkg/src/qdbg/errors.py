"""Exception hierarchy shared by every stage of the debugger."""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from qdbg.frontend.ast import SourceSpan


class QdbgError(Exception):
    """Base class for all debugger errors."""


class FrontendError(QdbgError):
    """A source program could not be parsed or validated.

    ``code`` is a short machine-readable tag, ``span`` points at the offending
    source text when it is known.
    """

    code = "frontend"

    def __init__(self, message: str, span: SourceSpan | None = None) -> None:
        super().__init__(message)
        self.message = message
        self.span = span

    def __str__(self) -> str:
        if self.span is None:
            return f"[{self.code}] {self.message}"
        return f"[{self.code}] {self.message} (line {self.span.line}, column {self.span.column_start})"


class QasmSyntaxError(FrontendError):
    code = "syntax"


class UndeclaredIdentifierError(FrontendError):
    code = "undeclared"


class ArityError(FrontendError):
    code = "arity"


class RecursiveGateError(FrontendError):
    code = "recursion"


class DuplicateDeclarationError(FrontendError):
    code = "duplicate"


class RegisterIndexError(FrontendError):
    code = "index"


class AssertionSpecError(FrontendError):
    """An assertion statement is malformed (reference vector, threshold, operands)."""

    code = "assertion"


class ResourceLimitError(QdbgError):
    """The requested simulation exceeds a configured size limit."""


class NumericalError(QdbgError):
    """The simulated state stopped being finite."""


class BaselineError(QdbgError):
    """The unmutated program already fails an assertion."""
