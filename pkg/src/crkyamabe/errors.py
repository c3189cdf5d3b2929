"""Exception hierarchy shared by every module.

The CLI maps each class to a fixed exit code, so new error kinds should
subclass one of these rather than raising bare ``ValueError``.
"""

from __future__ import annotations


class CRKError(Exception):
    """Base class for all errors raised by the toolkit."""


class ValidationError(CRKError, ValueError):
    """Malformed input: non-hermitian matrix, bad expression text, bad config."""


class ParseError(ValidationError):
    """Syntax error in a field expression; ``position`` is a 0-based column."""

    def __init__(self, message: str, text: str = "", position: int | None = None):
        self.text = text
        self.position = position
        if position is not None:
            message = f"{message} at position {position}"
            if text:
                message += f"\n  {text}\n  {' ' * position}^"
        super().__init__(message)


class DomainError(CRKError, ValueError):
    """A parameter lies outside an operation's domain (e.g. k > n)."""


class EvaluationError(CRKError, ArithmeticError):
    """A field was evaluated outside its domain (log of nonpositive, v <= 0, ...)."""

    def __init__(self, message: str, point=None, subexpression: str | None = None):
        self.point = point
        self.subexpression = subexpression
        super().__init__(message)


class PreconditionError(CRKError, ValueError):
    """An operation's mathematical hypothesis fails (matrix outside a cone, ...)."""


class HypothesisError(PreconditionError):
    """The vanishing-Cotton hypothesis of the variational identity is violated."""

    def __init__(self, message: str, max_violation: float | None = None):
        self.max_violation = max_violation
        super().__init__(message)


class IntegrationError(CRKError, ArithmeticError):
    """Quadrature produced non-finite samples or failed to converge."""

    def __init__(self, message: str, node=None, history=None):
        self.node = node
        self.history = history or []
        super().__init__(message)


class ConsistencyError(CRKError, AssertionError):
    """Two independent computation paths disagree beyond tolerance."""


class FactorDomainError(EvaluationError, DomainError):
    """A power-form factor ``v`` is not positive at an evaluated point."""
