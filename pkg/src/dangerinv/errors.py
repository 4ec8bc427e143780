"""Exception hierarchy shared by every module."""

from __future__ import annotations


class DangerInvError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(DangerInvError):
    def __init__(self, message: str, line: int, col: int, expected: frozenset[str] = frozenset()):
        self.message = message
        self.line = line
        self.col = col
        self.expected = frozenset(expected)
        detail = f"{line}:{col}: {message}"
        if self.expected:
            detail += " (expected " + ", ".join(sorted(repr(e) for e in self.expected)) + ")"
        super().__init__(detail)


class UnsupportedFeature(DangerInvError):
    """The input uses a construct outside the supported loop language."""


class WidthError(UnsupportedFeature):
    """A literal does not fit in the selected bit width."""


class SortError(DangerInvError):
    """An expression mixes boolean and integer operands."""


class UnboundSymbol(DangerInvError):
    pass


class GuardFalse(DangerInvError):
    pass


class BudgetExceeded(DangerInvError):
    pass


class CertificateInvalid(DangerInvError):
    pass


class CertificateFormatError(DangerInvError):
    pass


class NotSimple(DangerInvError):
    """A counterexample trace revisits a state."""
