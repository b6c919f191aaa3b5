"""Exception hierarchy shared by every hardgen module."""

from __future__ import annotations


class HardgenError(Exception):
    pass


class ExprSyntaxError(HardgenError, ValueError):
    """Raised when expression text does not match the grammar.

    ``position`` is a 0-based character offset into the input and
    ``expected`` lists what the parser would have accepted there.
    """

    def __init__(self, message: str, position: int = 0, expected: tuple[str, ...] = ()):
        self.position = position
        self.expected = tuple(expected)
        detail = f" (expected {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{message} at offset {position}{detail}")


class UnknownFunction(ExprSyntaxError):
    pass


class EmptyInput(ExprSyntaxError):
    pass


class UnboundVariable(HardgenError, LookupError):
    pass


class DomainFailure(HardgenError, ArithmeticError):
    """The probe point lies outside the real domain of the expression."""


class UnsupportedForm(HardgenError):
    pass


class BackendUnavailable(HardgenError):
    """A model backend could not answer after exhausting its retry policy."""


class MissingDifficulty(HardgenError):
    pass


class UngatedPair(HardgenError):
    pass


class StoreFailure(HardgenError):
    pass


class SchemaMismatch(StoreFailure):
    pass


class EmptySelection(HardgenError):
    pass


class ConfigError(HardgenError, ValueError):
    pass
