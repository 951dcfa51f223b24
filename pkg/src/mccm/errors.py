"""Exception hierarchy shared by all mccm modules."""

from __future__ import annotations


class MCCMError(Exception):
    """Base class for every error raised by this package."""


class DomainError(MCCMError, ValueError):
    """An argument is outside the domain an operation accepts."""


class SingularSystem(MCCMError):
    """An absorbing-chain solve failed; the model is not really valid."""


class ZeroDenominator(MCCMError):
    """A choice probability used as a divisor is (numerically) zero.

    ``pairs`` lists the offending ``(assortment, product)`` pairs.
    """

    def __init__(self, message, pairs=()):
        super().__init__(message)
        self.pairs = list(pairs)


class MissingAssortment(MCCMError, KeyError):
    """A choice table lacks an assortment an operation needs.

    ``pairs`` lists ``(assortment, product)`` pairs whose requirement was
    not met; ``product`` is ``None`` when the assortment itself is absent.
    """

    def __init__(self, message, pairs=()):
        super().__init__(message)
        self.message = message
        self.pairs = list(pairs)

    def __str__(self):
        # KeyError would otherwise repr() the message.
        return self.message


class MissingConditional(MCCMError, KeyError):
    """A conditional table lacks an assortment a linear system needs."""

    def __init__(self, message):
        super().__init__(message)
        self.message = message

    def __str__(self):
        return self.message


class UnderdeterminedSystem(MCCMError):
    """A linear system has lower rank than its number of free unknowns.

    The least-squares diagnostics are still attached so callers can report
    them.
    """

    def __init__(self, message, solution=None, residual=None, rank=None):
        super().__init__(message)
        self.solution = solution
        self.residual = residual
        self.rank = rank


class WalkLimitExceeded(MCCMError):
    """A simulated walk did not reach an absorbing state within the cap."""
