"""Exception hierarchy shared by every foci module."""


class FociError(Exception):
    """Base class for all errors raised by this package."""


class InputError(FociError, ValueError):
    """Malformed or out-of-range input data (files, records, counts)."""


class ContractError(FociError, ValueError):
    """A function was called with arguments violating its preconditions."""


class NumericError(FociError, ArithmeticError):
    """The solver produced a non-finite value.

    Attributes
    ----------
    iteration : int
        Index of the iteration at which the non-finite value appeared.
    """

    def __init__(self, message, iteration):
        super().__init__(message)
        self.iteration = iteration


class OutOfVocabularyError(FociError, KeyError):
    """None of a question's words is present in the vocabulary."""

    def __str__(self):
        return str(self.args[0]) if self.args else "out of vocabulary"


class EvaluationError(FociError):
    """An evaluation run had nothing to evaluate."""


class GenerationError(FociError):
    """Synthetic instance generation exhausted its retry budget."""
