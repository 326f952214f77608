"""Exception hierarchy shared by the moods subpackages."""


class MoodsError(Exception):
    """Base class for all errors raised by this package."""


class DatasetError(MoodsError):
    """Problem with input data or its partitioning."""


class ParseError(DatasetError):
    """A CSV row could not be parsed.

    Attributes
    ----------
    row : int or None
        1-based line number in the source file, when known.
    """

    def __init__(self, message, row=None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class ClassError(DatasetError):
    """The label column does not describe a two-class problem."""


class SplitError(DatasetError):
    """A class is too small to be stratified across the requested parts."""


class TrainingError(MoodsError):
    """An optimizer failed (non-finite loss, SVM non-convergence)."""

    def __init__(self, message, epoch=None):
        super().__init__(message if epoch is None else f"epoch {epoch}: {message}")
        self.epoch = epoch


class InitializationError(MoodsError):
    """The sampler cannot be started from the given training data."""


class DrawExhausted(MoodsError):
    """The majority pool cannot supply the requested number of points."""
