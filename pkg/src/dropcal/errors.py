"""Exception hierarchy shared by all dropcal modules."""


class DropcalError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(DropcalError, ValueError):
    """An input value is malformed (non-finite, out of range, wrong shape)."""


class DomainError(DropcalError, ValueError):
    """An argument lies outside the domain of the operation."""


class FitFailureError(DropcalError, RuntimeError):
    """Temperature fitting could not evaluate a finite objective."""


class TrainingDivergedError(DropcalError, RuntimeError):
    """The training loss became non-finite."""

    def __init__(self, epoch, loss):
        super().__init__(f"training diverged at epoch {epoch} (loss={loss!r})")
        self.epoch = epoch
        self.loss = loss


class ParseError(DropcalError, ValueError):
    """A line of a logit dump could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SchemaError(DropcalError, ValueError):
    """A parsed record violates the dump schema."""
