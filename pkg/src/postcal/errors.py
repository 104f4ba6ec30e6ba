"""Exception types shared across the package."""


class PostcalError(Exception):
    """Base class for all errors raised by this package."""


class NoDataError(PostcalError):
    """An operation received an empty dataset."""


class ParameterError(PostcalError):
    """A parameter value is outside its allowed range."""


class ValidationError(PostcalError):
    """Input data failed validation."""


class TrainingError(PostcalError):
    """Model training could not be completed."""
