"""Exception hierarchy shared by the library and the CLI."""


class FxAdjustError(ValueError):
    """Base class for all errors raised by this package."""


class DomainError(FxAdjustError):
    """An argument lies outside the domain of the operation."""


class ModelValidityError(FxAdjustError):
    """The parameters do not define a valid joint Gaussian model."""


class NoSolutionError(DomainError):
    """An inverse problem has no admissible solution."""


class DegenerateThresholdError(DomainError):
    """A default threshold of exactly zero (PD = 0.5) makes a ratio undefined."""
