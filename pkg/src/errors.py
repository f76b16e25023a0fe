# src/errors.py
"""Exception hierarchy shared by the library and the CLI."""


class AnonDetError(Exception):
    """Base class for every failure raised by anondet."""


class InvalidDistributionError(AnonDetError, ValueError):
    """A vector is not a probability distribution."""


class InvalidProfileError(AnonDetError, ValueError):
    """A problem instance is malformed (shapes, alpha, nu)."""


class UndefinedRatioError(AnonDetError):
    """Both hypotheses assign zero mass to a type, so the ratio is 0/0."""


class CalibrationError(AnonDetError, ValueError):
    """A Neyman-Pearson level outside (0, 1) was requested."""


class EnumerationLimitError(AnonDetError):
    """The requested brute-force enumeration is too large to run."""


class ProjectionError(AnonDetError):
    """The information-projection solver failed to certify a solution."""


class IncomparableError(AnonDetError):
    """Both projection values are infinite, so a comparison is undefined."""


class RegionGridError(AnonDetError):
    """The grid search found no feasible point for a region boundary."""


class DecayFitError(AnonDetError, ValueError):
    """Not enough usable points for a decay-rate fit."""


class UnknownTestError(AnonDetError, ValueError):
    """A test identifier could not be parsed."""


class ExperimentError(AnonDetError):
    """An experiment could not be carried out."""
