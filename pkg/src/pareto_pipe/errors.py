"""Exception types raised across pareto_pipe.

Validation problems derive from ``ValueError`` so that callers (and the CLI)
can treat them uniformly; numerical failures derive from ``NumericalError``.
"""

from __future__ import annotations


class DataFormatError(ValueError):
    """A CSV file could not be parsed or does not match the site set."""


class DuplicateSiteIdError(DataFormatError):
    """The same site identifier appears more than once."""


class ConfigError(ValueError):
    """The run configuration is invalid or inconsistent with the inputs."""


class UnsupportedRiskForMLEError(ValueError):
    """Likelihood requested for a risk functional whose normaliser is unknown."""


class NumericalError(RuntimeError):
    """Base class for numerical failures."""


class NotPSDError(NumericalError):
    """Matrix stayed non positive definite after the maximal jitter."""


class GpdFitError(NumericalError):
    """Generalized Pareto fit failed or the sample is degenerate."""


class RejectionLimitError(NumericalError):
    """Rejection sampler used up its iteration budget."""
