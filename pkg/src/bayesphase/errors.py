"""Exception types raised by the library."""


class BayesPhaseError(Exception):
    """Base class for all library errors."""


class DomainError(BayesPhaseError, ValueError):
    """An argument lies outside the domain of the operation."""


class DegeneratePosteriorError(BayesPhaseError):
    """The observed outcome has zero probability under the prior."""


class InvalidOperatorError(BayesPhaseError):
    """An operator fails a required structural property (e.g. positivity)."""


class InvalidGaugeError(BayesPhaseError):
    """A gauge operator does not annihilate Gamma_0 from both sides."""
