"""Exception hierarchy.

``InadmissibleParameters`` and its subclasses mean the mathematics rules a
scheme out for the given input. ``DominationViolated`` means a computed bound
fell below an exact distance, which points at an implementation fault.
"""


class NbSteinError(Exception):
    """Base class for all package errors."""


class InadmissibleParameters(NbSteinError):
    """The requested approximation is not available for this input."""


class InadmissibleEta(InadmissibleParameters):
    """Three-moment matching has no admissible real solution."""


class OverdispersedRequired(InadmissibleParameters):
    """Two- and three-moment matching need variance strictly above the mean."""


class InvalidParams(InadmissibleParameters):
    """Fitted or supplied parameters leave their valid range."""


class PerturbationTooLarge(InadmissibleParameters):
    """A perturbation denominator is non-positive."""


class UnsupportedComposition(NbSteinError):
    """The mixture's component kinds match no closed-form bound."""


class NonDecayingSeries(NbSteinError):
    """A coefficient series fails to decay geometrically at the truncation point."""


class TruncationError(NbSteinError):
    """An evaluation needs values outside a stored finite range."""


class DominationViolated(NbSteinError):
    """An exact total-variation distance exceeded the reported bound."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
