"""Exception types raised across contactlab."""


class ContactLabError(Exception):
    """Base class for all library errors."""


class TangencyViolation(ContactLabError):
    pass


class DegeneratePoint(ContactLabError):
    pass


class OutOfChart(ContactLabError):
    pass


class InfeasibleProfile(ContactLabError):
    pass


class SingularFrame(ContactLabError):
    pass


class ResolutionTooCoarse(ContactLabError):
    pass


class StructureViolation(ContactLabError):
    pass


class SupportOverflow(ContactLabError):
    pass


class InsufficientSamples(ContactLabError):
    pass


class DisplacementNotVerified(ContactLabError):
    pass


class MissingConformalFactor(ContactLabError):
    pass


class ConstraintViolation(ContactLabError):
    pass


class EmptySpectrum(ContactLabError):
    pass


class AmbiguousCrossing(ContactLabError):
    """Selector tracking reached a branch crossing the hints cannot resolve.

    The partially tracked trace is attached so callers can still report it.
    """

    def __init__(self, message, location=None, trace=None):
        super().__init__(message)
        self.location = location
        self.trace = trace


class ConfigError(ContactLabError):
    pass
