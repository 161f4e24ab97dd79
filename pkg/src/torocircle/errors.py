"""Exception types shared across the library."""


class GeometryError(Exception):
    """Base class for all torocircle errors."""


class DegenerateInput(GeometryError):
    """Inputs repeat or collapse where distinct values are required."""


class ParallelInput(GeometryError):
    """A point pair is parallel where nonparallel points are required."""


class EmptyInput(GeometryError):
    """An operation received an empty point set."""


class JoinFailure(GeometryError):
    """No circle (or more than one) fits the given triple.

    Carries the candidate diagnostics so callers can report instead of guessing.
    """

    def __init__(self, message, candidates=None):
        super().__init__(message)
        self.candidates = candidates or []


class EqualCircles(GeometryError):
    """Intersection was requested for two copies of the same circle."""


class TooManyIntersections(GeometryError):
    """More than two intersection points were found for distinct circles."""

    def __init__(self, message, points=None):
        super().__init__(message)
        self.points = points or []


class NotTouching(GeometryError):
    """The circle pair does not meet in exactly one point."""


class PreconditionViolated(GeometryError):
    """A solver precondition (point membership, nonparallelism) failed."""


class NoTouchingCircle(GeometryError):
    """The touching solver found no circle meeting the base circle only at p.

    This is a reportable outcome, not necessarily a bug: planes satisfying
    only the joining axiom may lack touching circles.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SpecViolation(GeometryError):
    """A convergence-probe sequence violates the required hypotheses."""


class OutsideDerivedPlane(GeometryError):
    """A point parallel to the base point was passed to a derived-plane op."""


class NotCollinear(GeometryError):
    """Betweenness was requested for a non-collinear triple."""


class InfiniteCoordinate(GeometryError):
    """A finite-coordinate operation received a point at infinity."""


class RegionOutsideDerivedPlane(GeometryError):
    """The requested rectangle leaves the derived plane's point set."""


class InvalidParameter(GeometryError):
    """A family parameter violates its constraint (positivity, det sign)."""


class InvalidTrials(GeometryError):
    """A verification suite was asked for fewer than one trial."""


class ParseError(GeometryError):
    """Config or descriptor text could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConstraintError(GeometryError):
    """A parsed config value violates a documented bound."""
