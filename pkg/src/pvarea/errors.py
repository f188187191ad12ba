"""Exception types raised by the moment, quadrature and simulation paths."""


class PVAreaError(Exception):
    """Base class for all package errors."""


class MomentDiverges(PVAreaError):
    """A fractional weight moment needed by a formula is infinite or undefined."""


class NoConvergence(PVAreaError):
    """A numerical routine hit its evaluation budget before meeting tolerance.

    ``partial`` carries the last (unconverged) estimate when one exists.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class DomainError(PVAreaError, ValueError):
    """Inputs outside the domain of a closed-form expression."""


class DimensionError(PVAreaError, ValueError):
    """Operation only defined in the plane was asked for dimension != 2."""


class WindowTooSmall(PVAreaError):
    """Typical cell mass reaches the simulation window boundary too often."""


class InsufficientMoments(PVAreaError):
    """Truncated alternating moment series cannot meet the requested tolerance."""
