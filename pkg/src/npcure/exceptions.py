"""Exception types raised by the estimators and the simulation tools."""


class NpcureError(Exception):
    """Base class for all package errors."""


class EmptyNeighborhood(NpcureError, ValueError):
    """No observation has positive kernel weight at the requested point.

    The caller should enlarge the bandwidth or skip the point.
    """

    def __init__(self, x, h, message=None):
        self.x = x
        self.h = h
        super().__init__(
            message or f"no observations within bandwidth h={h!r} of x={x!r}"
        )


class CuredSlice(NpcureError, ValueError):
    """The estimated probability of being uncured is numerically zero."""


class DomainError(NpcureError, ValueError):
    """An argument lies outside the domain of the function."""


class DegenerateCovariate(NpcureError, ValueError):
    """The covariate sample cannot support the requested pilot rule."""


class GridTooSmall(NpcureError, ValueError):
    """The covariate grid is too short for the bandwidth smoother."""


class DegenerateCurvature(NpcureError, ArithmeticError):
    """The asymptotic bias coefficient vanishes, so the AMSE bandwidth is unbounded."""


class QuadratureFailure(NpcureError, ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""
