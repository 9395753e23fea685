"""Exception hierarchy shared by every module."""


class DiracGreenError(Exception):
    """Base class for all computation errors raised by the package."""


class NotInHalfPlane(DiracGreenError, ValueError):
    """A value that must lie in the (open or closed) upper half-plane does not."""


class DenominatorVanishes(DiracGreenError, ZeroDivisionError):
    """A homography or Moebius map was evaluated at a pole.

    For coefficients built from valid Moebius data this cannot happen, so the
    error signals that the coefficients came from somewhere else.
    """


class NoHalfPlaneFixedPoint(DiracGreenError):
    """The composed homography has no fixed point with positive imaginary part."""


class InvalidPotential(DiracGreenError, ValueError):
    """The hopping perturbation hits W1(n) = -1 or W2(n) = 1 where a recursion needs it."""

    def __init__(self, message, site=None):
        super().__init__(message)
        self.site = site


class MaxDepthExceeded(DiracGreenError):
    """The recursion did not reach its tolerance within ``max_depth`` compositions.

    Attributes
    ----------
    value : complex
        Last composite iterate.
    residual : float
        Hyperbolic distance between the last two iterates.
    depth : int
        Number of compositions performed.
    """

    def __init__(self, value, residual, depth):
        super().__init__(
            f"no convergence after {depth} compositions (last residual {residual:.3e})"
        )
        self.value = value
        self.residual = residual
        self.depth = depth


class UnstableMarch(DiracGreenError):
    """The forward solution march picked up the growing solution."""


class SingularSystem(DiracGreenError):
    """A finite-section solve met a vanishing pivot."""


class NotHermitian(DiracGreenError, ValueError):
    """Matrix handed to the Hermitian eigensolver is not Hermitian."""


class InsufficientData(DiracGreenError, ValueError):
    """Too few complete epsilon levels to fit a growth exponent."""


class ConfigError(DiracGreenError, ValueError):
    """Invalid or unreadable run configuration."""
