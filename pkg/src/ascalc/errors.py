"""Exception hierarchy.

Every numerical failure derives from :class:`NumericalError` so that the
command line front end can map it to a single exit status.
"""


class AscalcError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(AscalcError, ValueError):
    """Invalid user supplied configuration or argument."""


class NumericalError(AscalcError):
    """A computation could not be carried out to the requested accuracy."""


class SingularResolvent(NumericalError):
    """``zI - A`` is numerically singular at the requested point."""

    def __init__(self, z, rcond):
        super().__init__(f"resolvent singular at z={z!r} (rcond={rcond:.3e})")
        self.z = z
        self.rcond = rcond


class SpectrumOutsideSector(NumericalError):
    """An eigenvalue has ``|arg| >= pi/2``."""


class NotAlmostSectorial(NumericalError):
    """The fitted resolvent growth exponent is non-negative."""


class IllConditionedEigenbasis(NumericalError):
    """Eigenvector matrix is too ill-conditioned to serve as an oracle."""

    def __init__(self, cond, cond_max):
        super().__init__(
            f"eigenvector condition number {cond:.3e} exceeds {cond_max:.3e}; "
            "use contour-only mode"
        )
        self.cond = cond
        self.cond_max = cond_max


class BranchCutViolation(NumericalError):
    """An eigenvalue sits on the closed negative real axis."""


class InadmissibleAlpha(NumericalError, ValueError):
    """``alpha >= pi / (2 omega)``: no decaying contour exists."""


class QuadratureNotConverged(NumericalError):
    """The node doubling check failed."""

    def __init__(self, msg, estimate=None):
        super().__init__(msg)
        self.estimate = estimate


class SectorViolationAtTau(NumericalError):
    """A member ``A(tau)`` of an operator family leaves the right sector."""

    def __init__(self, tau, detail=""):
        super().__init__(f"A(tau) leaves the sector at tau={tau!r}{': ' + detail if detail else ''}")
        self.tau = tau


class NonPositiveCoefficient(NumericalError, ValueError):
    """The time coefficient is not strictly positive on (0, T]."""


class EtaUnderflow(NumericalError):
    """The rescaled time at the first grid point is below the contour validity."""


class GridTooSmall(AscalcError, ValueError):
    """Fewer samples than the differentiation stencil needs."""


class ObservationNearZero(NumericalError):
    """The second observation drops below the relative floor."""

    def __init__(self, t, value, floor):
        super().__init__(f"|h2(t)|={value:.3e} below floor {floor:.3e} at t={t!r}")
        self.t = t


class ImaginaryResidueTooLarge(NumericalError):
    """Observed series carry imaginary parts too large to discard."""
