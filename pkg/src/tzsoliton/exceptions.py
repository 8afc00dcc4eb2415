"""Exception hierarchy for the package.

Every error the library raises deliberately derives from TzsolitonError so
callers (including the CLI, which maps them to exit codes) can tell our
failures apart from genuine bugs.
"""


class TzsolitonError(Exception):
    """Base class for all package errors."""


class ConfigError(TzsolitonError):
    """Run configuration is malformed, incomplete, or inconsistent."""


class PeriodMatrixError(TzsolitonError):
    """Period matrix is not symmetric or its imaginary part is not positive definite."""


class TruncationOverflowError(TzsolitonError):
    """Theta series needs a larger summation radius than the policy allows."""


class ThetaDivisorError(TzsolitonError):
    """Theta value too close to zero for a reliable logarithmic derivative."""


class MarkedPointError(TzsolitonError):
    """Operation requested at a marked point of the curve (lambda = 0 or infinity)."""


class CoincidentSpectrumError(TzsolitonError):
    """Kernel evaluated at coincident spectral points, k(P) = k(Q)."""


class SingularPointError(TzsolitonError):
    """Solution determinant vanishes (within tolerance) at the requested point."""


class DegenerateTrajectoryError(TzsolitonError):
    """Soliton trajectory is parallel to the x-axis (zero velocity denominator)."""


class VelocityPoleError(TzsolitonError):
    """Lorentz velocity map evaluated at its pole (light-speed degeneracy)."""


class TrackingError(TzsolitonError):
    """Peak tracking could not isolate a single soliton trajectory."""
