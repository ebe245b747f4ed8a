"""Exception hierarchy shared by all modules.

Every failure raised by the library derives from ``NilweierError``. The CLI
maps ``ConfigError`` to exit code 2 and every ``NumericError`` to exit code 3.
"""


class NilweierError(Exception):
    """Base class for library errors."""


class ConfigError(NilweierError):
    """Malformed or inconsistent job configuration."""


class NumericError(NilweierError):
    """A numerical operation could not be completed within tolerance."""


class TailOverflow(NumericError):
    """Discarded Laurent coefficients exceed the tail tolerance."""


class SingularLoop(NumericError):
    """Loop determinant vanishes at a grid point."""


class OutsideBigCell(NumericError):
    """Birkhoff system is singular or too badly conditioned."""


class BoundaryCell(NumericError):
    """Sample lies on the boundary between the two Iwasawa cells."""


class CellMismatch(NumericError):
    """Caller's cell tag disagrees with the frame it passed."""


class ZeroA(NilweierError, ValueError):
    """Degree-one potential with vanishing leading coefficient ``a``."""


class StepUnderflow(NumericError):
    """Adaptive integrator step size collapsed (typically near a pole)."""


class VerticalPoint(NumericError):
    """Support function vanishes, the surface is vertical here."""


class DegenerateMetric(NumericError):
    """Induced metric is degenerate at a sample."""


class NoRotationPart(NumericError):
    """Isometry has trivial rotation, so it has no helicoidal axis."""


class NullEigenvector(NumericError):
    """Eigenvector of D(1) is null for the indefinite Hermitian form."""


class NonUnimodularMonodromy(NumericError):
    """Eigenvalues of the monodromy at lambda = 1 are off the unit circle."""


class DegenerateEll(NumericError, ValueError):
    """Helicoidal rate ell is zero or reaches its upper bound 2."""


class PoleAtMinusOne(NumericError, ValueError):
    """Closed-form axis formula has a pole at b = -1."""


class PoleSample(NumericError):
    """Potential evaluated at (or too close to) one of its poles."""
