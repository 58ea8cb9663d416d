"""Exception hierarchy shared by every module in the package."""


class IrmcgError(Exception):
    """Base class for all package errors."""


class InvalidScalar(IrmcgError):
    """A NaN or infinity reached a module boundary."""


class ScalarOverflow(IrmcgError):
    """An exact value is too large to represent as a binary64."""


class BudgetExceeded(IrmcgError):
    """Numerator or denominator bit length exceeded the configured budget."""


class DimensionError(IrmcgError):
    """Operand dimensions do not agree."""


class SingularRitzSystem(IrmcgError):
    """The projected system is exactly singular."""


class NotSPD(IrmcgError):
    """Matrix failed the symmetric positive definite check."""


class NumericalBreakdown(IrmcgError):
    """A pivot quantity vanished while the residual is still nonzero."""


class GeneratorError(IrmcgError):
    """A coordinate-vector generator emitted no usable vectors."""


class ExactRequired(IrmcgError):
    """Operation is only meaningful under the exact backend."""


class InvalidRotation(IrmcgError):
    """(cos, sin) pair does not satisfy cos^2 + sin^2 = 1 exactly."""


class InvalidStiffness(IrmcgError):
    """Spring stiffness must be strictly positive."""


class DiagonalRequired(IrmcgError):
    """Operation is defined for the diagonal representation only."""


class ZeroInitialResidual(IrmcgError):
    """Relative norms are undefined when r0 = 0."""


class IncomparableTraces(IrmcgError):
    """Traces were produced under incompatible configurations."""


class IoError(IrmcgError):
    """Reading or writing a file failed."""


class FormatError(IrmcgError):
    """A text input does not follow the documented grammar."""
