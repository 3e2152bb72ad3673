"""Exception hierarchy.

Input problems derive from :class:`ValidationError`, numerical breakdowns from
:class:`NumericalError`. The CLI maps the two families to different exit codes.
"""


class CycleCurveError(Exception):
    pass


class ValidationError(CycleCurveError, ValueError):
    pass


class NumericalError(CycleCurveError, ArithmeticError):
    pass


class NonAdmissible(ValidationError):
    """The convergence curve is not one restarted GMRES can produce."""


class SizeMismatch(ValidationError):
    pass


class ZeroRoot(ValidationError):
    pass


class GammaForbidden(ValidationError):
    pass


class VariantMismatch(ValidationError):
    pass


class CurveNotDecreasing(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class DegenerateCandidate(NumericalError):
    pass


class ComplementExhausted(NumericalError):
    pass


class NumericallySingular(NumericalError):
    pass


class ZeroResidual(NumericalError):
    """Raised when a Krylov process is started from an exactly zero vector."""
