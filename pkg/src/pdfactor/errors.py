"""Exception types shared across the package."""


class PdfactorError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInput(PdfactorError):
    """Input is not a finite real square matrix of the expected kind."""


class InvalidParams(PdfactorError):
    """Scheme or solver parameters are out of range."""


class DimensionMismatch(PdfactorError):
    """Operands have incompatible shapes."""


class NotPositiveDefinite(PdfactorError):
    """Symmetric input fails the positive-definiteness certificate."""


class SingularInput(PdfactorError):
    """Matrix is singular to working precision."""


class NotOrthogonal(PdfactorError):
    """Matrix is not orthogonal to the required tolerance."""


class NotARotation(PdfactorError):
    """Orthogonal matrix has determinant -1, not +1."""


class NegativeDeterminant(PdfactorError):
    """Determinant is negative; no SPD factorization exists."""


class NonPositiveDeterminant(PdfactorError):
    """Determinant is zero or negative."""


class TargetUnreachable(PdfactorError):
    """Requested net rotation exceeds what the scheme can produce.

    Carries the largest achievable angle in ``max_phi`` (radians) when known.
    """

    def __init__(self, message, max_phi=None):
        super().__init__(message)
        self.max_phi = max_phi


class NumericalFailure(PdfactorError):
    """An iteration failed to converge or a result lost too much accuracy."""


class InvalidStep(PdfactorError):
    """Integration step size is not a positive finite number."""
