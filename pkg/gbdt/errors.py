"""
Error hierarchy

Every failure raised by the library derives from GbdtError. The CLI maps the
three branches to exit codes: validation 2, numerical 3, verification 4.
"""


class GbdtError(Exception):
    """Base exception for the library."""
    pass


class SeedValidationError(GbdtError):
    """Input data violates a structural identity, a dimension rule or an admissibility precondition."""
    pass


class NumericalError(GbdtError):
    """A computation could not be carried out to tolerance."""
    pass


class SingularMatrixError(NumericalError):
    """Matrix is singular to tolerance (condition estimate above cap)."""
    pass


class SpectralOverlapError(NumericalError):
    """Spectra that must be separated are not (non-unique Sylvester solution, pole on spectrum)."""
    pass


class RiccatiError(NumericalError):
    """No admissible Riccati solution was found."""
    pass


class ConvergenceError(NumericalError):
    """An iteration or limit did not converge within its cap."""
    pass


class NonFiniteError(NumericalError):
    """NaN or Inf appeared in a matrix or derivative."""
    pass


class VerificationError(GbdtError):
    """A residual check exceeded its tolerance."""

    def __init__(self, message: str, max_residual: float = float("nan"), location: tuple[int, ...] = ()):
        super().__init__(message)
        self.max_residual = max_residual
        self.location = location
