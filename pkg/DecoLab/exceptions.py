"""Custom exceptions for DecoLab

Every input-validation failure raised by the library derives from
DecolabError, which the command line maps to exit code 1 and an error report.
"""

from typing import Optional


class DecolabError(Exception):
    """Base exception for all DecoLab operations

    Carries only a message; subclasses add the offending value where a
    caller can use it.
    """

    pass


class NotHermitianError(DecolabError):
    """Matrix failed the Hermitian symmetry check

    Raised when:
    - max |M_kl - conj(M_lk)| exceeds the configured tolerance
    - A density matrix or correlation matrix is not self-adjoint
    """

    pass


class NotPSDError(DecolabError):
    """Matrix is not positive semidefinite within tolerance"""

    def __init__(self, message: str, min_eigenvalue: Optional[float] = None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class NotNormalizedError(DecolabError):
    """Density matrix trace differs from one"""

    def __init__(self, message: str, trace: Optional[float] = None):
        super().__init__(message)
        self.trace = trace


class DiagonalNotUnitError(DecolabError):
    """Correlation matrix has a diagonal entry different from one

    The offending index is kept on the exception so callers can report it.
    """

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


class DimensionMismatchError(DecolabError):
    """Operands have incompatible dimensions

    Raised when:
    - A channel and a state live on different dimensions
    - A qubit-only operation receives d != 2
    - Composed channels have different dimensions
    """

    pass


class ProjectorsNotOrthogonalError(DecolabError):
    """Block projectors are not orthogonal projectors or overlap"""

    pass


class ProjectorsIncompleteError(DecolabError):
    """Block projectors do not sum to the identity"""

    pass


class InvalidParameterError(DecolabError, ValueError):
    """Numeric argument outside its allowed range

    Raised when:
    - An iteration, step or restart count is below its minimum
    - Fewer measurement outcomes than environment levels are requested
    - A seed is negative
    """

    pass


class InvalidProbabilityVectorError(DecolabError):
    """Probability vector has negative entries or does not sum to one"""

    pass


class DecompositionMismatchError(DecolabError):
    """Random-unitary decomposition does not reproduce the channel

    Raised when the reconstruction residual exceeds the verification tolerance.
    """

    pass


class MatrixFileError(DecolabError):
    """Matrix or state file cannot be parsed

    Raised when:
    - The file is not valid JSON (position carries line/column info)
    - The document does not follow the {"dim", "entries"} layout
    - Entries are not [re, im] pairs of finite numbers
    """

    def __init__(self, message: str, position: Optional[str] = None):
        super().__init__(message)
        self.position = position
