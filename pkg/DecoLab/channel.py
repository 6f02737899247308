"""Decoherence maps as Schur multiplication by a correlation matrix

A decoherence map E acts in the Heisenberg picture as E(O) = xi o O and in
the Schrodinger picture as E_S(rho) = xi^T o rho, where o is the entrywise
product in the fixed computational basis. Channels carry no basis field:
callers rotate their data into the classical basis instead.
"""

import logging
from dataclasses import dataclass, field
from typing import Sequence, Tuple, Union

import numpy as np

from DecoLab import numerics
from DecoLab.exceptions import (
    DiagonalNotUnitError,
    DimensionMismatchError,
    InvalidParameterError,
    ProjectorsIncompleteError,
    ProjectorsNotOrthogonalError,
)

logger = logging.getLogger(__name__)

DIAGONAL_TOL = 1e-10
STRICT_MARGIN = 1e-10
PROJECTOR_TOL = 1e-10
MIN_DIM = 2


def _frozen(m: np.ndarray) -> np.ndarray:
    m = np.array(m, dtype=np.complex128)
    m.setflags(write=False)
    return m


@dataclass(frozen=True)
class CorrelationMatrix:
    """Positive-semidefinite matrix with unit diagonal"""

    xi: np.ndarray
    rank: int

    @property
    def dim(self) -> int:
        return int(self.xi.shape[0])


@dataclass(frozen=True)
class SchurChannel:
    """Decoherence or border map determined by its correlation matrix"""

    correlation: CorrelationMatrix
    strict: bool

    @property
    def xi(self) -> np.ndarray:
        return self.correlation.xi

    @property
    def dim(self) -> int:
        return self.correlation.dim

    @property
    def rank(self) -> int:
        return self.correlation.rank


@dataclass(frozen=True)
class KrausSet:
    """Diagonal Kraus operators acting as O -> sum_i E_i^H O E_i"""

    operators: Tuple[np.ndarray, ...]
    canonical: bool = False

    @property
    def diagonals(self) -> np.ndarray:
        """Row i holds the diagonal of E_i"""
        return np.array([np.diag(op) for op in self.operators], dtype=np.complex128)

    def completeness_error(self) -> float:
        if not self.operators:
            return float("inf")
        total = sum(op.conj().T @ op for op in self.operators)
        return float(np.linalg.norm(total - np.eye(total.shape[0])))


@dataclass(frozen=True)
class DensityMatrix:
    rho: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "dim", int(self.rho.shape[0]))


def density_matrix(
    m,
    psd_tol: float = numerics.PSD_TOL,
    trace_tol: float = numerics.TRACE_TOL,
) -> DensityMatrix:
    """Validate a Hermitian PSD unit-trace matrix"""
    m = numerics.as_matrix(m)
    numerics.check_density(m, psd_tol, trace_tol)
    return DensityMatrix(rho=_frozen(m))


def _rho_array(rho: Union[DensityMatrix, np.ndarray]) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        return np.asarray(rho.rho)
    return numerics.as_matrix(rho)


def _check_dim(ch: SchurChannel, m: np.ndarray, what: str) -> None:
    if m.shape != (ch.dim, ch.dim):
        raise DimensionMismatchError(
            f"{what} has shape {m.shape}, channel dimension is {ch.dim}"
        )


def validate_correlation(
    m,
    tol: float = numerics.PSD_TOL,
    diagonal_tol: float = DIAGONAL_TOL,
    rank_tol: float = numerics.RANK_TOL,
    hermitian_tol: float = numerics.HERMITIAN_TOL,
) -> CorrelationMatrix:
    """Check that m is a correlation matrix and record its numerical rank"""
    m = numerics.as_matrix(m)
    m = numerics.check_hermitian(m, hermitian_tol)
    if m.shape[0] < MIN_DIM:
        raise DimensionMismatchError(
            f"Correlation matrix must be at least {MIN_DIM}x{MIN_DIM}, got {m.shape}"
        )
    diag = np.diag(m)
    for k, value in enumerate(diag):
        if abs(value - 1.0) > diagonal_tol:
            raise DiagonalNotUnitError(
                f"Diagonal entry {k} is {complex(value)}, expected 1", index=k
            )
    spectrum = numerics.check_psd(m, tol, hermitian_tol)
    rank = spectrum.rank(rank_tol)
    logger.debug("Validated %dx%d correlation matrix of rank %d", m.shape[0], m.shape[0], rank)
    return CorrelationMatrix(xi=_frozen(m), rank=rank)


def _closure_correlation(xi: np.ndarray, rank_tol: float = numerics.RANK_TOL) -> CorrelationMatrix:
    """Wrap a matrix known to be a correlation matrix by Schur-product closure"""
    xi = np.array(xi, dtype=np.complex128)
    np.fill_diagonal(xi, 1.0)
    xi = 0.5 * (xi + xi.conj().T)
    rank = numerics.numerical_rank(np.linalg.eigvalsh(xi), rank_tol)
    return CorrelationMatrix(xi=_frozen(xi), rank=rank)


def is_strict(xi: np.ndarray, margin: float = STRICT_MARGIN) -> bool:
    """True iff every off-diagonal modulus is below 1 - margin"""
    moduli = np.abs(np.asarray(xi))
    off = ~np.eye(moduli.shape[0], dtype=bool)
    return bool(np.all(moduli[off] < 1.0 - margin))


def from_correlation(corr: CorrelationMatrix, strict_margin: float = STRICT_MARGIN) -> SchurChannel:
    return SchurChannel(correlation=corr, strict=is_strict(corr.xi, strict_margin))


def make_channel(
    m,
    tol: float = numerics.PSD_TOL,
    strict_margin: float = STRICT_MARGIN,
    rank_tol: float = numerics.RANK_TOL,
    hermitian_tol: float = numerics.HERMITIAN_TOL,
) -> SchurChannel:
    """Validate m and build the corresponding Schur channel"""
    corr = validate_correlation(m, tol, rank_tol=rank_tol, hermitian_tol=hermitian_tol)
    return from_correlation(corr, strict_margin)


def identity_channel(d: int) -> SchurChannel:
    return from_correlation(_closure_correlation(np.ones((d, d))))


def complete_dephasing(d: int) -> SchurChannel:
    return from_correlation(_closure_correlation(np.eye(d)))


def is_border_map(ch: SchurChannel) -> bool:
    """Valid map in the closure whose iterates do not decohere every coherence"""
    return not ch.strict


def apply_schrodinger(ch: SchurChannel, rho: Union[DensityMatrix, np.ndarray]) -> DensityMatrix:
    """E_S(rho)_kl = xi_lk rho_kl"""
    r = _rho_array(rho)
    _check_dim(ch, r, "State")
    out = numerics.schur_product(ch.xi.T, r)
    return DensityMatrix(rho=_frozen(out))


def apply_heisenberg(ch: SchurChannel, observable) -> np.ndarray:
    """E(O) = xi o O"""
    o = numerics.as_matrix(observable)
    _check_dim(ch, o, "Observable")
    return numerics.schur_product(ch.xi, o)


def iterate(ch: SchurChannel, n: int, strict_margin: float = STRICT_MARGIN) -> SchurChannel:
    """n-fold composition, computed as the entrywise power of xi"""
    if n < 0:
        raise InvalidParameterError(f"Iteration count must be nonnegative, got {n}")
    powered = np.ones_like(ch.xi) if n == 0 else np.power(ch.xi, n)
    return from_correlation(_closure_correlation(powered), strict_margin)


def dephase_limit(rho: Union[DensityMatrix, np.ndarray]) -> DensityMatrix:
    """Completely decohered state: the diagonal part of rho"""
    r = _rho_array(rho)
    return DensityMatrix(rho=_frozen(np.diag(np.diag(r))))


def compose(a: SchurChannel, b: SchurChannel, strict_margin: float = STRICT_MARGIN) -> SchurChannel:
    if a.dim != b.dim:
        raise DimensionMismatchError(f"Cannot compose dimensions {a.dim} and {b.dim}")
    # fixed operand order: compose(a, b) and compose(b, a) agree bit for bit
    first, second = sorted((a.xi, b.xi), key=lambda m: m.tobytes())
    product = numerics.schur_product(first, second)
    rank = numerics.numerical_rank(np.linalg.eigvalsh(product))
    return from_correlation(CorrelationMatrix(xi=_frozen(product), rank=rank), strict_margin)


def canonical_kraus(ch: SchurChannel, rank_tol: float = numerics.RANK_TOL) -> KrausSet:
    """Kraus operators from the spectral decomposition xi = sum_i lambda_i |v_i><v_i|

    E_i = diag(conj(sqrt(lambda_i) v_i)), one operator per eigenvalue above
    rank_tol * lambda_max, so that sum_i E_i^H O E_i = xi o O.
    """
    spectrum = numerics.hermitian_eig(ch.xi)
    r = spectrum.rank(rank_tol)
    operators = []
    for i in range(r):
        amplitude = np.sqrt(max(spectrum.eigenvalues[i], 0.0)) * spectrum.eigenvectors[:, i]
        operators.append(_frozen(np.diag(amplitude.conj())))
    return KrausSet(operators=tuple(operators), canonical=True)


def apply_kraus_heisenberg(ks: KrausSet, observable) -> np.ndarray:
    o = numerics.as_matrix(observable)
    return sum(op.conj().T @ o @ op for op in ks.operators)


def apply_kraus_schrodinger(ks: KrausSet, rho) -> np.ndarray:
    r = _rho_array(rho)
    return sum(op @ r @ op.conj().T for op in ks.operators)


def channel_from_kraus(ks: KrausSet, strict_margin: float = STRICT_MARGIN) -> SchurChannel:
    """Recover xi_kl = sum_i conj(e_ik) e_il from diagonal Kraus operators"""
    diags = ks.diagonals
    xi = diags.conj().T @ diags
    return from_correlation(validate_correlation(xi), strict_margin)


def apply_partial_decoherence(
    xi,
    projectors: Sequence[np.ndarray],
    observable,
    tol: float = PROJECTOR_TOL,
) -> np.ndarray:
    """Block decoherence sum_kl xi_kl P_k O P_l

    xi is indexed by blocks and must itself be a correlation matrix.
    """
    corr = xi if isinstance(xi, CorrelationMatrix) else validate_correlation(xi)
    o = numerics.as_matrix(observable)
    projs = [numerics.as_matrix(p) for p in projectors]
    if len(projs) != corr.dim:
        raise DimensionMismatchError(
            f"{len(projs)} projectors given for a {corr.dim}-block correlation matrix"
        )
    n = o.shape[0]
    for k, p in enumerate(projs):
        if p.shape != (n, n):
            raise DimensionMismatchError(f"Projector {k} has shape {p.shape}, expected {(n, n)}")
        if np.linalg.norm(p @ p - p) > tol or np.linalg.norm(p - p.conj().T) > tol:
            raise ProjectorsNotOrthogonalError(f"Projector {k} is not an orthogonal projector")
    for k in range(len(projs)):
        for l in range(k + 1, len(projs)):
            if np.linalg.norm(projs[k] @ projs[l]) > tol:
                raise ProjectorsNotOrthogonalError(f"Projectors {k} and {l} overlap")
    if np.linalg.norm(sum(projs) - np.eye(n)) > tol:
        raise ProjectorsIncompleteError("Projectors do not sum to the identity")

    out = np.zeros_like(o)
    for k, pk in enumerate(projs):
        left = pk @ o
        for l, pl in enumerate(projs):
            if corr.xi[k, l] != 0:
                out += corr.xi[k, l] * (left @ pl)
    return out
