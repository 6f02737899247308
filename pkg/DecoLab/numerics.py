"""Dense complex linear-algebra kernel

Hermitian eigendecompositions, positive-semidefinite factorizations,
entropies, Schur products and state fidelity. Every function is a pure
function of its inputs; arrays passed in are never modified.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from DecoLab.exceptions import (
    InvalidProbabilityVectorError,
    NotHermitianError,
    NotNormalizedError,
    NotPSDError,
)

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
TRACE_TOL = 1e-9
RANK_TOL = 1e-10
ENTROPY_CUTOFF = 1e-15
ROOT_CUTOFF = 1e-14


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues in descending order with matching orthonormal eigenvector columns"""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T

    def rank(self, tol: float = RANK_TOL) -> int:
        return numerical_rank(self.eigenvalues, tol)


def as_matrix(m) -> np.ndarray:
    """Return a complex128 copy of a square or rectangular 2-D array"""
    arr = np.array(m, dtype=np.complex128)
    if arr.ndim != 2:
        raise ValueError(f"Expected a 2-D matrix, got shape {arr.shape}")
    return arr


def hermiticity_error(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    scale = 1.0 + (float(np.max(np.abs(m))) if m.size else 0.0)
    return hermiticity_error(m) <= tol * scale


def check_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise NotHermitianError(f"Matrix of shape {m.shape} is not square")
    if not is_hermitian(m, tol):
        raise NotHermitianError(
            f"Matrix is not Hermitian: max |M - M^H| = {hermiticity_error(m):.3e}"
        )
    return m


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Make the first largest-modulus component of every column real nonnegative"""
    out = vectors.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        # argmax returns the lowest index among ties
        idx = int(np.argmax(np.abs(col)))
        pivot = col[idx]
        if abs(pivot) > 0:
            out[:, j] = col * (np.conj(pivot) / abs(pivot))
    return out


def hermitian_eig(m, tol: float = HERMITIAN_TOL) -> Spectrum:
    """Eigendecomposition of a Hermitian matrix under a deterministic phase convention"""
    m = check_hermitian(m, tol)
    # Symmetrize away the sub-tolerance antihermitian part
    h = 0.5 * (m + m.conj().T)
    values, vectors = scipy.linalg.eigh(h)
    order = np.argsort(-values, kind="stable")
    values = np.ascontiguousarray(values[order])
    vectors = _fix_phases(np.ascontiguousarray(vectors[:, order]))
    return Spectrum(eigenvalues=values, eigenvectors=vectors)


def numerical_rank(eigenvalues: np.ndarray, tol: float = RANK_TOL) -> int:
    """Count eigenvalues above tol times the largest one"""
    values = np.asarray(eigenvalues, dtype=float)
    if values.size == 0:
        return 0
    top = float(np.max(values))
    if top <= 0:
        return 0
    return int(np.sum(values > tol * top))


def _psd_threshold(m: np.ndarray, tol: float) -> float:
    return tol * max(float(np.linalg.norm(m)), 1.0)


def check_psd(m, tol: float = PSD_TOL, hermitian_tol: float = HERMITIAN_TOL) -> Spectrum:
    """Validate positive semidefiniteness and return the spectrum"""
    spectrum = hermitian_eig(m, hermitian_tol)
    smallest = float(spectrum.eigenvalues[-1])
    if smallest < -_psd_threshold(as_matrix(m), tol):
        raise NotPSDError(
            f"Matrix is not positive semidefinite: minimum eigenvalue {smallest:.6g}",
            min_eigenvalue=smallest,
        )
    return spectrum


def psd_factor(m, tol: float = PSD_TOL, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Factor a PSD matrix as a Gram matrix of columns

    Returns G of shape (r, d), r the numerical rank, such that
    G^H G = M; column k is the vector g_k with <g_k|g_l> = M_kl. The columns
    are rotated into upper-trapezoidal form so that g_1 lies along the first
    axis, g_2 in the span of the first two, and so on (Cholesky-like
    convention with real nonnegative leading entries).
    """
    m = as_matrix(m)
    spectrum = check_psd(m, tol)
    values = np.clip(spectrum.eigenvalues, 0.0, None)
    r = numerical_rank(values, rank_tol)
    if r == 0:
        return np.zeros((0, m.shape[0]), dtype=np.complex128)
    vecs = spectrum.eigenvectors[:, :r]
    g = np.sqrt(values[:r])[:, None] * vecs.conj().T
    # QR of G: G = Q R, R^H R = G^H G, Q is discarded
    _, rmat = scipy.linalg.qr(g, mode="economic")
    for i in range(rmat.shape[0]):
        row = rmat[i]
        nz = np.flatnonzero(np.abs(row) > 1e-14)
        if nz.size:
            pivot = row[nz[0]]
            rmat[i] = row * (np.conj(pivot) / abs(pivot))
    return rmat


def gram(vectors: np.ndarray) -> np.ndarray:
    """Gram matrix <g_k|g_l> of the columns"""
    vectors = np.asarray(vectors, dtype=np.complex128)
    return vectors.conj().T @ vectors


def schur_product(a, b) -> np.ndarray:
    """Entrywise (Hadamard) product in the computational basis"""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape:
        raise ValueError(f"Schur product needs equal shapes, got {a.shape} and {b.shape}")
    return a * b


def check_density(
    rho,
    psd_tol: float = PSD_TOL,
    trace_tol: float = TRACE_TOL,
    hermitian_tol: float = HERMITIAN_TOL,
) -> Spectrum:
    spectrum = check_psd(rho, psd_tol, hermitian_tol)
    trace = float(np.real(np.trace(as_matrix(rho))))
    if abs(trace - 1.0) > trace_tol:
        raise NotNormalizedError(f"Density matrix has trace {trace:.12g}", trace=trace)
    return spectrum


def entropy_from_eigenvalues(values, cutoff: float = ENTROPY_CUTOFF) -> float:
    values = np.asarray(values, dtype=float)
    values = values[values > cutoff]
    if values.size == 0:
        return 0.0
    return float(max(0.0, -np.sum(values * np.log2(values))))


def von_neumann_entropy(
    rho,
    normalize: bool = False,
    psd_tol: float = PSD_TOL,
    trace_tol: float = TRACE_TOL,
) -> float:
    """Von Neumann entropy in bits, 0 log 0 = 0"""
    rho = as_matrix(rho)
    if normalize:
        spectrum = check_psd(rho, psd_tol)
        trace = float(np.real(np.trace(rho)))
        if trace <= 0:
            raise NotNormalizedError("Cannot normalize a matrix with zero trace", trace=trace)
        values = spectrum.eigenvalues / trace
    else:
        values = check_density(rho, psd_tol, trace_tol).eigenvalues
    return entropy_from_eigenvalues(values)


def shannon_entropy(p: Sequence[float], tol: float = TRACE_TOL) -> float:
    """Shannon entropy of a probability vector in bits"""
    p = check_probability_vector(p, tol)
    return entropy_from_eigenvalues(p)


def check_probability_vector(p: Sequence[float], tol: float = TRACE_TOL) -> np.ndarray:
    arr = np.asarray(p, dtype=float).ravel()
    if arr.size == 0:
        raise InvalidProbabilityVectorError("Probability vector is empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidProbabilityVectorError("Probability vector has non-finite entries")
    if np.any(arr < -tol):
        raise InvalidProbabilityVectorError(
            f"Probability vector has negative entry {float(arr.min()):.6g}"
        )
    total = float(arr.sum())
    if abs(total - 1.0) > tol:
        raise InvalidProbabilityVectorError(f"Probabilities sum to {total:.12g}, not 1")
    return np.clip(arr, 0.0, None)


def psd_sqrt(m: np.ndarray, cutoff: float = ROOT_CUTOFF) -> np.ndarray:
    """Square root of a PSD matrix; eigenvalues at or below cutoff * max are treated as zero"""
    spectrum = hermitian_eig(m, tol=1e-8)
    v = spectrum.eigenvectors
    values = spectrum.eigenvalues
    top = max(float(values[0]), 0.0)
    roots = np.where(values > cutoff * top, np.sqrt(np.clip(values, 0.0, None)), 0.0)
    return (v * roots) @ v.conj().T


def state_fidelity(
    rho,
    sigma,
    psd_tol: float = PSD_TOL,
    trace_tol: float = TRACE_TOL,
) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2"""
    rho = as_matrix(rho)
    sigma = as_matrix(sigma)
    check_density(rho, psd_tol, trace_tol)
    check_density(sigma, psd_tol, trace_tol)
    if rho.shape != sigma.shape:
        raise ValueError(f"Fidelity needs equal shapes, got {rho.shape} and {sigma.shape}")
    # Tr sqrt(sqrt(rho) sigma sqrt(rho)) is the trace norm of sqrt(rho) sqrt(sigma)
    singular = scipy.linalg.svdvals(psd_sqrt(rho) @ psd_sqrt(sigma))
    fidelity = float(np.sum(singular) ** 2)
    return float(min(1.0, max(0.0, fidelity)))


def partial_trace(m, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every subsystem not listed in keep"""
    m = np.asarray(m, dtype=np.complex128)
    dims = list(dims)
    n = len(dims)
    keep = sorted(keep)
    tensor = m.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # trace highest axes first so remaining axis numbers stay valid
    current_n = n
    for axis in sorted(traced, reverse=True):
        tensor = np.trace(tensor, axis1=axis, axis2=axis + current_n)
        current_n -= 1
    kept_dim = int(np.prod([dims[i] for i in keep])) if keep else 1
    return tensor.reshape(kept_dim, kept_dim)


def unit_trace_maximally_mixed(d: int) -> np.ndarray:
    return np.eye(d, dtype=np.complex128) / d


def random_correlation_matrix(
    d: int, rng: np.random.Generator, rank: Optional[int] = None
) -> np.ndarray:
    """Gram matrix of d random unit vectors in C^rank (default rank d)"""
    r = d if rank is None else rank
    g = rng.normal(size=(r, d)) + 1j * rng.normal(size=(r, d))
    g /= np.linalg.norm(g, axis=0, keepdims=True)
    xi = g.conj().T @ g
    np.fill_diagonal(xi, 1.0)
    return 0.5 * (xi + xi.conj().T)


def random_density_matrix(d: int, rng: np.random.Generator, pure: bool = False) -> np.ndarray:
    if pure:
        psi = rng.normal(size=d) + 1j * rng.normal(size=d)
        psi /= np.linalg.norm(psi)
        return np.outer(psi, psi.conj())
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = g @ g.conj().T
    rho /= np.real(np.trace(rho))
    return 0.5 * (rho + rho.conj().T)


def random_phase_vector(d: int, rng: np.random.Generator) -> np.ndarray:
    """Phases in [0, 2pi) with the first fixed to zero"""
    phases = rng.uniform(0.0, 2.0 * np.pi, size=d)
    phases[0] = 0.0
    return phases


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return 0.5 * (a + a.conj().T)
