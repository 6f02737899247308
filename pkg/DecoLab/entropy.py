"""Entropy exchange and the information accounting of decoherence

Three routes to the entropy exchange S_ex(rho) are provided: the closed
form S(sqrt(rho_inf) xi sqrt(rho_inf)) with rho_inf the diagonal of rho, the
environment state of an explicit dilation, and the index Gram matrix of a
random-unitary decomposition. All entropies are in bits.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from DecoLab import numerics
from DecoLab.channel import SchurChannel, _rho_array, apply_schrodinger
from DecoLab.decompose import RandomUnitaryDecomposition, orthogonality_check
from DecoLab.dilation import DilationModel, env_reduced_state
from DecoLab.exceptions import DimensionMismatchError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InfoReport:
    s_ex: float
    entropy_production: float
    s_ex_max_mixed: float
    h_p: Optional[float] = None
    bound_gap: Optional[float] = None
    orthogonal: Optional[bool] = None

    def to_dict(self) -> dict:
        return {
            "s_ex": self.s_ex,
            "entropy_production": self.entropy_production,
            "s_ex_max_mixed": self.s_ex_max_mixed,
            "h_p": self.h_p,
            "bound_gap": self.bound_gap,
            "orthogonal": self.orthogonal,
        }


@dataclass(frozen=True)
class ReferenceFrameReport:
    """Joint reference-system state after decoherence and its correlations"""

    joint_state: np.ndarray
    mutual_info_before: float
    mutual_info_after: float

    def to_dict(self) -> dict:
        return {
            "mutual_info_before": self.mutual_info_before,
            "mutual_info_after": self.mutual_info_after,
            "correlation_loss": self.mutual_info_before - self.mutual_info_after,
        }


def _state_for(ch: SchurChannel, rho) -> np.ndarray:
    r = _rho_array(rho)
    if r.shape != (ch.dim, ch.dim):
        raise DimensionMismatchError(f"State has shape {r.shape}, channel dimension is {ch.dim}")
    numerics.check_density(r)
    return r


def entropy_exchange(ch: SchurChannel, rho) -> float:
    """S(sqrt(rho_inf) xi sqrt(rho_inf))"""
    r = _state_for(ch, rho)
    roots = np.sqrt(np.clip(np.real(np.diag(r)), 0.0, None))
    weighted = roots[:, None] * np.asarray(ch.xi) * roots[None, :]
    return numerics.von_neumann_entropy(weighted)


def entropy_exchange_via_dilation(model: DilationModel, rho) -> float:
    """Entropy of the environment after the interaction"""
    sigma = env_reduced_state(model, rho)
    return numerics.von_neumann_entropy(sigma.rho)


def entropy_exchange_ru(dec: RandomUnitaryDecomposition, rho) -> float:
    """S(sum_ij sqrt(p_i p_j) Tr[U_i rho U_j^H] |i><j|)"""
    r = _rho_array(rho)
    if r.shape != (dec.dim, dec.dim):
        raise DimensionMismatchError(
            f"State has shape {r.shape}, decomposition dimension is {dec.dim}"
        )
    vectors = np.array([pv.vector for pv in dec.phase_vectors])
    populations = np.real(np.diag(r))
    traces = (vectors.conj() * populations) @ vectors.T
    roots = np.sqrt(dec.weights)
    return numerics.von_neumann_entropy(roots[:, None] * traces * roots[None, :])


def check_bounds(
    ch: SchurChannel, rho, dec: Optional[RandomUnitaryDecomposition] = None
) -> InfoReport:
    """Entropy-production bound and, with a decomposition, the classical-information bound"""
    r = _state_for(ch, rho)
    s_ex = entropy_exchange(ch, r)
    output = apply_schrodinger(ch, r).rho
    production = abs(
        numerics.von_neumann_entropy(output, normalize=True) - numerics.von_neumann_entropy(r)
    )
    s_max_mixed = numerics.von_neumann_entropy(np.asarray(ch.xi) / ch.dim)
    if production > s_ex + 1e-9:
        logger.warning("Entropy production %.12f exceeds entropy exchange %.12f", production, s_ex)

    h_p = gap = orthogonal = None
    if dec is not None:
        if dec.dim != ch.dim:
            raise DimensionMismatchError(
                f"Decomposition dimension {dec.dim} does not match channel dimension {ch.dim}"
            )
        h_p = dec.entropy_bits()
        gap = h_p - s_ex
        orthogonal = orthogonality_check(dec)
        logger.info("H(p)=%.9f S(xi/d)=%.9f orthogonal=%s", h_p, s_max_mixed, orthogonal)
    return InfoReport(
        s_ex=s_ex,
        entropy_production=production,
        s_ex_max_mixed=s_max_mixed,
        h_p=h_p,
        bound_gap=gap,
        orthogonal=orthogonal,
    )


def mutual_information(joint: np.ndarray, d: int) -> float:
    """I(r:s) = S(rho_r) + S(rho_s) - S(R) for R on C^d (x) C^d"""
    joint = np.asarray(joint, dtype=np.complex128)
    rho_r = numerics.partial_trace(joint, [d, d], keep=[0])
    rho_s = numerics.partial_trace(joint, [d, d], keep=[1])
    support = np.flatnonzero(np.real(np.diag(joint)) > numerics.ENTROPY_CUTOFF)
    restricted = joint[np.ix_(support, support)]
    return (
        numerics.von_neumann_entropy(rho_r)
        + numerics.von_neumann_entropy(rho_s)
        - numerics.von_neumann_entropy(restricted)
    )


def reference_frame_state(ch: SchurChannel, p) -> ReferenceFrameReport:
    """R = sum_ij xi_ji sqrt(p_i p_j) |i><j|_r (x) |i><j| for the purification sum_i sqrt(p_i)|i>|i>"""
    p = numerics.check_probability_vector(p)
    d = ch.dim
    if p.shape[0] != d:
        raise DimensionMismatchError(f"Probability vector has length {p.shape[0]}, channel dimension is {d}")
    roots = np.sqrt(p)
    joint = np.zeros((d * d, d * d), dtype=np.complex128)
    diagonal = np.arange(d) * (d + 1)
    joint[np.ix_(diagonal, diagonal)] = np.asarray(ch.xi).T * np.outer(roots, roots)
    before = 2.0 * numerics.entropy_from_eigenvalues(p)
    after = mutual_information(joint, d)
    logger.debug("Reference correlations: before %.9f after %.9f", before, after)
    return ReferenceFrameReport(joint_state=joint, mutual_info_before=before, mutual_info_after=after)
