"""Random-unitary decompositions of decoherence maps

Decides whether a Schur channel can be undone by reading out a classical
index from the environment: Choi extremality certificates, the exact
two-term decomposition for qubits, and a seeded search (spectral shortcut,
extreme-point peeling, joint least-squares fit) for higher dimensions.

Conventions: a phase vector |phi> = sum_k exp(i phi_k)|k> with phi_1 = 0,
xi = sum_i p_i |phi_i><phi_i|, and the implied diagonal unitary is
U_i = diag(exp(-i phi_ik)), so that xi o O = sum_i p_i U_i^H O U_i.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from scipy.optimize import least_squares, minimize, nnls

from DecoLab import numerics
from DecoLab.channel import SchurChannel, canonical_kraus
from DecoLab.decolab_config import DecolabConfig
from DecoLab.decolab_enums import FailureReason, SearchStrategy, Verdict
from DecoLab.exceptions import DimensionMismatchError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
FEASIBILITY_TOL = 1e-10
EXTREMALITY_TOL = 1e-10
SOUNDNESS_FACTOR = 10.0
BRANCHING = 3
FIT_STARTS = 16


@dataclass(frozen=True)
class PhaseVector:
    """Unimodular vector sum_k exp(i phi_k)|k> in the gauge phi_1 = 0"""

    phases: np.ndarray

    @classmethod
    def from_phases(cls, phases: Sequence[float]) -> "PhaseVector":
        phases = np.asarray(phases, dtype=float)
        gauged = np.mod(phases - phases[0], TWO_PI)
        # mod can return 2pi for tiny negative inputs
        gauged[np.isclose(gauged, TWO_PI, rtol=0.0, atol=1e-15)] = 0.0
        gauged[0] = 0.0
        gauged.setflags(write=False)
        return cls(phases=gauged)

    @classmethod
    def from_vector(cls, v: np.ndarray) -> "PhaseVector":
        """Phases of v; the moduli are discarded"""
        return cls.from_phases(np.angle(np.asarray(v, dtype=np.complex128)))

    @property
    def dim(self) -> int:
        return int(self.phases.shape[0])

    @property
    def vector(self) -> np.ndarray:
        return np.exp(1j * self.phases)

    @property
    def unitary(self) -> np.ndarray:
        """U = diag(exp(-i phi_k))"""
        return np.diag(np.exp(-1j * self.phases))

    def projector(self) -> np.ndarray:
        v = self.vector
        return np.outer(v, v.conj())


@dataclass(frozen=True)
class RandomUnitaryDecomposition:
    weights: np.ndarray
    phase_vectors: Tuple[PhaseVector, ...]
    strategy: SearchStrategy = SearchStrategy.SPECTRAL

    @property
    def dim(self) -> int:
        return self.phase_vectors[0].dim

    @property
    def terms(self) -> int:
        return len(self.phase_vectors)

    def reconstruct(self) -> np.ndarray:
        vectors = np.array([pv.vector for pv in self.phase_vectors]).T
        return (vectors * self.weights) @ vectors.conj().T

    def unitaries(self) -> List[np.ndarray]:
        return [pv.unitary for pv in self.phase_vectors]

    def entropy_bits(self) -> float:
        return numerics.entropy_from_eigenvalues(self.weights)

    def gram(self) -> np.ndarray:
        """Tr[U_i U_j^H] / d"""
        vectors = np.array([pv.vector for pv in self.phase_vectors])
        return (vectors.conj() @ vectors.T) / self.dim

    def to_dict(self) -> dict:
        return {
            "weights": [float(w) for w in self.weights],
            "phases": [[float(x) for x in pv.phases] for pv in self.phase_vectors],
            "strategy": self.strategy.value,
            "classical_info_bits": self.entropy_bits(),
        }


@dataclass(frozen=True)
class ExtremalityCertificate:
    kraus_rank: int
    gram_rank: int
    verdict: Verdict
    not_random_unitary: bool
    singular_values: Tuple[float, ...] = ()
    tol: float = EXTREMALITY_TOL

    def to_dict(self) -> dict:
        return {
            "kraus_rank": self.kraus_rank,
            "gram_rank": self.gram_rank,
            "verdict": self.verdict.value,
            "not_random_unitary": self.not_random_unitary,
            "singular_values": list(self.singular_values),
            "tol": self.tol,
        }


@dataclass(frozen=True)
class SearchFailure:
    """Search outcome without a decomposition; a value, never raised"""

    reason: FailureReason
    certificate: ExtremalityCertificate
    best_residual: float = float("inf")
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "reason": self.reason.value,
            "certificate": self.certificate.to_dict(),
            "best_residual": self.best_residual,
            "message": self.message,
        }


@dataclass(frozen=True)
class VerificationReport:
    residual: float
    entropy_bits: float
    gram: np.ndarray

    def to_dict(self) -> dict:
        return {
            "residual": self.residual,
            "classical_info_bits": self.entropy_bits,
            "gram_abs": np.abs(self.gram).round(12).tolist(),
        }


@dataclass
class SearchConfig:
    """Parameters of ru_decompose_search"""

    residual_tol: float = 1e-8
    min_weight: float = 1e-10
    starts: int = 64
    max_terms_factor: int = 4
    unimodular_tol: float = 1e-8
    rank_tol: float = numerics.RANK_TOL
    seed: int = 0
    workers: int = 1
    branching: int = BRANCHING

    @classmethod
    def from_config(cls, cfg: DecolabConfig, seed: Optional[int] = None) -> "SearchConfig":
        return cls(
            residual_tol=cfg.residual_tol,
            min_weight=cfg.min_weight,
            starts=cfg.search_starts,
            max_terms_factor=cfg.max_terms_factor,
            unimodular_tol=cfg.unimodular_tol,
            rank_tol=cfg.rank_tol,
            seed=cfg.seed if seed is None else seed,
            workers=cfg.workers,
        )


SearchResult = Union[RandomUnitaryDecomposition, SearchFailure]


def map_ordered(fn: Callable, items: Sequence, workers: int) -> list:
    """Evaluate fn over items, returning results in input order"""
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(fn, items))
    return [fn(item) for item in items]


def extremality_test(ch: SchurChannel, tol: float = EXTREMALITY_TOL) -> ExtremalityCertificate:
    """Choi test: are the products E_i^H E_j of the canonical Kraus operators independent?

    All operators are diagonal, so each product is the d-vector
    conj(e_i) * e_j and the test reduces to the rank of an r^2 x d matrix.
    """
    diags = canonical_kraus(ch).diagonals
    r = diags.shape[0]
    products = np.array([diags[i].conj() * diags[j] for i in range(r) for j in range(r)])
    singular = scipy.linalg.svd(products, compute_uv=False)
    top = float(singular[0]) if singular.size else 0.0
    counted = singular[singular > tol * top] if top > 0 else singular[:0]
    gram_rank = int(counted.size)
    verdict = Verdict.EXTREMAL if gram_rank == r * r else Verdict.NOT_EXTREMAL
    if verdict is Verdict.EXTREMAL:
        assert r * r <= ch.dim, f"Extremal certificate with r^2={r * r} > d={ch.dim}"

    not_ru = verdict is Verdict.EXTREMAL and r >= 2
    if not_ru and float(counted.min()) <= SOUNDNESS_FACTOR * tol * top:
        logger.warning(
            "Extremality margin too thin (min singular value %.3e), not certifying",
            float(counted.min()),
        )
        not_ru = False
    logger.debug("Extremality test: r=%d gram_rank=%d verdict=%s", r, gram_rank, verdict.value)
    return ExtremalityCertificate(
        kraus_rank=r,
        gram_rank=gram_rank,
        verdict=verdict,
        not_random_unitary=not_ru,
        singular_values=tuple(float(s) for s in singular),
        tol=tol,
    )


def ru_decompose_qubit(ch: SchurChannel, min_weight: float = 1e-10) -> RandomUnitaryDecomposition:
    """Exact orthogonal decomposition for d = 2

    For xi = [[1, c], [conj(c), 1]] the eigenvectors are (1, +-exp(-i arg c))/sqrt(2)
    with eigenvalues 1 +- |c|, so both are unimodular up to sqrt(2).
    """
    if ch.dim != 2:
        raise DimensionMismatchError(f"Qubit decomposition needs d=2, got d={ch.dim}")
    c = complex(ch.xi[0, 1])
    modulus = min(abs(c), 1.0)
    theta = float(np.angle(c)) if modulus > 0 else 0.0
    terms = [
        ((1.0 + modulus) / 2.0, PhaseVector.from_phases([0.0, -theta])),
        ((1.0 - modulus) / 2.0, PhaseVector.from_phases([0.0, np.pi - theta])),
    ]
    kept = [(w, pv) for w, pv in terms if w > min_weight]
    weights = np.array([w for w, _ in kept])
    weights = weights / weights.sum()
    return RandomUnitaryDecomposition(
        weights=weights,
        phase_vectors=tuple(pv for _, pv in kept),
        strategy=SearchStrategy.QUBIT_EXACT,
    )


def planted_correlation(weights: Sequence[float], phase_vectors: Sequence) -> np.ndarray:
    """xi = sum_i p_i |phi_i><phi_i| for given weights and phase vectors"""
    pvs = [pv if isinstance(pv, PhaseVector) else PhaseVector.from_phases(pv) for pv in phase_vectors]
    weights = numerics.check_probability_vector(weights)
    return RandomUnitaryDecomposition(weights=weights, phase_vectors=tuple(pvs)).reconstruct()


def verify_decomposition(dec: RandomUnitaryDecomposition, ch: SchurChannel) -> VerificationReport:
    if dec.dim != ch.dim:
        raise DimensionMismatchError(
            f"Decomposition dimension {dec.dim} does not match channel dimension {ch.dim}"
        )
    residual = float(np.linalg.norm(ch.xi - dec.reconstruct()))
    return VerificationReport(residual=residual, entropy_bits=dec.entropy_bits(), gram=dec.gram())


def orthogonality_check(dec: RandomUnitaryDecomposition, tol: float = 1e-9) -> bool:
    """True iff |Tr[U_i U_j^H]|/d <= tol for all i != j"""
    g = np.abs(dec.gram())
    off = ~np.eye(g.shape[0], dtype=bool)
    return bool(np.all(g[off] <= tol))


def _phases_from_params(x: np.ndarray) -> np.ndarray:
    return np.concatenate(([0.0], x))


def _spectral_decomposition(
    xi: np.ndarray, cfg: SearchConfig
) -> Optional[RandomUnitaryDecomposition]:
    """Use the eigenvectors directly when they are all unimodular"""
    d = xi.shape[0]
    spectrum = numerics.hermitian_eig(xi, tol=1e-9)
    r = spectrum.rank(cfg.rank_tol)
    weights, pvs = [], []
    for i in range(r):
        w = np.sqrt(d) * spectrum.eigenvectors[:, i]
        if np.max(np.abs(np.abs(w) - 1.0)) > cfg.unimodular_tol:
            return None
        weights.append(spectrum.eigenvalues[i] / d)
        pvs.append(PhaseVector.from_vector(w))
    weights = np.array(weights)
    return RandomUnitaryDecomposition(
        weights=weights / weights.sum(),
        phase_vectors=tuple(pvs),
        strategy=SearchStrategy.SPECTRAL,
    )


class _PeelingSearch:
    """Extreme-point peeling over unimodular vectors

    At each level the largest t with xi - t|phi><phi| >= 0 is
    t(phi) = 1 / <phi|xi^+|phi> for phi in the range of xi (0 otherwise). The
    remainder (xi - t|phi><phi|)/(1 - t) is again a correlation matrix of
    lower rank, so the recursion stops at a rank-one unimodular projector.
    """

    def __init__(self, cfg: SearchConfig, max_terms: int):
        self.cfg = cfg
        self.max_terms = max_terms

    def run(self, xi: np.ndarray) -> Optional[List[Tuple[float, PhaseVector]]]:
        return self._peel(xi, depth=0, branch=0)

    def _peel(self, xi: np.ndarray, depth: int, branch: int):
        if depth >= self.max_terms:
            return None
        d = xi.shape[0]
        spectrum = numerics.hermitian_eig(xi, tol=1e-8)
        r = spectrum.rank(self.cfg.rank_tol)
        if r == 0:
            return None
        if r == 1:
            top = np.sqrt(d) * spectrum.eigenvectors[:, 0]
            if np.max(np.abs(np.abs(top) - 1.0)) > np.sqrt(self.cfg.residual_tol):
                return None
            return [(1.0, PhaseVector.from_vector(top))]

        candidates = self._candidates(xi, spectrum, r, depth, branch)
        for index, (t, pv) in enumerate(candidates[: self.cfg.branching]):
            if t <= self.cfg.min_weight:
                continue
            logger.debug("Peel depth %d: t=%.6f phases=%s", depth, t, np.round(pv.phases, 6))
            if t >= 1.0 - self.cfg.residual_tol:
                return [(1.0, pv)]
            remainder = (xi - t * pv.projector()) / (1.0 - t)
            remainder = 0.5 * (remainder + remainder.conj().T)
            np.fill_diagonal(remainder, 1.0)
            rest = self._peel(remainder, depth + 1, index)
            if rest is not None:
                return [(t, pv)] + [((1.0 - t) * w, q) for w, q in rest]
        return None

    def _candidates(self, xi, spectrum, r, depth, branch) -> List[Tuple[float, PhaseVector]]:
        d = xi.shape[0]
        values = spectrum.eigenvalues[:r]
        vecs = spectrum.eigenvectors[:, :r]
        null = spectrum.eigenvectors[:, r:]
        pinv = (vecs / values) @ vecs.conj().T

        def weight_of(phases: np.ndarray) -> float:
            phi = np.exp(1j * phases)
            q = float(np.real(phi.conj() @ pinv @ phi))
            return 1.0 / q if q > 0 else 0.0

        def margin_ok(phases: np.ndarray, t: float) -> bool:
            phi = np.exp(1j * phases)
            lowest = np.linalg.eigvalsh(xi - t * np.outer(phi, phi.conj()))[0]
            return lowest >= -1e-8

        def one_start(seed_seq: np.random.SeedSequence):
            rng = np.random.default_rng(seed_seq)
            x0 = rng.uniform(0.0, TWO_PI, size=d - 1)
            if r < d:
                def null_residual(x):
                    overlap = null.conj().T @ np.exp(1j * _phases_from_params(x))
                    return np.concatenate([overlap.real, overlap.imag])

                fit = least_squares(null_residual, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15)
                if np.linalg.norm(fit.fun) > FEASIBILITY_TOL:
                    return 0.0, None
                phases = _phases_from_params(fit.x)
            else:
                fit = minimize(
                    lambda x: 1.0 / max(weight_of(_phases_from_params(x)), 1e-300),
                    x0,
                    method="Nelder-Mead",
                    options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 400 * d},
                )
                phases = _phases_from_params(fit.x)
            t = weight_of(phases)
            if not margin_ok(phases, t):
                return 0.0, None
            return t, PhaseVector.from_phases(phases)

        seeds = np.random.SeedSequence(self.cfg.seed, spawn_key=(depth, branch)).spawn(self.cfg.starts)
        results = map_ordered(one_start, seeds, self.cfg.workers)
        ranked = sorted(
            ((t, i, pv) for i, (t, pv) in enumerate(results) if pv is not None),
            key=lambda item: (-item[0], item[1]),
        )
        unique: List[Tuple[float, PhaseVector]] = []
        for t, _, pv in ranked:
            if all(np.max(np.abs(np.exp(1j * pv.phases) - np.exp(1j * q.phases))) > 1e-6 for _, q in unique):
                unique.append((t, pv))
        logger.debug("Depth %d: %d feasible starts, %d distinct", depth, len(ranked), len(unique))
        return unique


def _stacked_projectors(pvs: Sequence[PhaseVector]) -> np.ndarray:
    cols = [pv.projector().ravel() for pv in pvs]
    a = np.array(cols).T
    return np.vstack([a.real, a.imag])


def _refit_weights(xi: np.ndarray, pvs: Sequence[PhaseVector]) -> np.ndarray:
    target = xi.ravel()
    b = np.concatenate([target.real, target.imag])
    weights, _ = nnls(_stacked_projectors(pvs), b)
    total = weights.sum()
    return weights / total if total > 0 else weights


def _polish(
    xi: np.ndarray, weights: np.ndarray, pvs: Sequence[PhaseVector]
) -> Tuple[np.ndarray, List[PhaseVector]]:
    """Joint least-squares refinement of weights (softmax) and free phases"""
    d = xi.shape[0]
    k = len(pvs)
    x0 = np.concatenate(
        [np.log(np.clip(weights, 1e-300, None)), np.concatenate([pv.phases[1:] for pv in pvs])]
    )
    fit = least_squares(
        lambda x: _fit_residual(xi, x, k, d), x0, xtol=1e-15, ftol=1e-15, gtol=1e-15
    )
    return _unpack(fit.x, k, d)


def _unpack(x: np.ndarray, k: int, d: int) -> Tuple[np.ndarray, List[PhaseVector]]:
    logits = x[:k]
    weights = np.exp(logits - logits.max())
    weights = weights / weights.sum()
    phases = x[k:].reshape(k, d - 1)
    return weights, [PhaseVector.from_phases(_phases_from_params(row)) for row in phases]


def _fit_residual(xi: np.ndarray, x: np.ndarray, k: int, d: int) -> np.ndarray:
    logits = x[:k]
    weights = np.exp(logits - logits.max())
    weights = weights / weights.sum()
    phases = np.hstack([np.zeros((k, 1)), x[k:].reshape(k, d - 1)])
    vectors = np.exp(1j * phases).T
    diff = xi - (vectors * weights) @ vectors.conj().T
    iu = np.triu_indices(d, 1)
    off = diff[iu]
    return np.concatenate([off.real, off.imag])


def _joint_fit(
    xi: np.ndarray, cfg: SearchConfig, rank: int, max_terms: int
) -> Optional[Tuple[np.ndarray, List[PhaseVector]]]:
    """Multi-start least-squares fit with a fixed number of terms"""
    d = xi.shape[0]
    best = None
    best_norm = np.inf
    for k in range(max(rank, 2), min(max_terms, rank + d) + 1):
        seeds = np.random.SeedSequence(cfg.seed, spawn_key=(1000 + k,)).spawn(min(cfg.starts, FIT_STARTS))

        def one_start(seed_seq, k=k):
            rng = np.random.default_rng(seed_seq)
            x0 = np.concatenate(
                [rng.normal(scale=0.1, size=k), rng.uniform(0.0, TWO_PI, size=k * (d - 1))]
            )
            fit = least_squares(
                lambda x: _fit_residual(xi, x, k, d), x0, xtol=1e-15, ftol=1e-15, gtol=1e-15
            )
            return float(np.linalg.norm(fit.fun)), fit.x

        results = map_ordered(one_start, seeds, cfg.workers)
        norm, x = min(((n, i, x) for i, (n, x) in enumerate(results)), key=lambda item: item[:2])[::2]
        logger.debug("Joint fit with %d terms: best off-diagonal residual %.3e", k, norm)
        if norm < best_norm:
            best_norm = norm
            best = _unpack(x, k, d)
        if norm <= cfg.residual_tol / 10.0:
            break
    return best


def _finalize(
    xi: np.ndarray,
    weights: np.ndarray,
    pvs: Sequence[PhaseVector],
    strategy: SearchStrategy,
    cfg: SearchConfig,
) -> Tuple[RandomUnitaryDecomposition, float]:
    """Drop negligible terms, merge duplicates, sort by weight and measure the residual"""
    merged: List[Tuple[float, PhaseVector]] = []
    for w, pv in zip(weights, pvs):
        for i, (mw, mpv) in enumerate(merged):
            if np.max(np.abs(pv.vector - mpv.vector)) < 1e-9:
                merged[i] = (mw + w, mpv)
                break
        else:
            merged.append((float(w), pv))
    kept = [(w, pv) for w, pv in merged if w >= cfg.min_weight]
    kept.sort(key=lambda item: (-item[0], tuple(item[1].phases)))
    weights = np.array([w for w, _ in kept])
    weights = weights / weights.sum()
    dec = RandomUnitaryDecomposition(
        weights=weights, phase_vectors=tuple(pv for _, pv in kept), strategy=strategy
    )
    residual = float(np.linalg.norm(xi - dec.reconstruct()))
    return dec, residual


def ru_decompose_search(ch: SchurChannel, config: Optional[SearchConfig] = None) -> SearchResult:
    """Find p_i and phase vectors with xi = sum_i p_i |phi_i><phi_i|

    Returns the decomposition on success; otherwise a SearchFailure carrying
    the extremality certificate, tagged NotRandomUnitary only when the
    certificate proves it.
    """
    cfg = config or SearchConfig()
    xi = np.array(ch.xi)
    d = ch.dim
    certificate = extremality_test(ch)
    if certificate.not_random_unitary:
        logger.info(
            "Channel is extremal with Kraus rank %d: no random-unitary decomposition",
            certificate.kraus_rank,
        )
        return SearchFailure(
            reason=FailureReason.NOT_RANDOM_UNITARY,
            certificate=certificate,
            message="extremal map with Kraus rank >= 2",
        )

    if d == 2:
        return ru_decompose_qubit(ch, cfg.min_weight)

    max_terms = cfg.max_terms_factor * d
    best_residual = np.inf

    spectral = _spectral_decomposition(xi, cfg)
    if spectral is not None:
        dec, residual = _finalize(xi, spectral.weights, spectral.phase_vectors, SearchStrategy.SPECTRAL, cfg)
        if residual <= cfg.residual_tol:
            logger.info("Spectral decomposition with %d terms, residual %.3e", dec.terms, residual)
            return dec
        best_residual = min(best_residual, residual)

    logger.info("Starting peeling search (d=%d, rank=%d, %d starts)", d, ch.rank, cfg.starts)
    peeled = _PeelingSearch(cfg, max_terms).run(xi)
    if peeled is not None:
        pvs = [pv for _, pv in peeled]
        weights = _refit_weights(xi, pvs)
        dec, residual = _finalize(xi, weights, pvs, SearchStrategy.PEELING, cfg)
        if residual > cfg.residual_tol:
            weights, pvs = _polish(xi, dec.weights, dec.phase_vectors)
            dec, residual = _finalize(xi, weights, pvs, SearchStrategy.PEELING, cfg)
        logger.info("Peeling found %d terms, residual %.3e", dec.terms, residual)
        if residual <= cfg.residual_tol:
            return dec
        best_residual = min(best_residual, residual)
    else:
        logger.warning("Peeling search did not reach a rank-one remainder, trying joint fit")

    fitted = _joint_fit(xi, cfg, ch.rank, max_terms)
    if fitted is not None:
        weights, pvs = fitted
        dec, residual = _finalize(xi, weights, pvs, SearchStrategy.JOINT_FIT, cfg)
        logger.info("Joint fit found %d terms, residual %.3e", dec.terms, residual)
        if residual <= cfg.residual_tol:
            return dec
        best_residual = min(best_residual, residual)

    logger.warning("Random-unitary search inconclusive, best residual %.3e", best_residual)
    return SearchFailure(
        reason=FailureReason.INCONCLUSIVE,
        certificate=certificate,
        best_residual=float(best_residual),
        message="no decomposition within residual tolerance",
    )
