"""System-environment model of a Schur channel and recovery by environment readout

The dilation is stored as the isometry V|k> = |k> (x) |e_k> with
<e_k|e_l> = xi_kl, the environment starting in |0>. A rank-one measurement
{|mu_m>} on the environment leaves the system with the diagonal Kraus
operator A_m = diag(<mu_m|e_k>), which a diagonal unitary can rotate to
diag(|<mu_m|e_k>|). Perfect recovery is possible exactly when these moduli
are constant in k for every outcome, i.e. when the channel is random unitary.
"""

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from DecoLab import numerics
from DecoLab.channel import DensityMatrix, SchurChannel, _frozen, _rho_array
from DecoLab.decompose import (
    RandomUnitaryDecomposition,
    SearchConfig,
    map_ordered,
    ru_decompose_search,
    verify_decomposition,
)
from DecoLab.exceptions import DecompositionMismatchError, DimensionMismatchError, InvalidParameterError

logger = logging.getLogger(__name__)

GRAM_TOL = 1e-10
RESOLUTION_TOL = 1e-10
FIDELITY_STATES = 16


@dataclass(frozen=True)
class DilationModel:
    """Environment vectors e_k stored as the columns of an (env_dim, sys_dim) array"""

    env_vectors: np.ndarray

    @property
    def sys_dim(self) -> int:
        return int(self.env_vectors.shape[1])

    @property
    def env_dim(self) -> int:
        return int(self.env_vectors.shape[0])

    def gram(self) -> np.ndarray:
        return numerics.gram(self.env_vectors)

    def isometry(self) -> np.ndarray:
        """V of shape (d * r, d), system index major"""
        d, r = self.sys_dim, self.env_dim
        v = np.zeros((d * r, d), dtype=np.complex128)
        for k in range(d):
            v[k * r:(k + 1) * r, k] = self.env_vectors[:, k]
        return v

    def isometry_error(self) -> float:
        v = self.isometry()
        return float(np.linalg.norm(v.conj().T @ v - np.eye(self.sys_dim)))


@dataclass(frozen=True)
class EnvMeasurement:
    """Rank-one resolution of the identity; row m holds |mu_m>"""

    outcome_vectors: np.ndarray

    @property
    def outcomes(self) -> int:
        return int(self.outcome_vectors.shape[0])

    def resolution_error(self) -> float:
        mu = self.outcome_vectors
        total = mu.T @ mu.conj()
        return float(np.linalg.norm(total - np.eye(mu.shape[1])))

    def amplitudes(self, model: DilationModel) -> np.ndarray:
        """a_mk = <mu_m|e_k>"""
        return self.outcome_vectors.conj() @ model.env_vectors

    def to_dict(self) -> dict:
        return {
            "outcomes": self.outcomes,
            "vectors": [[[float(z.real), float(z.imag)] for z in row] for row in self.outcome_vectors],
        }


@dataclass(frozen=True)
class RecoveryReport:
    measurement: EnvMeasurement
    corrections: Tuple[np.ndarray, ...]
    outcome_probabilities: np.ndarray
    worst_case_fidelity: float
    average_entanglement_fidelity: float
    classical_info_bits: float
    outcome_counts: Tuple[int, ...] = ()
    shots: int = 0

    def empirical_frequencies(self) -> np.ndarray:
        if not self.shots:
            return np.zeros(len(self.outcome_counts))
        return np.asarray(self.outcome_counts, dtype=float) / self.shots

    def to_dict(self) -> dict:
        return {
            "outcomes": self.measurement.outcomes,
            "corrections_phases": [[float(x) for x in np.angle(np.diag(c))] for c in self.corrections],
            "outcome_probabilities": [float(p) for p in self.outcome_probabilities],
            "worst_case_fidelity": self.worst_case_fidelity,
            "average_entanglement_fidelity": self.average_entanglement_fidelity,
            "classical_info_bits": self.classical_info_bits,
            "outcome_counts": list(self.outcome_counts),
            "shots": self.shots,
        }


def _check_state(model: DilationModel, rho) -> np.ndarray:
    r = _rho_array(rho)
    if r.shape != (model.sys_dim, model.sys_dim):
        raise DimensionMismatchError(
            f"State has shape {r.shape}, dilation system dimension is {model.sys_dim}"
        )
    return r


def build_dilation(ch: SchurChannel) -> DilationModel:
    """Environment vectors from the Gram factor of xi, env_dim = rank(xi)"""
    factor = numerics.psd_factor(ch.xi)
    model = DilationModel(env_vectors=_frozen(factor))
    error = float(np.max(np.abs(model.gram() - ch.xi)))
    if error > GRAM_TOL:
        logger.warning("Dilation Gram error %.3e exceeds %.1e", error, GRAM_TOL)
    logger.debug("Built dilation: d=%d env_dim=%d", model.sys_dim, model.env_dim)
    return model


def ru_dilation(dec: RandomUnitaryDecomposition) -> DilationModel:
    """Dilation whose computational environment basis reads out the unitary index

    e_k^(i) = sqrt(p_i) conj(phi_ik); outcome i leaves U_i rho U_i^H.
    """
    vectors = np.array([pv.vector for pv in dec.phase_vectors])
    env = np.sqrt(dec.weights)[:, None] * vectors.conj()
    return DilationModel(env_vectors=_frozen(env))


def env_reduced_state(model: DilationModel, rho) -> DensityMatrix:
    """sigma_e = sum_k rho_kk |e_k><e_k|"""
    r = _check_state(model, rho)
    populations = np.real(np.diag(r))
    e = model.env_vectors
    sigma = (e * populations) @ e.conj().T
    return DensityMatrix(rho=_frozen(sigma))


def dilation_channel_output(model: DilationModel, rho) -> DensityMatrix:
    """Tr_env[V rho V^H]"""
    r = _check_state(model, rho)
    v = model.isometry()
    joint = v @ r @ v.conj().T
    out = numerics.partial_trace(joint, [model.sys_dim, model.env_dim], keep=[0])
    return DensityMatrix(rho=_frozen(out))


def _best_corrections(amplitudes: np.ndarray) -> List[np.ndarray]:
    """Diagonal unitaries undoing the phases of each conditional Kraus operator"""
    corrections = []
    for row in amplitudes:
        phases = np.where(np.abs(row) > 0, np.angle(row), 0.0)
        corrections.append(np.exp(-1j * phases))
    return corrections


def entanglement_fidelity(amplitudes: np.ndarray) -> float:
    """(1/d^2) sum_m (sum_k |a_mk|)^2 for the phase-corrected Kraus operators"""
    d = amplitudes.shape[1]
    value = float(np.sum(np.sum(np.abs(amplitudes), axis=1) ** 2) / d**2)
    return min(value, 1.0)


def _recovered_state(amplitudes: np.ndarray, corrections: Sequence[np.ndarray], rho: np.ndarray) -> np.ndarray:
    out = np.zeros_like(rho)
    for a, c in zip(amplitudes, corrections):
        k = c * a
        out += np.outer(k, k.conj()) * rho
    return out


def _sample_counts(probabilities: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF sampling of outcome indices"""
    cdf = np.cumsum(probabilities)
    cdf /= cdf[-1]
    draws = np.searchsorted(cdf, rng.random(shots), side="right")
    draws = np.minimum(draws, len(probabilities) - 1)
    return np.bincount(draws, minlength=len(probabilities))


def _require_verified(dec: RandomUnitaryDecomposition, ch: SchurChannel, tol: float) -> None:
    residual = verify_decomposition(dec, ch).residual
    if residual > tol:
        raise DecompositionMismatchError(
            f"Decomposition residual {residual:.3e} exceeds {tol:.1e}"
        )


def simulate_feedback_recovery(
    ch: SchurChannel,
    dec: RandomUnitaryDecomposition,
    rho,
    shots: int = 10000,
    seed: int = 0,
    residual_tol: float = 1e-8,
) -> RecoveryReport:
    """Measure the environment in the index basis and apply U_i^H for outcome i"""
    _require_verified(dec, ch, residual_tol)
    model = ru_dilation(dec)
    r = _check_state(model, rho)
    numerics.check_density(r)
    measurement = EnvMeasurement(outcome_vectors=_frozen(np.eye(model.env_dim)))
    amplitudes = measurement.amplitudes(model)
    corrections = [np.diag(u).conj() for u in dec.unitaries()]

    probabilities = []
    fidelities = []
    for a, c in zip(amplitudes, corrections):
        conditional = np.outer(a, a.conj()) * r
        p = float(np.real(np.trace(conditional)))
        probabilities.append(p)
        if p <= 0:
            continue
        recovered = np.outer(c, c.conj()) * conditional / p
        fidelities.append(numerics.state_fidelity(r, 0.5 * (recovered + recovered.conj().T)))
    probabilities = np.array(probabilities)

    rng = np.random.default_rng(seed)
    counts = _sample_counts(probabilities, shots, rng) if shots > 0 else np.zeros(len(probabilities), int)
    report = RecoveryReport(
        measurement=measurement,
        corrections=tuple(_frozen(np.diag(c)) for c in corrections),
        outcome_probabilities=probabilities,
        worst_case_fidelity=float(min(fidelities)),
        average_entanglement_fidelity=entanglement_fidelity(
            np.array([c * a for a, c in zip(amplitudes, corrections)])
        ),
        classical_info_bits=numerics.entropy_from_eigenvalues(probabilities),
        outcome_counts=tuple(int(n) for n in counts),
        shots=int(shots),
    )
    logger.info(
        "Feedback recovery: %d outcomes, worst fidelity %.12f, %.6f bits",
        measurement.outcomes,
        report.worst_case_fidelity,
        report.classical_info_bits,
    )
    return report


def correction_from_outcomes(dec: RandomUnitaryDecomposition, outcomes: Iterable[int]) -> np.ndarray:
    """prod_i (U_i^H)^(c_i) from the outcome counts c_i; independent of order"""
    counts = Counter(int(i) for i in outcomes)
    total = np.zeros(dec.dim)
    for index in sorted(counts):
        total = total + counts[index] * dec.phase_vectors[index].phases
    return np.diag(np.exp(1j * total))


def iterated_recovery(
    ch: SchurChannel,
    dec: RandomUnitaryDecomposition,
    n: int,
    rho,
    seed: int = 0,
    residual_tol: float = 1e-8,
) -> RecoveryReport:
    """n dilation steps with fresh environments, correcting once from the outcome counts"""
    if n < 1:
        raise InvalidParameterError(f"Number of steps must be at least 1, got {n}")
    _require_verified(dec, ch, residual_tol)
    model = ru_dilation(dec)
    r0 = _check_state(model, rho)
    numerics.check_density(r0)
    amplitudes = EnvMeasurement(outcome_vectors=np.eye(model.env_dim)).amplitudes(model)

    rng = np.random.default_rng(seed)
    state = r0.copy()
    outcomes = []
    for _ in range(n):
        conditionals = [np.outer(a, a.conj()) * state for a in amplitudes]
        probabilities = np.array([float(np.real(np.trace(c))) for c in conditionals])
        i = int(_sample_counts(probabilities, 1, rng).argmax())
        outcomes.append(i)
        state = conditionals[i] / probabilities[i]

    correction = correction_from_outcomes(dec, outcomes)
    recovered = correction @ state @ correction.conj().T
    fidelity = numerics.state_fidelity(r0, 0.5 * (recovered + recovered.conj().T))
    counts = np.bincount(outcomes, minlength=dec.terms)
    logger.info("Iterated recovery over %d steps: counts %s, fidelity %.12f", n, counts.tolist(), fidelity)
    return RecoveryReport(
        measurement=EnvMeasurement(outcome_vectors=_frozen(np.eye(model.env_dim))),
        corrections=(_frozen(correction),),
        outcome_probabilities=np.asarray(dec.weights),
        worst_case_fidelity=fidelity,
        average_entanglement_fidelity=fidelity,
        classical_info_bits=n * dec.entropy_bits(),
        outcome_counts=tuple(int(c) for c in counts),
        shots=n,
    )


def _isometry_from_params(x: np.ndarray, outcomes: int, env_dim: int) -> np.ndarray:
    """Columns of an outcomes x env_dim isometry via phase-fixed QR"""
    z = (x[: outcomes * env_dim] + 1j * x[outcomes * env_dim:]).reshape(outcomes, env_dim)
    q, rmat = np.linalg.qr(z)
    diag = np.diag(rmat)
    phases = np.where(np.abs(diag) > 0, diag / np.abs(diag), 1.0)
    return q * phases


def _ru_warm_start(
    model: DilationModel, dec: RandomUnitaryDecomposition, outcomes: int
) -> Optional[np.ndarray]:
    """W with W @ E equal to the index-readout amplitudes of dec, padded to outcomes rows"""
    target = ru_dilation(dec).env_vectors
    if target.shape[0] > outcomes:
        logger.warning(
            "Random-unitary warm start needs %d outcomes, only %d allowed; skipping it",
            target.shape[0],
            outcomes,
        )
        return None
    w = target @ np.linalg.pinv(model.env_vectors)
    padded = np.zeros((outcomes, model.env_dim), dtype=np.complex128)
    padded[: w.shape[0]] = w
    return padded


def _sampled_worst_fidelity(
    amplitudes: np.ndarray, corrections: Sequence[np.ndarray], d: int, seed: int, states: int
) -> float:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(7,)))
    worst = 1.0
    for _ in range(states):
        rho = numerics.random_density_matrix(d, rng, pure=True)
        out = _recovered_state(amplitudes, corrections, rho)
        worst = min(worst, numerics.state_fidelity(rho, 0.5 * (out + out.conj().T)))
    return worst


def optimize_recovery_measurement(
    ch: SchurChannel,
    outcomes: Optional[int] = None,
    restarts: int = 256,
    seed: int = 0,
    maxiter: int = 4000,
    dec: Optional[RandomUnitaryDecomposition] = None,
    workers: int = 1,
    states: int = FIDELITY_STATES,
    search_config: Optional[SearchConfig] = None,
    search: bool = True,
) -> RecoveryReport:
    """Search rank-one environment measurements maximizing the entanglement fidelity

    Restart j uses the j-th child of SeedSequence(seed), so the best value is
    monotone in restarts. The index-readout measurement of a random-unitary
    decomposition is always evaluated first when one is available. Without dec,
    a decomposition search runs under search_config unless search is False.
    """
    if restarts < 1:
        raise InvalidParameterError(f"Need at least one optimizer restart, got {restarts}")
    model = build_dilation(ch)
    d, r = model.sys_dim, model.env_dim
    e = model.env_vectors

    if dec is None and search and r > 1:
        config = search_config if search_config is not None else SearchConfig(seed=seed, workers=workers)
        found = ru_decompose_search(ch, config)
        if isinstance(found, RandomUnitaryDecomposition):
            dec = found
    m = outcomes if outcomes is not None else max(r, dec.terms if dec is not None else r)
    if m < r:
        raise InvalidParameterError(f"Need at least env_dim={r} outcomes, got {m}")

    def fidelity_of(w: np.ndarray) -> float:
        return entanglement_fidelity(w @ e)

    candidates: List[Tuple[float, int, np.ndarray]] = []
    if dec is not None:
        warm = _ru_warm_start(model, dec, m)
        if warm is not None:
            candidates.append((fidelity_of(warm), -1, warm))
            logger.info("Random-unitary warm start fidelity %.12f", candidates[0][0])

    def one_restart(item):
        index, seed_seq = item
        rng = np.random.default_rng(seed_seq)
        x0 = rng.normal(size=2 * m * r)
        fit = minimize(
            lambda x: -fidelity_of(_isometry_from_params(x, m, r)),
            x0,
            method="Nelder-Mead",
            options={"maxiter": maxiter, "xatol": 1e-10, "fatol": 1e-13},
        )
        w = _isometry_from_params(fit.x, m, r)
        value = fidelity_of(w)
        logger.debug("Restart %d: fidelity %.12f", index, value)
        return value, index, w

    seeds = np.random.SeedSequence(seed).spawn(restarts)
    candidates.extend(map_ordered(one_restart, list(enumerate(seeds)), workers))
    best_f, best_index, best_w = max(candidates, key=lambda item: (item[0], -item[1]))
    logger.info("Best recovery measurement: fidelity %.12f (restart %d)", best_f, best_index)

    measurement = EnvMeasurement(outcome_vectors=_frozen(best_w.conj()))
    if measurement.resolution_error() > RESOLUTION_TOL:
        logger.warning("Recovery measurement resolution error %.3e", measurement.resolution_error())
    amplitudes = measurement.amplitudes(model)
    corrections = _best_corrections(amplitudes)
    probabilities = np.sum(np.abs(amplitudes) ** 2, axis=1) / d
    return RecoveryReport(
        measurement=measurement,
        corrections=tuple(_frozen(np.diag(c)) for c in corrections),
        outcome_probabilities=probabilities,
        worst_case_fidelity=_sampled_worst_fidelity(amplitudes, corrections, d, seed, states),
        average_entanglement_fidelity=best_f,
        classical_info_bits=numerics.entropy_from_eigenvalues(probabilities),
    )
