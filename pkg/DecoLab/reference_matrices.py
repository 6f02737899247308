"""Embedded example correlation matrices and states

EXTREMAL_D4: rank-two ququart map that is extremal, so no random-unitary
decomposition exists and environment readout cannot undo it.
QUTRIT_STRICT_BOUND: rank-two qutrit map whose only decomposition uses two
non-orthogonal unitaries, so H(p) exceeds S(xi/3).
QUBIT_06: qubit map with real off-diagonal 0.6.
"""

import numpy as np

_A = 1.0 / np.sqrt(2.0)

EXTREMAL_D4 = np.array(
    [
        [1, 0, _A, _A],
        [0, 1, _A, 1j * _A],
        [_A, _A, 1, (1 + 1j) / 2],
        [_A, -1j * _A, (1 - 1j) / 2, 1],
    ],
    dtype=np.complex128,
)

QUTRIT_STRICT_BOUND = np.array(
    [
        [1, 0, _A],
        [0, 1, _A],
        [_A, _A, 1],
    ],
    dtype=np.complex128,
)

QUBIT_06 = np.array([[1, 0.6], [0.6, 1]], dtype=np.complex128)

PLUS_STATE = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=np.complex128)


def qubit_correlation(c: complex) -> np.ndarray:
    return np.array([[1, c], [np.conj(c), 1]], dtype=np.complex128)


REFERENCE_MATRICES = {
    "extremal_d4": EXTREMAL_D4,
    "qutrit_strict_bound": QUTRIT_STRICT_BOUND,
    "qubit_06": QUBIT_06,
}
