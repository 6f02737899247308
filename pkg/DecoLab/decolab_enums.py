"""Enumerations and constants for DecoLab

This module contains the enumerations used to tag certificates, search
outcomes and command-line exit codes, providing type-safe constants
shared by the library modules and the CLI.
"""

from enum import Enum, IntEnum


class Verdict(Enum):
    """Outcome of the Choi linear-independence test"""

    EXTREMAL = "Extremal"
    NOT_EXTREMAL = "NotExtremal"


class FailureReason(Enum):
    """Why a random-unitary search returned no decomposition

    NOT_RANDOM_UNITARY is only emitted alongside a sound extremality
    certificate; everything else is reported as INCONCLUSIVE.
    """

    NOT_RANDOM_UNITARY = "NotRandomUnitary"
    INCONCLUSIVE = "Inconclusive"


class SearchStrategy(Enum):
    """Route that produced a random-unitary decomposition"""

    QUBIT_EXACT = "qubit_exact"
    SPECTRAL = "spectral"
    PEELING = "peeling"
    JOINT_FIT = "joint_fit"


class ExitCode(IntEnum):
    """Process exit codes of the decolab command"""

    SUCCESS = 0
    VALIDATION_ERROR = 1
    IMPOSSIBLE = 2


class OutputFormat(Enum):
    JSON = "json"
    CSV = "csv"
