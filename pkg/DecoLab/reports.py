"""Run reports and decay-curve tables"""

import csv
import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, TextIO

import numpy as np

from DecoLab.channel import SchurChannel, _rho_array, apply_schrodinger
from DecoLab.decolab_enums import ExitCode
from DecoLab.exceptions import DimensionMismatchError, InvalidParameterError

logger = logging.getLogger(__name__)

DECAY_COLUMNS = ("n", "k", "l", "observed", "predicted")
REPORT_VERSION = 1


def _jsonable(value: Any) -> Any:
    """json.dump default hook for numpy scalars, arrays and complex numbers"""
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value):
            return [[float(z.real), float(z.imag)] for z in value.ravel()]
        return value.tolist()
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


@dataclass
class RunReport:
    """Result of one command: echo, seed, tolerances, results and verdict"""

    command: str
    seed: int
    tolerances: Dict[str, float]
    results: Dict[str, Any] = field(default_factory=dict)
    passed: Optional[bool] = None
    exit_code: ExitCode = ExitCode.SUCCESS
    table: Optional[List["DecayRow"]] = field(default=None, repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "version": REPORT_VERSION,
            "command": self.command,
            "seed": self.seed,
            "tolerances": self.tolerances,
            "results": self.results,
            "passed": self.passed,
            "exit_code": int(self.exit_code),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, default=_jsonable)

    def write(self, stream: TextIO) -> None:
        stream.write(self.to_json())
        stream.write("\n")


@dataclass(frozen=True)
class DecayRow:
    n: int
    k: int
    l: int
    observed: float
    predicted: float

    def as_tuple(self) -> tuple:
        return (self.n, self.k, self.l, self.observed, self.predicted)


def decay_curve(ch: SchurChannel, rho, n_max: int) -> List[DecayRow]:
    """|[E_S^n(rho)]_kl| by repeated application next to |xi_lk|^n |rho_kl|, k != l"""
    if n_max < 1:
        raise InvalidParameterError(f"n_max must be at least 1, got {n_max}")
    r = _rho_array(rho)
    if r.shape != (ch.dim, ch.dim):
        raise DimensionMismatchError(f"State has shape {r.shape}, channel dimension is {ch.dim}")
    moduli = np.abs(np.asarray(ch.xi))
    initial = np.abs(r)
    rows = []
    state = r
    for n in range(1, n_max + 1):
        state = apply_schrodinger(ch, state).rho
        for k in range(ch.dim):
            for l in range(ch.dim):
                if k == l:
                    continue
                rows.append(
                    DecayRow(
                        n=n,
                        k=k,
                        l=l,
                        observed=float(abs(state[k, l])),
                        predicted=float(moduli[l, k] ** n * initial[k, l]),
                    )
                )
    logger.debug("Decay curve: %d rows up to n=%d", len(rows), n_max)
    return rows


def write_csv(rows: List[DecayRow], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(DECAY_COLUMNS)
    for row in rows:
        writer.writerow([row.n, row.k, row.l, repr(row.observed), repr(row.predicted)])
