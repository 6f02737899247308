"""Reading and writing matrix files

A matrix file is a JSON document {"dim": d, "entries": rows} where rows is a
row-major list of d lists of [re, im] pairs. Floats are written with
Python's shortest round-tripping repr, so write followed by read is exact.
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, TextIO, Union

import numpy as np

from DecoLab.exceptions import MatrixFileError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _check_number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MatrixFileError(f"{where}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise MatrixFileError(f"{where}: entry is not finite")
    return value


def matrix_from_document(doc: Any, source: str = "<document>") -> np.ndarray:
    """Convert a parsed matrix document to a complex array"""
    if not isinstance(doc, dict) or "dim" not in doc or "entries" not in doc:
        raise MatrixFileError(f"{source}: expected an object with 'dim' and 'entries'")
    dim = doc["dim"]
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise MatrixFileError(f"{source}: 'dim' must be a positive integer, got {dim!r}")
    rows = doc["entries"]
    if not isinstance(rows, list) or len(rows) != dim:
        raise MatrixFileError(f"{source}: 'entries' must hold {dim} rows")

    out = np.empty((dim, dim), dtype=np.complex128)
    for k, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != dim:
            raise MatrixFileError(f"{source}: row {k} must hold {dim} entries")
        for l, entry in enumerate(row):
            where = f"{source}: entry ({k}, {l})"
            if not isinstance(entry, list) or len(entry) != 2:
                raise MatrixFileError(f"{where}: expected an [re, im] pair, got {entry!r}")
            out[k, l] = complex(_check_number(entry[0], where), _check_number(entry[1], where))
    return out


def parse_matrix(text: str, source: str = "<string>") -> np.ndarray:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        position = f"line {e.lineno}, column {e.colno}"
        raise MatrixFileError(f"{source}: malformed JSON at {position}: {e.msg}", position=position) from e
    return matrix_from_document(doc, source)


def read_matrix(path: PathLike) -> np.ndarray:
    """Load a matrix file, raising MatrixFileError on any problem"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except FileNotFoundError as e:
        raise MatrixFileError(f"File not found: {path}") from e
    except (OSError, IOError) as e:
        raise MatrixFileError(f"Error reading file {path}: {e}") from e
    matrix = parse_matrix(text, str(path))
    logger.debug("Read %dx%d matrix from %s", matrix.shape[0], matrix.shape[1], path)
    return matrix


def matrix_to_document(m) -> Dict[str, Any]:
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise MatrixFileError(f"Only square matrices can be written, got shape {m.shape}")
    return {
        "dim": int(m.shape[0]),
        "entries": [[[float(z.real), float(z.imag)] for z in row] for row in m],
    }


def dump_matrix(m, stream: TextIO) -> None:
    json.dump(matrix_to_document(m), stream)
    stream.write("\n")


def write_matrix(m, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8") as f:
        dump_matrix(m, f)
    logger.info("Wrote matrix file: %s", path)
