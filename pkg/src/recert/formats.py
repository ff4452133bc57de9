"""Number formatting, delimited matrix files and report writers.

Matrix files are plain text::

    rows,cols
    3,2
    1.0,2.0
    3.0,4.0
    5.0,6.0

Line 1 is the literal header ``rows,cols``, line 2 the dimensions, then one
comma-separated line per row. Vectors are stored as ``n×1`` matrices.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .core import InvalidInputError

SIG_DIGITS = 12


def fmt(x: Any) -> str:
    """12 significant digits; scientific for ``|x| < 1e-4`` or ``|x| ≥ 1e8``."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0:
        return "0"
    if abs(x) < 1e-4 or abs(x) >= 1e8:
        return f"{x:.{SIG_DIGITS - 1}e}"
    return f"{x:.{SIG_DIGITS}g}"


class DataFormatError(InvalidInputError):
    pass


def read_matrix(path: str | Path) -> np.ndarray:
    lines = [ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines()]
    lines = [ln for ln in lines if ln]
    if len(lines) < 2 or lines[0].replace(" ", "") != "rows,cols":
        raise DataFormatError(f"{path}: first line must be the header 'rows,cols'")
    try:
        rows, cols = (int(v) for v in lines[1].split(","))
    except ValueError:
        raise DataFormatError(f"{path}: line 2 must hold 'rows,cols' integers")
    body = lines[2:]
    if len(body) != rows:
        raise DataFormatError(f"{path}: expected {rows} data rows, found {len(body)}")
    out = np.empty((rows, cols))
    for i, ln in enumerate(body):
        vals = ln.split(",")
        if len(vals) != cols:
            raise DataFormatError(f"{path}: line {i + 3} has {len(vals)} fields, expected {cols}")
        try:
            out[i] = [float(v) for v in vals]
        except ValueError:
            raise DataFormatError(f"{path}: line {i + 3} has a non-numeric field")
    return out


def write_matrix(path: str | Path, A) -> None:
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A.reshape(-1, 1)
    if A.ndim != 2:
        raise DataFormatError("only vectors and matrices can be written")
    lines = ["rows,cols", f"{A.shape[0]},{A.shape[1]}"]
    lines += [",".join(repr(float(v)) for v in row) for row in A]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_vector(path: str | Path, v) -> None:
    write_matrix(path, np.asarray(v, dtype=float).reshape(-1, 1))


def csv_text(columns: Sequence[str], records: Iterable[Sequence[Any]]) -> str:
    lines = [",".join(columns)]
    for rec in records:
        if len(rec) != len(columns):
            raise ValueError("record width does not match the header")
        lines.append(",".join(fmt(v) for v in rec))
    return "\n".join(lines) + "\n"


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    header = lines[0].split(",")
    return header, [ln.split(",") for ln in lines[1:] if ln]


def read_summary(path: str | Path) -> dict[str, str]:
    out = {}
    for ln in Path(path).read_text(encoding="utf-8").splitlines():
        if not ln or ln.startswith("#") or " = " not in ln:
            continue
        k, v = ln.split(" = ", 1)
        out[k] = v
    return out
