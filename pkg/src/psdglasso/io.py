"""Matrix CSV files and JSON run reports."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from importlib import resources

import numpy as np

from .matrix import SymMatrix, as_array

log = logging.getLogger(__name__)

SCHEMA_VERSION = "v1"
ASYMMETRY_WARN = 1e-8


class MatrixFileError(ValueError):
    pass


def parse_matrix_csv(text: str) -> SymMatrix:
    """Parse a headerless square CSV matrix and symmetrise it as (A + A^T) / 2."""
    rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
    if not rows:
        raise MatrixFileError("matrix file is empty")
    try:
        a = np.array([[float(c) for c in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise MatrixFileError(f"non-numeric entry: {exc}") from None
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        shape = (len(rows), sorted({len(r) for r in rows}))
        raise MatrixFileError(f"matrix must be square, got rows/cols {shape}")
    if not np.all(np.isfinite(a)):
        raise MatrixFileError("matrix entries must be finite")
    with np.errstate(over="ignore"):
        asym = float(np.max(np.abs(a - a.T)))
    if asym > ASYMMETRY_WARN:
        log.warning("input matrix asymmetric by %.3g; using (A + A^T)/2", asym)
    return SymMatrix.symmetrized(a)


def read_matrix(path) -> SymMatrix:
    try:
        with open(path, newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise MatrixFileError(f"cannot read {path}: {exc.strerror}") from None
    return parse_matrix_csv(text)


def format_matrix(a) -> str:
    a = as_array(a)
    return "".join(",".join(format(float(x), ".17g") for x in row) + "\n" for row in a)


def write_matrix(path, a) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(format_matrix(a))


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        # JSON has no inf/nan
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps_report(report: dict) -> str:
    return json.dumps(_clean(report), indent=2)


def load_schema() -> dict:
    ref = resources.files("psdglasso").joinpath("schemas", f"run_report.{SCHEMA_VERSION}.json")
    return json.loads(ref.read_text())


def write_rows_csv(fh, rows, columns) -> None:
    w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: (format(v, ".17g") if isinstance(v, float) else v) for k, v in row.items()})
