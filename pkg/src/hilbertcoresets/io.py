"""CSV ingestion and weight-file serialization."""

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import DataError
from .models import Dataset


def ingest_csv(path, label_col=None) -> Dataset:
    """Read a numeric CSV with a header row.

    Every column except ``label_col`` becomes a feature. Raises
    :class:`DataError` naming the offending row/column for missing files,
    ragged rows, non-numeric cells and NaN/inf values.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"input file not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file (no header row)") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
            vals = []
            for col, cell in zip(header, row):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(f"{path}:{lineno}: column {col!r}: non-numeric cell {cell!r}") from None
                if not math.isfinite(v):
                    raise DataError(f"{path}:{lineno}: column {col!r}: non-finite value {cell!r}")
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: empty dataset")
    A = np.array(rows, dtype=float)
    if label_col is None:
        return Dataset(A, None, header)
    if label_col not in header:
        raise DataError(f"{path}: label column {label_col!r} not in header {header}")
    k = header.index(label_col)
    feats = [h for i, h in enumerate(header) if i != k]
    if not feats:
        raise DataError(f"{path}: no feature columns besides the label")
    return Dataset(np.delete(A, k, axis=1), A[:, k], feats)


def dump_weights(w, path):
    """Write the support of ``w`` as a JSON array of ``{"index", "weight"}`` records."""
    recs = [{"index": int(i), "weight": float(w[i])} for i in np.flatnonzero(w)]
    Path(path).write_text(json.dumps(recs, indent=1) + "\n")


def load_weights(path, N) -> np.ndarray:
    recs = json.loads(Path(path).read_text())
    w = np.zeros(N)
    for r in recs:
        i = int(r["index"])
        if not 0 <= i < N:
            raise DataError(f"{path}: index {i} out of range for N={N}")
        w[i] = float(r["weight"])
    return w
