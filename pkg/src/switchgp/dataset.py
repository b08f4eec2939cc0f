"""Column-named input matrices with optional targets, plus CSV ingestion.

CSV files use a header row, '.' decimal separator and no locale-dependent
formatting.  Non-finite values are rejected on ingest with the offending
row number so that bad data fails loudly and early.
"""

from __future__ import annotations

import csv

import numpy as np

from .errors import ConfigError, DataError


class Dataset:
    """An N x D input matrix with named columns and an optional target vector."""

    def __init__(self, columns, X, y=None):
        self.columns = list(columns)
        self.X = np.asarray(X, dtype=float)
        if self.X.ndim == 1:
            self.X = self.X[:, None]
        self.y = None if y is None else np.asarray(y, dtype=float).ravel()
        self._col_index = {c: i for i, c in enumerate(self.columns)}
        self._validate()

    def _validate(self):
        if len(set(self.columns)) != len(self.columns):
            raise DataError(f"duplicate column names in {self.columns}")
        if self.X.ndim != 2 or self.X.shape[1] != len(self.columns):
            raise DataError(
                f"input matrix shape {self.X.shape} does not match {len(self.columns)} columns"
            )
        if self.X.shape[0] < 1:
            raise DataError("dataset needs at least one row")
        if not np.all(np.isfinite(self.X)):
            bad = int(np.argwhere(~np.isfinite(self.X))[0][0])
            raise DataError(f"non-finite input value at row {bad}")
        if self.y is not None:
            if self.y.shape[0] != self.X.shape[0]:
                raise DataError(
                    f"target length {self.y.shape[0]} does not match {self.X.shape[0]} rows"
                )
            if not np.all(np.isfinite(self.y)):
                bad = int(np.argwhere(~np.isfinite(self.y))[0][0])
                raise DataError(f"non-finite target value at row {bad}")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def column(self, name) -> np.ndarray:
        if name not in self._col_index:
            raise ConfigError(f"unknown column {name!r}; available: {self.columns}")
        return self.X[:, self._col_index[name]]

    def has_column(self, name) -> bool:
        return name in self._col_index

    def select(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.columns, self.X[idx], None if self.y is None else self.y[idx])

    def inputs_only(self) -> "Dataset":
        return Dataset(self.columns, self.X, None)

    def with_target(self, y) -> "Dataset":
        return Dataset(self.columns, self.X, y)


def as_dataset(X, columns=None, y=None) -> Dataset:
    """Coerce a Dataset, pandas DataFrame, or ndarray (+ column names) to Dataset."""
    if isinstance(X, Dataset):
        return X if y is None else X.with_target(y)
    if hasattr(X, "columns") and hasattr(X, "to_numpy"):
        return Dataset([str(c) for c in X.columns], X.to_numpy(dtype=float), y)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if columns is None:
        columns = [f"x{i}" for i in range(X.shape[1])]
    return Dataset(columns, X, y)


def read_csv(path, target=None) -> Dataset:
    """Read a CSV with a header row into a Dataset.

    If ``target`` names a column it is split off as y.
    """
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: row {lineno} has {len(row)} fields, expected {len(header)}")
            try:
                vals = [float(v) for v in row]
            except ValueError:
                raise DataError(f"{path}: row {lineno} contains a non-numeric field") from None
            if not all(np.isfinite(vals)):
                raise DataError(f"{path}: row {lineno} contains a non-finite value")
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no data rows")
    mat = np.array(rows, dtype=float)
    if target is not None:
        if target not in header:
            raise ConfigError(f"{path}: target column {target!r} not found in {header}")
        ti = header.index(target)
        y = mat[:, ti]
        keep = [i for i in range(len(header)) if i != ti]
        return Dataset([header[i] for i in keep], mat[:, keep], y)
    return Dataset(header, mat)


def write_csv(path, columns, arrays) -> None:
    """Write named float columns to CSV deterministically.

    Floats are rendered with repr (shortest round-trip form) so identical
    inputs produce byte-identical files.
    """
    arrays = [np.asarray(a, dtype=float).ravel() for a in arrays]
    n = arrays[0].shape[0]
    if any(a.shape[0] != n for a in arrays):
        raise DataError("columns have unequal lengths")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for i in range(n):
            writer.writerow([repr(float(a[i])) for a in arrays])
