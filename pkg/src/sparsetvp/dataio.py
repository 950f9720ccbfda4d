"""CSV ingestion and emission.

CSV files are RFC-4180-style with a header row, comma separators and '.'
decimal marks.  Per-column transformation codes follow the usual
macro-data convention: 1 none, 2 first difference, 3 log, 4 first
difference of the log times 100.  Leading rows that a differencing
transform leaves undefined are dropped across all columns so the panel
stays aligned, and the applied code is recorded per column.
"""

from __future__ import annotations

import csv
import math

import numpy as np

from sparsetvp.multivariate import MultiTimeSeries
from sparsetvp.statespace import TimeSeriesData

__all__ = ["load_csv", "write_csv", "apply_transform", "TRANSFORM_CODES"]

TRANSFORM_CODES = (1, 2, 3, 4)


def apply_transform(x, code):
    """Apply one transformation code; differencing returns length n-1."""
    x = np.asarray(x, dtype=float)
    if code == 1:
        return x.copy()
    if code == 2:
        return np.diff(x)
    if code == 3:
        if np.any(x <= 0.0):
            raise ValueError("log transform requires strictly positive values")
        return np.log(x)
    if code == 4:
        if np.any(x <= 0.0):
            raise ValueError("log-difference transform requires strictly positive values")
        return 100.0 * np.diff(np.log(x))
    raise ValueError(f"unknown transformation code {code!r} (expected 1..4)")


def _read_table(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        rows = []
        for rix, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}: row {rix} has {len(row)} cells, expected {len(header)}")
            vals = []
            for cix, cell in enumerate(row):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise ValueError(
                        f"{path}: non-numeric cell at row {rix}, column {header[cix]!r}: {cell!r}"
                    ) from None
            rows.append(vals)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return header, np.asarray(rows, dtype=float)


def load_csv(path, response, regressors=None, transform=None, intercept=False, lags=0):
    """Load a CSV into TimeSeriesData (scalar response) or MultiTimeSeries.

    ``response`` is one column name or a list of names; ``regressors``
    defaults to all remaining columns (univariate case).  ``transform``
    maps column names to transformation codes; differencing transforms
    shorten the panel from the top for every column.  NaNs after
    transformation and too-short series are rejected.
    """
    header, table = _read_table(path)
    cols = {h: table[:, i] for i, h in enumerate(header)}
    transform = dict(transform or {})
    unknown = set(transform) - set(header)
    if unknown:
        raise ValueError(f"transform codes for unknown columns: {sorted(unknown)}")
    multi = isinstance(response, (list, tuple))
    resp_names = list(response) if multi else [response]
    for r in resp_names:
        if r not in cols:
            raise ValueError(f"response column {r!r} not in header {header}")
    if regressors is None:
        reg_names = [] if multi else [h for h in header if h not in resp_names]
    else:
        reg_names = list(regressors)
        for r in reg_names:
            if r not in cols:
                raise ValueError(f"regressor column {r!r} not in header {header}")
    used = resp_names + reg_names
    codes = {name: int(transform.get(name, 1)) for name in used}
    drop = 1 if any(codes[n] in (2, 4) for n in used) else 0
    out = {}
    for name in used:
        v = apply_transform(cols[name], codes[name])
        if codes[name] in (1, 3):
            v = v[drop:]
        if not np.all(np.isfinite(v)):
            raise ValueError(f"column {name!r} contains non-finite values after transformation")
        out[name] = v
    n = len(next(iter(out.values())))
    if n < 2:
        raise ValueError("series too short after transformation")
    if multi:
        Y = np.column_stack([out[r] for r in resp_names])
        return MultiTimeSeries(Y, names=tuple(resp_names), lags=lags)
    X_cols = [out[r] for r in reg_names]
    labels = list(reg_names)
    if intercept:
        X_cols = [np.ones(n)] + X_cols
        labels = ["const"] + labels
    if not X_cols:
        raise ValueError("univariate model needs at least one regressor or an intercept")
    return TimeSeriesData(out[resp_names[0]], np.column_stack(X_cols), labels)


def write_csv(path, columns):
    """Write named columns to CSV with full float round-trip precision."""
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    n = len(arrays[0])
    if any(len(a) != n for a in arrays):
        raise ValueError("all columns must have equal length")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for i in range(n):
            row = []
            for a in arrays:
                v = a[i]
                if isinstance(v, (float, np.floating)):
                    row.append(repr(float(v)))
                elif isinstance(v, (int, np.integer)):
                    row.append(int(v))
                else:
                    row.append(v)
            writer.writerow(row)
