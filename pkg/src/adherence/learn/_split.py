"""Split-candidate scanning shared by the impurity and second-order trees.

Candidates are the midpoints between consecutive distinct values of a feature
within a node. For every candidate the caller gets the left-side row count and
the left-side prefix sum of each requested statistic. Columns of small
non-negative integers take a bincount path instead of sorting; the candidate
set and thresholds are identical either way.
"""

from __future__ import annotations

import numpy as np

_MAX_CODE = 32  # largest small-integer value eligible for the bincount path


def column_codes(X: np.ndarray) -> list[np.ndarray | None]:
    """Per column: int codes for the bincount path, or None for the sort path."""
    codes: list[np.ndarray | None] = []
    for j in range(X.shape[1]):
        col = X[:, j]
        as_int = col.astype(np.int64)
        if np.all(col == as_int) and col.min() >= 0 and col.max() <= _MAX_CODE:
            codes.append(as_int)
        else:
            codes.append(None)
    return codes


def scan(x: np.ndarray, stats: list[np.ndarray], codes: np.ndarray | None):
    """(thresholds, n_left, [left prefix sums]) per candidate, or None if constant."""
    if codes is None:
        order = np.argsort(x, kind="stable")
        xs = x[order]
        boundary = np.flatnonzero(xs[:-1] < xs[1:])
        if boundary.size == 0:
            return None
        thresholds = (xs[boundary] + xs[boundary + 1]) / 2.0
        n_left = boundary + 1
        sums = [np.cumsum(s[order])[boundary] for s in stats]
        return thresholds, n_left, sums
    k = int(codes.max()) + 1
    counts = np.bincount(codes, minlength=k)
    present = np.flatnonzero(counts)
    if present.size < 2:
        return None
    left_vals = present[:-1].astype(np.float64)
    right_vals = present[1:].astype(np.float64)
    thresholds = (left_vals + right_vals) / 2.0
    n_left = np.cumsum(counts)[present[:-1]]
    sums = [np.cumsum(np.bincount(codes, weights=s, minlength=k))[present[:-1]] for s in stats]
    return thresholds, n_left, sums
