"""Tiny dense solver for the 3x3 step systems.

Gaussian elimination with partial pivoting, plus an infinity-norm condition
estimate obtained from the inverse computed in the same elimination. The
matrices here are always 3x3, so there is no point in dispatching to a
general-purpose factorization.
"""

from __future__ import annotations

import math

import numpy as np


def _eliminate(a: np.ndarray, extra: np.ndarray) -> np.ndarray | None:
    """Row-reduce [a | extra | I] and back-substitute.

    Returns the (3, k+3) solution block whose last three columns are the
    inverse of ``a``, or None when a pivot is exactly zero.
    """
    k = extra.shape[1]
    work = np.empty((3, 3 + k + 3))
    work[:, :3] = a
    work[:, 3:3 + k] = extra
    work[:, 3 + k:] = np.eye(3)
    for col in range(3):
        p = col + int(np.argmax(np.abs(work[col:, col])))
        if work[p, col] == 0.0:
            return None
        if p != col:
            work[[col, p]] = work[[p, col]]
        for row in range(col + 1, 3):
            m = work[row, col] / work[col, col]
            if m != 0.0:
                work[row, col:] -= m * work[col, col:]
    rhs = work[:, 3:]
    out = np.empty_like(rhs)
    out[2] = rhs[2] / work[2, 2]
    out[1] = (rhs[1] - work[1, 2] * out[2]) / work[1, 1]
    out[0] = (rhs[0] - work[0, 1] * out[1] - work[0, 2] * out[2]) / work[0, 0]
    return out


def _norm_inf(a: np.ndarray) -> float:
    return float(np.max(np.sum(np.abs(a), axis=1)))


def solve3(matrix, rhs) -> tuple[np.ndarray, float]:
    """Solve the 3x3 system, returning (x, condition estimate).

    A singular matrix yields x of nans and an infinite estimate rather than
    raising, so callers can attach their own step context to the failure.
    """
    a = np.asarray(matrix, dtype=float)
    b = np.asarray(rhs, dtype=float).reshape(3, 1)
    block = _eliminate(a, b)
    if block is None:
        return np.full(3, np.nan), math.inf
    x = block[:, 0]
    cond = _norm_inf(a) * _norm_inf(block[:, 1:])
    return x, cond


def inv3(matrix) -> tuple[np.ndarray, float]:
    """Inverse of a 3x3 matrix with the same condition estimate as solve3."""
    a = np.asarray(matrix, dtype=float)
    block = _eliminate(a, np.empty((3, 0)))
    if block is None:
        return np.full((3, 3), np.nan), math.inf
    return block, _norm_inf(a) * _norm_inf(block)
