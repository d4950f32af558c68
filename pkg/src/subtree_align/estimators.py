"""Vertex-correspondence estimates from a score matrix."""
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from ._random import as_generator
from .errors import DataError, DegenerateRowError, ParameterError

UNASSIGNED = -1

# Log-scores of isomorphic neighborhoods can differ in the last bits because
# the children enter the kernel in different orders; such entries count as tied.
TIE_ATOL = 1e-10
TIE_RTOL = 1e-12


def _scores_array(scores):
    arr = getattr(scores, "log_scores", scores)
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 2:
        raise ParameterError("score matrix must be 2-dimensional")
    return arr


def _tied_with_max(arr, rowmax):
    tol = TIE_ATOL + TIE_RTOL * np.abs(np.where(np.isfinite(rowmax), rowmax, 0.0))
    with np.errstate(invalid="ignore"):
        near = arr >= (rowmax - tol)[:, None]
    # rows that are entirely -inf: every column is a maximizer
    return near | (np.isneginf(rowmax)[:, None] & np.isneginf(arr))


@dataclass(frozen=True)
class RowProbabilities:
    p: np.ndarray

    @property
    def n(self):
        return self.p.shape[0]


@dataclass
class PartialMap:
    """``assignment[i]`` is the matched vertex of B, or -1 when unassigned."""

    assignment: np.ndarray
    mode: str = "full_argmax"
    threshold: Optional[float] = None

    def __post_init__(self):
        self.assignment = np.asarray(self.assignment, dtype=np.int64)
        if self.mode == "full_argmax" and np.any(self.assignment == UNASSIGNED):
            raise DataError("a full estimator assigns every vertex")

    @property
    def n(self):
        return self.assignment.size

    @property
    def assigned(self):
        return self.assignment != UNASSIGNED

    @property
    def n_assigned(self):
        return int(self.assigned.sum())

    def to_text(self):
        return "".join(f"{i} {'*' if a == UNASSIGNED else a}\n"
                       for i, a in enumerate(self.assignment.tolist()))

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def from_text(cls, text, mode="threshold"):
        rows = [ln.split() for ln in text.splitlines() if ln.strip()]
        out = np.full(len(rows), UNASSIGNED, dtype=np.int64)
        for k, row in enumerate(rows):
            if len(row) != 2 or int(row[0]) != k:
                raise DataError(f"line {k + 1}: expected '{k} <vertex>|*'")
            out[k] = UNASSIGNED if row[1] == "*" else int(row[1])
        return cls(out, mode)


def row_normalize(scores):
    """Row-wise softmax of log-scores, i.e. L / sum_j L."""
    arr = _scores_array(scores)
    bad = np.flatnonzero(np.all(np.isneginf(arr), axis=1))
    if bad.size:
        raise DegenerateRowError(
            f"{bad.size} row(s) have no finite score (first: row {int(bad[0])})")
    lse = logsumexp(arr, axis=1, keepdims=True)
    return RowProbabilities(np.exp(arr - lse))


def argmax_estimator(scores, seed=None):
    """Row argmax; ties broken uniformly at random."""
    arr = _scores_array(scores)
    rng = as_generator(seed)
    rowmax = arr.max(axis=1)
    tied = _tied_with_max(arr, rowmax)
    keys = rng.random(arr.shape)
    keys[~tied] = -1.0
    return PartialMap(keys.argmax(axis=1), "full_argmax")


def threshold_estimator(p, threshold):
    """Assign the row argmax when its probability exceeds ``threshold``.

    A row whose maximum is attained by several columns is left unassigned.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ParameterError("threshold must lie in [0, 1]")
    probs = p.p if isinstance(p, RowProbabilities) else np.asarray(p, dtype=np.float64)
    rowmax = probs.max(axis=1)
    ties = (probs >= rowmax[:, None] * (1.0 - TIE_ATOL)).sum(axis=1)
    best = probs.argmax(axis=1)
    keep = (rowmax > threshold) & (ties == 1)
    mode = "matrix_half" if threshold == 0.5 else "threshold"
    return PartialMap(np.where(keep, best, UNASSIGNED), mode, float(threshold))
