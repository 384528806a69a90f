"""Dynamic Time Warping, warping-path traceback and DBA barycenter averaging.

Local cost is the squared Euclidean distance between frames; the reported distance
is the square root of the accumulated cost d(n, m). No global band or slope
constraint is applied.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numba as nb
import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from src.errors import DimensionMismatch, EmptyMemberSet, NonFiniteInput
from src.models import Barycenter, WarpingPath

logger = logging.getLogger(__name__)

DBA_TOLERANCE = 1e-6


@nb.njit(cache=False, nogil=True)
def _accumulated_cost(x, y):
    n = x.shape[0]
    m = y.shape[0]
    dim = x.shape[1]
    d = np.empty((n, m), dtype=np.float64)
    for i in range(n):
        for j in range(m):
            c = 0.0
            for k in range(dim):
                diff = x[i, k] - y[j, k]
                c += diff * diff
            if i == 0 and j == 0:
                d[i, j] = c
            elif i == 0:
                d[i, j] = c + d[i, j - 1]
            elif j == 0:
                d[i, j] = c + d[i - 1, j]
            else:
                d[i, j] = c + min(d[i - 1, j - 1], d[i - 1, j], d[i, j - 1])
    return d


@nb.njit(cache=False, nogil=True)
def _traceback(d):
    # ties: diagonal, then up (i-1), then left (j-1)
    i = d.shape[0] - 1
    j = d.shape[1] - 1
    path = np.empty((d.shape[0] + d.shape[1] - 1, 2), dtype=np.int64)
    step = 0
    path[0, 0] = i
    path[0, 1] = j
    while i > 0 or j > 0:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            diag = d[i - 1, j - 1]
            up = d[i - 1, j]
            left = d[i, j - 1]
            if diag <= up and diag <= left:
                i -= 1
                j -= 1
            elif up <= left:
                i -= 1
            else:
                j -= 1
        step += 1
        path[step, 0] = i
        path[step, 1] = j
    return path[: step + 1]


@dataclass(frozen=True)
class CostMatrix:
    """Accumulated cost grid d (n x m) for series X (rows) and Y (columns)."""

    d: np.ndarray

    @property
    def n(self) -> int:
        return self.d.shape[0]

    @property
    def m(self) -> int:
        return self.d.shape[1]

    @property
    def total(self) -> float:
        return float(self.d[-1, -1])


def as_series(series) -> np.ndarray:
    """C-contiguous float64 (T, dim) array; 1-D input is treated as univariate."""
    arr = np.asarray(series, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError(f"expected a non-empty (T, dim) series, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput("series contains NaN or infinite values")
    return np.ascontiguousarray(arr)


def _pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = as_series(x)
    y = as_series(y)
    if x.shape[1] != y.shape[1]:
        raise DimensionMismatch(f"feature dimensions differ: {x.shape[1]} vs {y.shape[1]}")
    return x, y


def local_cost(x, y) -> float:
    """Squared Euclidean distance between two frames."""
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise NonFiniteInput("frame contains NaN or infinite values")
    if a.shape != b.shape:
        raise DimensionMismatch(f"frame shapes differ: {a.shape} vs {b.shape}")
    return float(np.sum((a - b) ** 2))


def cost_matrix(x, y) -> CostMatrix:
    x, y = _pair(x, y)
    return CostMatrix(_accumulated_cost(x, y))


def dtw_cost(x, y) -> float:
    """Accumulated squared cost d(n, m), the quantity DBA and k-means minimize."""
    x, y = _pair(x, y)
    return float(_accumulated_cost(x, y)[-1, -1])


def dtw_distance(x, y) -> tuple[float, WarpingPath]:
    """DTW distance sqrt(d(n, m)) and the optimal warping path (0-based pairs)."""
    x, y = _pair(x, y)
    d = _accumulated_cost(x, y)
    path = _traceback(d)[::-1]
    pairs = [(int(i), int(j)) for i, j in path]
    return float(np.sqrt(d[-1, -1])), WarpingPath(pairs=pairs)


def path_cost(x, y, path: WarpingPath) -> float:
    """Re-accumulate local costs along a path."""
    x, y = _pair(x, y)
    return float(sum(local_cost(x[i], y[j]) for i, j in path.pairs))


def resample_linear(series, length: int) -> np.ndarray:
    """Piecewise-linear resampling along time; endpoints are preserved."""
    if length < 2:
        raise ValueError("target length must be >= 2")
    arr = as_series(series)
    t = arr.shape[0]
    if t == length:
        return arr.copy()
    if t == 1:
        return np.repeat(arr, length, axis=0)
    grid = np.linspace(0.0, t - 1, length)
    src = np.arange(t, dtype=np.float64)
    return np.column_stack([np.interp(grid, src, arr[:, k]) for k in range(arr.shape[1])])


def _align_all(bary: np.ndarray, members: Sequence[np.ndarray]):
    sums = np.zeros_like(bary)
    counts = np.zeros(bary.shape[0], dtype=np.float64)
    total = 0.0
    for member in members:
        d = _accumulated_cost(bary, member)
        total += d[-1, -1]
        path = _traceback(d)
        np.add.at(sums, path[:, 0], member[path[:, 1]])
        np.add.at(counts, path[:, 0], 1.0)
    return total, sums, counts


def dba_init(members: Sequence[np.ndarray], length: int, seed: int) -> np.ndarray:
    """The member closest in length to ``length`` (ties broken by seed), resampled."""
    gaps = np.array([abs(m.shape[0] - length) for m in members])
    candidates = np.flatnonzero(gaps == gaps.min())
    pick = int(np.random.default_rng(seed).choice(candidates))
    return resample_linear(members[pick], length)


def dba_barycenter(
    members: Sequence,
    length: int,
    max_iter: int = 30,
    seed: int = 0,
    init: Optional[np.ndarray] = None,
    tol: float = DBA_TOLERANCE,
) -> Barycenter:
    """DTW Barycenter Averaging to a fixed-length series.

    Each iteration aligns every member to the current estimate and replaces each
    barycenter frame with the mean of the member frames aligned to it. The
    within-set cost (sum of accumulated squared DTW costs) is recorded per
    iteration and never increases; iteration stops at ``max_iter`` or when the
    relative improvement falls below ``tol``.
    """
    if not members:
        raise EmptyMemberSet("DBA needs at least one member series")
    if length < 2:
        raise ValueError("barycenter length must be >= 2")
    arrays = [as_series(m) for m in members]
    dim = arrays[0].shape[1]
    if any(a.shape[1] != dim for a in arrays):
        raise DimensionMismatch("members have different feature dimensions")

    bary = as_series(init).copy() if init is not None else dba_init(arrays, length, seed)
    if bary.shape != (length, dim):
        bary = resample_linear(bary, length)

    cost, sums, counts = _align_all(bary, arrays)
    history = [float(cost)]
    for _ in range(max_iter):
        if cost == 0.0:
            break
        candidate = sums / counts[:, None]
        new_cost, new_sums, new_counts = _align_all(candidate, arrays)
        if new_cost > cost:
            break
        improvement = cost - new_cost
        bary, cost, sums, counts = candidate, new_cost, new_sums, new_counts
        history.append(float(cost))
        if improvement <= tol * history[-2]:
            break
    return Barycenter(series=bary.tolist(), inertia_history=history)


def _distance_row(i: int, arrays: list[np.ndarray]) -> np.ndarray:
    row = np.zeros(len(arrays))
    for j in range(i + 1, len(arrays)):
        row[j] = np.sqrt(_accumulated_cost(arrays[i], arrays[j])[-1, -1])
    return row


def pairwise_distance_matrix(corpus: Sequence, jobs: int = 1) -> np.ndarray:
    """Symmetric matrix of DTW distances; rows are computed in parallel."""
    arrays = [as_series(s) for s in corpus]
    rows = Parallel(n_jobs=jobs, prefer="threads")(
        delayed(_distance_row)(i, arrays) for i in range(len(arrays))
    )
    upper = np.vstack(rows) if rows else np.zeros((0, 0))
    return upper + upper.T


def distance_matrix_frame(ids: Sequence[str], matrix: np.ndarray) -> pd.DataFrame:
    frame = pd.DataFrame(matrix, columns=list(ids))
    frame.insert(0, "sessionId", list(ids))
    return frame
