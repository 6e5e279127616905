"""Best-path extraction, durations and the length regulator."""
from __future__ import annotations

from typing import Sequence

import numba
import numpy as np

from .lattice import check_logp
from .tensor import ShapeError


@numba.njit(cache=True, nogil=True)
def _viterbi_kernel(logp):
    n, m = logp.shape
    delta = np.full((n, m), -np.inf)
    delta[0, 0] = logp[0, 0]
    for t in range(1, n):
        for s in range(min(t + 1, m)):
            best = delta[t - 1, s]
            if s > 0 and delta[t - 1, s - 1] > best:
                best = delta[t - 1, s - 1]
            if best != -np.inf:
                delta[t, s] = best + logp[t, s]
    path = np.empty(n, dtype=np.int64)
    s = m - 1
    path[n - 1] = s
    for t in range(n - 1, 0, -1):
        # ties go to the stay predecessor; stay is impossible once s == t
        if s > 0 and (s == t or delta[t - 1, s - 1] > delta[t - 1, s]):
            s -= 1
        path[t - 1] = s
    return path, delta[n - 1, m - 1]


def viterbi(logp):
    """Highest-scoring monotonic path and its summed log-probability."""
    logp = check_logp(logp)
    path, score = _viterbi_kernel(logp)
    return path, float(score)


def check_path(path, m: int) -> np.ndarray:
    path = np.asarray(path)
    if path.ndim != 1 or path.size == 0:
        raise ValueError("path must be a non-empty sequence")
    if path[0] != 0 or path[-1] != m - 1:
        raise ValueError(f"path must start at token 0 and end at token {m - 1}")
    steps = np.diff(path)
    if ((steps != 0) & (steps != 1)).any():
        raise ValueError("path must advance by 0 or 1 tokens per frame")
    return path


def path_to_durations(path, m: int) -> np.ndarray:
    path = check_path(path, m)
    return np.bincount(path, minlength=m).astype(np.int64)


def length_regulate(hidden, durations) -> np.ndarray:
    """Repeat token row j ``durations[j]`` times, in token order."""
    hidden = np.asarray(hidden)
    durations = np.asarray(durations)
    if hidden.ndim < 1 or durations.ndim != 1 or len(durations) != hidden.shape[0]:
        raise ShapeError(f"{len(durations)} durations for {hidden.shape[0]} token rows")
    if not np.issubdtype(durations.dtype, np.integer):
        if not np.all(durations == np.round(durations)):
            raise ValueError("durations must be integers")
        durations = durations.astype(np.int64)
    if (durations < 0).any():
        raise ValueError("durations must be non-negative")
    if durations.sum() == 0:
        raise ValueError("empty expansion: all durations are zero")
    return np.repeat(hidden, durations, axis=0)


def duration_targets_log(durations) -> np.ndarray:
    durations = np.asarray(durations, dtype=np.float64)
    if (durations < 1).any():
        raise ValueError("log-duration targets need every duration >= 1")
    return np.log(durations)


def round_durations(predicted: Sequence[float], speed: float = 1.0) -> np.ndarray:
    """Round linear-domain durations half away from zero, clamped at 0.

    ``speed`` scales the durations before rounding (values > 1 slow speech down).
    """
    x = np.asarray(predicted, dtype=np.float64) * speed
    if not np.isfinite(x).all():
        raise ValueError("predicted durations must be finite")
    rounded = np.sign(x) * np.floor(np.abs(x) + 0.5)
    return np.maximum(rounded, 0).astype(np.int64)
