"""Monotonic alignment lattice: forward/backward recursions in log space.

Each frame is emitted by exactly one token; token indices start at 0, end at
m - 1 and advance by 0 or 1 per frame. The alignment loss is the negative log
of the emission probability summed over every such path.
"""
from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np

from .emission import grad_gaussians  # noqa: F401  (re-exported)
from .tensor import ShapeError

DEFAULT_COMB_LIMIT = 10**6


class InfeasibleAlignment(ValueError):
    pass


class ZeroProbabilityLattice(ValueError):
    pass


class CombinatorialLimit(ValueError):
    def __init__(self, count: int, limit: int):
        super().__init__(f"{count} alignments exceed the enumeration limit of {limit}")
        self.count = count
        self.limit = limit


@dataclass(frozen=True)
class AlignmentLattice:
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    total_log_prob: float


def check_logp(logp) -> np.ndarray:
    logp = np.ascontiguousarray(logp, dtype=np.float64)
    if logp.ndim != 2 or logp.size == 0:
        raise ShapeError(f"emission matrix must have dims (n, m), got {logp.shape}")
    if np.isnan(logp).any():
        raise ValueError("NaN in emission matrix")
    if (logp == np.inf).any():
        raise ValueError("+inf in emission matrix")
    n, m = logp.shape
    if n < m:
        raise InfeasibleAlignment(f"infeasible alignment: {n} frames cannot cover {m} tokens")
    return logp


@numba.njit(cache=True, nogil=True, inline="always")
def _lae(a, b):
    if a == -np.inf:
        return b
    if b == -np.inf:
        return a
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


@numba.njit(cache=True, nogil=True)
def _forward_kernel(logp):
    n, m = logp.shape
    alpha = np.full((n, m), -np.inf)
    alpha[0, 0] = logp[0, 0]
    for t in range(1, n):
        # token s cannot be reached before frame s
        for s in range(min(t + 1, m)):
            stay = alpha[t - 1, s]
            adv = alpha[t - 1, s - 1] if s > 0 else -np.inf
            acc = _lae(stay, adv)
            if acc == -np.inf:
                alpha[t, s] = -np.inf
            else:
                alpha[t, s] = acc + logp[t, s]
    return alpha


@numba.njit(cache=True, nogil=True)
def _backward_kernel(logp):
    n, m = logp.shape
    beta = np.full((n, m), -np.inf)
    beta[n - 1, m - 1] = 0.0
    for t in range(n - 2, -1, -1):
        lo = m - (n - t)
        if lo < 0:
            lo = 0
        for s in range(lo, m):
            stay = beta[t + 1, s]
            if stay != -np.inf:
                stay = stay + logp[t + 1, s]
            adv = -np.inf
            if s + 1 < m:
                adv = beta[t + 1, s + 1]
                if adv != -np.inf:
                    adv = adv + logp[t + 1, s + 1]
            beta[t, s] = _lae(stay, adv)
    return beta


def forward(logp):
    """Log forward variables and the alignment loss ``-alpha[n-1, m-1]``."""
    logp = check_logp(logp)
    alpha = _forward_kernel(logp)
    return alpha, float(-alpha[-1, -1])


def backward(logp) -> np.ndarray:
    logp = check_logp(logp)
    return _backward_kernel(logp)


def posterior(alpha, beta, total_log_prob: float) -> np.ndarray:
    """Per-cell occupancy exp(alpha + beta - total)."""
    alpha = np.asarray(alpha, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    if alpha.shape != beta.shape:
        raise ShapeError(f"alpha {alpha.shape} and beta {beta.shape} differ")
    if not np.isfinite(total_log_prob):
        raise ZeroProbabilityLattice("zero-probability lattice")
    return np.exp(alpha + beta - total_log_prob)


def lattice(logp) -> AlignmentLattice:
    logp = check_logp(logp)
    alpha = _forward_kernel(logp)
    beta = _backward_kernel(logp)
    total = float(alpha[-1, -1])
    return AlignmentLattice(alpha, beta, posterior(alpha, beta, total), total)


def loss_and_grad(logp):
    """Alignment loss and its gradient w.r.t. every emission entry (= -gamma)."""
    lat = lattice(logp)
    return -lat.total_log_prob, -lat.gamma


def batch_loss_and_grad(batch: Sequence, workers: int | None = None):
    """Run ``loss_and_grad`` over independent instances, threads across items."""
    batch = list(batch)
    workers = workers or os.cpu_count() or 1
    if workers == 1 or len(batch) < 2:
        return [loss_and_grad(x) for x in batch]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(loss_and_grad, batch))


def comb_limit() -> int:
    raw = os.environ.get("MALN_COMB_LIMIT")
    return int(raw) if raw else DEFAULT_COMB_LIMIT


def alignment_count(n: int, m: int) -> int:
    return math.comb(n - 1, m - 1) if 1 <= m <= n else 0


def enumerate_alignments(n: int, m: int, limit: int | None = None) -> list[list[int]]:
    """Every composition of ``n`` frames into ``m`` positive durations."""
    if not (1 <= m <= n):
        raise InfeasibleAlignment(f"no alignment of {n} frames to {m} tokens")
    limit = comb_limit() if limit is None else limit
    count = alignment_count(n, m)
    if count > limit:
        raise CombinatorialLimit(count, limit)
    out = []
    for cuts in itertools.combinations(range(1, n), m - 1):
        bounds = (0,) + cuts + (n,)
        out.append([bounds[i + 1] - bounds[i] for i in range(m)])
    return out


def durations_to_path(durations: Sequence[int]) -> np.ndarray:
    return np.repeat(np.arange(len(durations)), durations)


def path_scores(logp: np.ndarray, compositions) -> np.ndarray:
    """Summed emission log-prob along each composition's path."""
    n = logp.shape[0]
    comps = np.asarray(compositions, dtype=np.int64)
    scores = np.empty(len(comps))
    frames = np.arange(n)
    chunk = max(1, 2**20 // n)
    for lo in range(0, len(comps), chunk):
        block = comps[lo:lo + chunk]
        ends = np.cumsum(block, axis=1)
        # token of frame t = number of segment ends <= t
        idx = (frames[None, :, None] >= ends[:, None, :]).sum(axis=2)
        scores[lo:lo + chunk] = logp[frames[None, :], idx].sum(axis=1)
    return scores


def brute_force_loss(logp, limit: int | None = None) -> float:
    """Alignment loss by explicit enumeration of every path."""
    logp = check_logp(logp)
    n, m = logp.shape
    comps = enumerate_alignments(n, m, limit)
    scores = path_scores(logp, comps)
    top = scores.max()
    if top == -np.inf:
        return np.inf
    return float(-(top + np.log(np.sum(np.exp(scores - top)))))
