"""Diagonal-Gaussian frame log-likelihoods.

Tokens carry a mean and a log-variance per channel. Variances are floored at
``VAR_FLOOR`` inside the exponent so a token collapsed onto a single frame
cannot produce an unbounded density.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .tensor import ShapeError, as_tensor

VAR_FLOOR = 1e-6
LOG_VAR_FLOOR = math.log(VAR_FLOOR)
LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class GaussianSequence:
    means: np.ndarray      # (m, d)
    log_vars: np.ndarray   # (m, d)

    def __post_init__(self):
        means = as_tensor(self.means)
        log_vars = as_tensor(self.log_vars)
        if means.ndim != 2 or means.shape != log_vars.shape:
            raise ShapeError(f"means {means.shape} and log_vars {log_vars.shape} must be equal (m, d)")
        if not (np.isfinite(means).all() and np.isfinite(log_vars).all()):
            raise ValueError("Gaussian parameters must be finite")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "log_vars", log_vars)

    @property
    def m(self) -> int:
        return self.means.shape[0]

    @property
    def d(self) -> int:
        return self.means.shape[1]

    def effective_log_vars(self) -> np.ndarray:
        return np.maximum(self.log_vars, LOG_VAR_FLOOR)

    def packed(self) -> np.ndarray:
        """The (2, m, d) file layout: index 0 means, index 1 log-variances."""
        return np.stack([self.means, self.log_vars])

    @classmethod
    def from_packed(cls, packed: np.ndarray) -> "GaussianSequence":
        packed = np.asarray(packed, dtype=np.float64)
        if packed.ndim != 3 or packed.shape[0] != 2:
            raise ShapeError(f"packed Gaussians must have dims (2, m, d), got {packed.shape}")
        return cls(packed[0], packed[1])


def as_mel(frames) -> np.ndarray:
    mel = as_tensor(frames)
    if mel.ndim != 2:
        raise ShapeError(f"mel must have dims (n, d), got {mel.shape}")
    if not np.isfinite(mel).all():
        raise ValueError("mel frames must be finite")
    return mel


def gaussian_log_prob(frame, mean, log_var) -> float:
    frame = np.asarray(frame, dtype=np.float64)
    mean = np.asarray(mean, dtype=np.float64)
    log_var = np.asarray(log_var, dtype=np.float64)
    if not (frame.shape == mean.shape == log_var.shape) or frame.ndim != 1 or frame.size < 1:
        raise ShapeError(f"length mismatch: {frame.shape}, {mean.shape}, {log_var.shape}")
    return float(_log_prob_1(frame, mean, np.maximum(log_var, LOG_VAR_FLOOR)))


@numba.njit(cache=True, nogil=True)
def _log_prob_1(y, mu, lv):
    acc = 0.0
    for k in range(y.shape[0]):
        diff = y[k] - mu[k]
        acc += -0.5 * (LOG_2PI + lv[k] + diff * diff * math.exp(-lv[k]))
    return acc


@numba.njit(cache=True, nogil=True)
def _emission_kernel(mel, mu, lv):
    n, d = mel.shape
    m = mu.shape[0]
    out = np.empty((n, m))
    prec = np.exp(-lv)
    for t in range(n):
        for s in range(m):
            acc = 0.0
            for k in range(d):
                diff = mel[t, k] - mu[s, k]
                acc += -0.5 * (LOG_2PI + lv[s, k] + diff * diff * prec[s, k])
            out[t, s] = acc
    return out


def emission_matrix(mel, gaussians: GaussianSequence) -> np.ndarray:
    """(n, m) matrix of log N(frame t | token s)."""
    mel = as_mel(mel)
    if mel.shape[1] != gaussians.d:
        raise ShapeError(f"channel mismatch: mel has {mel.shape[1]}, Gaussians have {gaussians.d}")
    return _emission_kernel(mel, gaussians.means, gaussians.effective_log_vars())


def grad_gaussians(gamma, mel, gaussians: GaussianSequence):
    """Gradients of the alignment loss w.r.t. means and log-variances.

    ``gamma`` is the (n, m) posterior occupancy, so the loss gradient w.r.t.
    each emission entry is ``-gamma``. Log-variances below the floor receive
    zero gradient.
    """
    mel = as_mel(mel)
    gamma = np.asarray(gamma, dtype=np.float64)
    n, d = mel.shape
    if gamma.shape != (n, gaussians.m) or d != gaussians.d:
        raise ShapeError(
            f"shape mismatch: gamma {gamma.shape}, mel {mel.shape}, Gaussians ({gaussians.m}, {gaussians.d})")
    mu = gaussians.means
    prec = np.exp(-gaussians.effective_log_vars())
    occ = gamma.sum(axis=0)[:, None]           # (m, 1)
    first = gamma.T @ mel                       # (m, d)
    second = gamma.T @ (mel * mel)              # (m, d)
    d_means = (occ * mu - first) * prec
    sq = second - 2.0 * mu * first + occ * mu * mu
    d_log_vars = 0.5 * (occ - sq * prec)
    d_log_vars[gaussians.log_vars < LOG_VAR_FLOOR] = 0.0
    return d_means, d_log_vars
