"""Desk-scale training harness.

A small feed-forward density network maps token ids to per-token diagonal
Gaussians and is trained with the alignment loss on synthetic sequences.
Once it has converged, the best path through the lattice gives per-token
durations, and a tiny regressor learns them in the log domain.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .alignment import duration_targets_log, path_to_durations, round_durations, viterbi
from .emission import GaussianSequence, emission_matrix, grad_gaussians
from .lattice import lattice

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.98
ADAM_EPS = 1e-9
FINE_TUNE_LR = 1e-4


class ConfigurationError(ValueError):
    pass


class TrainingDiverged(RuntimeError):
    def __init__(self, step: int, loss: float):
        super().__init__(f"non-finite loss {loss} at step {step}")
        self.step = step
        self.loss = loss


@dataclass
class SyntheticTask:
    true_means: np.ndarray     # (m, d)
    durations: np.ndarray      # (m,)
    noise_std: float
    mel: np.ndarray            # (n, d)
    seed: int

    @property
    def m(self) -> int:
        return self.true_means.shape[0]

    @property
    def d(self) -> int:
        return self.true_means.shape[1]

    @property
    def n(self) -> int:
        return self.mel.shape[0]

    @property
    def token_ids(self) -> np.ndarray:
        return np.arange(self.m)


def generate_task(m: int = 5, d: int = 2, max_duration: int = 8, noise_std: float = 0.1,
                  seed: int = 0, max_tries: int = 1000, mean_scale: float = 1.0) -> SyntheticTask:
    """Random token means (pairwise >= 4 noise_std apart) and durations in [1, max_duration]."""
    if m < 1 or d < 1 or max_duration < 1:
        raise ConfigurationError("m, d and max_duration must all be >= 1")
    if noise_std < 0:
        raise ConfigurationError("noise_std must be non-negative")
    rng = np.random.default_rng(seed)
    min_dist = 4.0 * noise_std
    for _ in range(max_tries):
        means = mean_scale * rng.standard_normal((m, d))
        gaps = np.linalg.norm(means[:, None, :] - means[None, :, :], axis=-1)
        if m == 1 or gaps[np.triu_indices(m, 1)].min() >= min_dist:
            break
    else:
        raise ConfigurationError(f"could not separate {m} means by {min_dist} in {max_tries} draws")
    durations = rng.integers(1, max_duration + 1, size=m)
    owner = np.repeat(np.arange(m), durations)
    mel = means[owner] + noise_std * rng.standard_normal((len(owner), d))
    return SyntheticTask(means, durations, noise_std, mel, seed)


class Adam:
    """Bias-corrected Adam; updates parameter arrays in place."""

    def __init__(self, lr=1e-2, beta1=ADAM_BETA1, beta2=ADAM_BETA2, eps=ADAM_EPS):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = {}
        self.v = {}
        self.t = 0

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for k, g in grads.items():
            if k not in self.m:
                self.m[k] = np.zeros_like(params[k])
                self.v[k] = np.zeros_like(params[k])
            if g.shape != params[k].shape:
                raise ValueError(f"gradient for {k} has shape {g.shape}, expected {params[k].shape}")
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            m_hat = self.m[k] / bc1
            v_hat = self.v[k] / bc2
            params[k] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


# --- density network ---------------------------------------------------------

def init_mdn(vocab: int, d: int, embed_dim: int = 16, hidden: int = 32, layers: int = 2,
             rng=None) -> dict:
    """He-initialised weights, zero biases (so the start is unit variance)."""
    rng = np.random.default_rng(rng)
    params = {"embed": rng.standard_normal((vocab, embed_dim))}
    fan_in = embed_dim
    for i in range(layers):
        params[f"W{i}"] = rng.standard_normal((fan_in, hidden)) * np.sqrt(2.0 / fan_in)
        params[f"b{i}"] = np.zeros(hidden)
        fan_in = hidden
    params["W_out"] = rng.standard_normal((fan_in, 2 * d)) * np.sqrt(2.0 / fan_in)
    params["b_out"] = np.zeros(2 * d)
    return params


def _layer_count(params: dict) -> int:
    return sum(1 for k in params if k.startswith("W") and k != "W_out")


def _check_ids(params, token_ids) -> np.ndarray:
    ids = np.asarray(token_ids, dtype=np.int64)
    vocab = params["embed"].shape[0]
    if ids.ndim != 1 or ids.size == 0:
        raise ValueError("token_ids must be a non-empty 1-d sequence")
    if ids.min() < 0 or ids.max() >= vocab:
        raise IndexError(f"token id out of range [0, {vocab})")
    return ids


def _mdn_activations(params, ids):
    acts = [params["embed"][ids]]
    pre = []
    for i in range(_layer_count(params)):
        z = acts[-1] @ params[f"W{i}"] + params[f"b{i}"]
        pre.append(z)
        acts.append(np.maximum(z, 0.0))
    out = acts[-1] @ params["W_out"] + params["b_out"]
    return acts, pre, out


def mdn_forward(params: dict, token_ids) -> GaussianSequence:
    ids = _check_ids(params, token_ids)
    _, _, out = _mdn_activations(params, ids)
    d = out.shape[1] // 2
    return GaussianSequence(out[:, :d], out[:, d:])


def mdn_backward(params: dict, token_ids, d_means, d_log_vars) -> dict:
    """Reverse-mode gradients of every parameter given upstream (m, d) gradients."""
    ids = _check_ids(params, token_ids)
    acts, pre, out = _mdn_activations(params, ids)
    d_means = np.asarray(d_means, dtype=np.float64)
    d_log_vars = np.asarray(d_log_vars, dtype=np.float64)
    expected = (len(ids), out.shape[1] // 2)
    if d_means.shape != expected or d_log_vars.shape != expected:
        raise ValueError(f"upstream gradients must have shape {expected}")
    g = np.concatenate([d_means, d_log_vars], axis=1)
    grads = {"W_out": acts[-1].T @ g, "b_out": g.sum(axis=0)}
    g = g @ params["W_out"].T
    for i in reversed(range(_layer_count(params))):
        g = g * (pre[i] > 0)
        grads[f"W{i}"] = acts[i].T @ g
        grads[f"b{i}"] = g.sum(axis=0)
        g = g @ params[f"W{i}"].T
    d_embed = np.zeros_like(params["embed"])
    np.add.at(d_embed, ids, g)
    grads["embed"] = d_embed
    return grads


def alignment_loss(params: dict, token_ids, mel) -> float:
    """End-to-end loss: ids -> Gaussians -> emissions -> lattice."""
    g = mdn_forward(params, token_ids)
    return -lattice(emission_matrix(mel, g)).total_log_prob


def alignment_loss_and_grads(params: dict, token_ids, mel):
    g = mdn_forward(params, token_ids)
    lat = lattice(emission_matrix(mel, g))
    d_means, d_log_vars = grad_gaussians(lat.gamma, mel, g)
    return -lat.total_log_prob, mdn_backward(params, token_ids, d_means, d_log_vars)


# --- phase 1: density network on the alignment loss --------------------------

@dataclass
class TrainConfig:
    steps: int = 500
    lr: float = 1e-2
    embed_dim: int = 16
    hidden: int = 32
    layers: int = 2
    init_seed: int | None = None   # defaults to the task seed


def train_phase1(task: SyntheticTask, config: TrainConfig | None = None):
    """Fit the density network by Adam on the alignment loss.

    Returns the trained parameters and the per-step loss curve.
    """
    config = config or TrainConfig()
    if config.steps < 1:
        raise ConfigurationError("steps must be >= 1")
    seed = task.seed if config.init_seed is None else config.init_seed
    params = init_mdn(task.m, task.d, config.embed_dim, config.hidden, config.layers,
                      rng=np.random.default_rng([seed, 1]))
    opt = Adam(lr=config.lr)
    ids = task.token_ids
    losses = np.empty(config.steps)
    for step in range(config.steps):
        loss, grads = alignment_loss_and_grads(params, ids, task.mel)
        if not np.isfinite(loss):
            raise TrainingDiverged(step, loss)
        losses[step] = loss
        opt.step(params, grads)
    return params, losses


def extract_durations(params: dict, task: SyntheticTask) -> np.ndarray:
    g = mdn_forward(params, task.token_ids)
    path, _ = viterbi(emission_matrix(task.mel, g))
    return path_to_durations(path, task.m)


# --- phase 4: log-domain duration regressor ----------------------------------

@dataclass
class RegressorConfig:
    steps: int = 2000
    lr: float = 1e-2
    embed_dim: int = 8
    seed: int = 0


def _regress(params, ids):
    return params["embed"][ids] @ params["w"] + params["b"]


def predict_durations(regressor: dict, token_ids, speed: float = 1.0) -> np.ndarray:
    """Linear-domain integer durations: exp of the log prediction, rounded."""
    return round_durations(np.exp(_regress(regressor, np.asarray(token_ids))), speed=speed)


def extract_and_train_duration_regressor(params: dict, task: SyntheticTask,
                                         config: RegressorConfig | None = None):
    """Fit embedding -> affine to the log of the extracted durations.

    Returns ``(regressor, mse, durations)`` where ``mse`` is the final
    training MSE in the log domain.
    """
    config = config or RegressorConfig()
    if task.m < 2:
        raise ConfigurationError("duration regressor needs at least two tokens")
    durations = extract_durations(params, task)
    target = duration_targets_log(durations)
    ids = task.token_ids
    rng = np.random.default_rng(config.seed)
    reg = {
        "embed": rng.standard_normal((task.m, config.embed_dim)),
        "w": rng.standard_normal(config.embed_dim) / np.sqrt(config.embed_dim),
        "b": np.zeros(1),
    }
    opt = Adam(lr=config.lr)
    for _ in range(config.steps):
        resid = _regress(reg, ids) - target
        g_out = 2.0 * resid / len(ids)
        d_embed = np.zeros_like(reg["embed"])
        np.add.at(d_embed, ids, np.outer(g_out, reg["w"]))
        grads = {"embed": d_embed, "w": reg["embed"][ids].T @ g_out, "b": np.array([g_out.sum()])}
        opt.step(reg, grads)
    mse = float(np.mean((_regress(reg, ids) - target) ** 2))
    return reg, mse, durations


@dataclass
class DemoReport:
    final_loss: float
    loss_curve: list
    true_durations: list
    recovered_durations: list
    recovered: bool
    regressor_mse: float | None
    predicted_durations: list
    wall_clock_s: float
    config: dict = field(default_factory=dict)


def run_demo(m=5, d=2, noise_std=0.1, steps=500, lr=1e-2, seed=0, max_duration=8,
             regressor_steps=2000, curve_points=50) -> DemoReport:
    start = time.perf_counter()
    task = generate_task(m, d, max_duration, noise_std, seed)
    params, losses = train_phase1(task, TrainConfig(steps=steps, lr=lr))
    recovered = extract_durations(params, task)
    if m >= 2:
        reg, mse, _ = extract_and_train_duration_regressor(params, task,
                                                           RegressorConfig(steps=regressor_steps))
        predicted = predict_durations(reg, task.token_ids).tolist()
    else:
        mse, predicted = None, recovered.tolist()
    stride = max(1, len(losses) // curve_points)
    curve = [[int(i), float(losses[i])] for i in range(0, len(losses), stride)]
    if curve[-1][0] != len(losses) - 1:
        curve.append([len(losses) - 1, float(losses[-1])])
    return DemoReport(
        final_loss=float(losses[-1]),
        loss_curve=curve,
        true_durations=task.durations.tolist(),
        recovered_durations=recovered.tolist(),
        recovered=bool(np.array_equal(recovered, task.durations)),
        regressor_mse=mse,
        predicted_durations=predicted,
        wall_clock_s=time.perf_counter() - start,
        config={"tokens": m, "dim": d, "noise": noise_std, "steps": steps, "lr": lr,
                "seed": seed, "max_duration": max_duration},
    )
