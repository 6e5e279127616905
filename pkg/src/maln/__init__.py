"""Monotonic text-to-frame alignment: Gaussian emissions, forward/backward
lattice, best-path durations, length regulation and a small training harness."""

from .alignment import (
    duration_targets_log,
    length_regulate,
    path_to_durations,
    round_durations,
    viterbi,
)
from .emission import GaussianSequence, emission_matrix, gaussian_log_prob, grad_gaussians
from .lattice import (
    AlignmentLattice,
    backward,
    batch_loss_and_grad,
    brute_force_loss,
    enumerate_alignments,
    forward,
    loss_and_grad,
    posterior,
)
from .tensor import FormatError, logsumexp, read_tensor, write_tensor

__all__ = [
    "AlignmentLattice",
    "FormatError",
    "GaussianSequence",
    "backward",
    "batch_loss_and_grad",
    "brute_force_loss",
    "duration_targets_log",
    "emission_matrix",
    "enumerate_alignments",
    "forward",
    "gaussian_log_prob",
    "grad_gaussians",
    "length_regulate",
    "logsumexp",
    "loss_and_grad",
    "path_to_durations",
    "posterior",
    "read_tensor",
    "round_durations",
    "viterbi",
    "write_tensor",
]
