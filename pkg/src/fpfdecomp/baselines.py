"""Constant-gain and kernel-based gain approximations (comparison methods).

The kernel method builds the Gaussian kernel k(x, y) = exp(-|x-y|^2 / 4 eps),
bi-normalizes it by the degree vector and row-normalizes to a Markov matrix
T, runs the fixed-point iteration Phi <- T Phi + eps (h - hbar) a fixed
number of times, and reads the per-particle gain

    K_i = sum_j T_ij (Phi_j + eps h_j) (X_j - sum_n T_in X_n) / (2 eps).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels

__all__ = [
    "KernelGainConfig",
    "DegenerateKernelRow",
    "constant_gain",
    "kernel_gain",
    "kernel_markov_matrix",
    "median_bandwidth",
]


class DegenerateKernelRow(RuntimeError):
    def __init__(self, particle: int):
        self.particle = particle
        super().__init__(f"kernel row for particle {particle} underflowed to zero")


@dataclass
class KernelGainConfig:
    bandwidth: float = 0.1
    iterations: int = 100

    def __post_init__(self):
        if self.bandwidth <= 0.0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")
        if self.iterations < 1:
            raise ValueError(f"need at least one iteration, got {self.iterations}")


def constant_gain(particles: np.ndarray, h_at: np.ndarray, hbar: np.ndarray) -> np.ndarray:
    """K = (1/N_p) sum_i X_i (h(X_i) - hbar)^T, used at every x."""
    particles = np.atleast_2d(np.asarray(particles, dtype=float))
    h_at = np.atleast_2d(np.asarray(h_at, dtype=float))
    if particles.shape[0] == 0:
        raise ValueError("empty ensemble")
    hbar = np.atleast_1d(np.asarray(hbar, dtype=float))
    return particles.T @ (h_at - hbar[None, :]) / particles.shape[0]


def kernel_gain(
    particles: np.ndarray,
    h_at: np.ndarray,
    hbar: np.ndarray,
    cfg: KernelGainConfig,
) -> np.ndarray:
    """Per-particle gains (N_p, d, m); exactly cfg.iterations fixed-point steps."""
    particles = np.atleast_2d(np.asarray(particles, dtype=float))
    if particles.shape[0] < 2:
        raise ValueError("kernel gain needs at least two particles")
    h_at = np.atleast_2d(np.asarray(h_at, dtype=float))
    hbar = np.atleast_1d(np.asarray(hbar, dtype=float))
    gains, status = _kernels.kernel_gain(particles, h_at, hbar, cfg.bandwidth, cfg.iterations)
    if status >= 0:
        raise DegenerateKernelRow(status)
    return gains


def kernel_markov_matrix(particles: np.ndarray, bandwidth: float) -> np.ndarray:
    return _kernels.kernel_markov_matrix(np.atleast_2d(np.asarray(particles, float)), bandwidth)


def median_bandwidth(particles: np.ndarray) -> float:
    """Heuristic 4 med^2 / log N with med the median pairwise distance."""
    particles = np.atleast_2d(np.asarray(particles, dtype=float))
    n = particles.shape[0]
    d2 = ((particles[:, None, :] - particles[None, :, :]) ** 2).sum(axis=2)
    med = float(np.median(np.sqrt(d2[np.triu_indices(n, k=1)])))
    return 4.0 * med**2 / np.log(n)
