"""Particle-anchored Gaussian mixtures and per-component weighted radials.

A mixture is the kernel-density surrogate (1/N_p) sum_i N(x; X_i, Sigma_i)
placed on the particle cloud.  Components cache the precision and its
eigendecomposition at construction; the weighted radial r(x) is the
Mahalanobis distance sqrt((x-mu)^T Sigma^-1 (x-mu)), which coincides with
the per-eigenvalue form for diagonal covariances and keeps the radial
reduction exact in rotated coordinates for dense ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from .hermite import HermiteExpansion, expansion_eval

__all__ = [
    "GaussianComponent",
    "Mixture",
    "component_density",
    "component_logpdf",
    "mixture_density",
    "mixture_logpdf",
    "weighted_radial",
    "empirical_obs_mean",
]

_LOG_2PI = np.log(2.0 * np.pi)
_UNDERFLOW_EXPONENT = -700.0


@dataclass
class GaussianComponent:
    """One mixture component N(mean, cov) with cached spectral data.

    ``eigenvalues`` are those of the precision matrix Sigma^-1 and ``rotation``
    holds its orthonormal eigenvectors as rows, so precision = R^T diag(lam) R.
    """

    mean: np.ndarray
    cov: np.ndarray
    precision: np.ndarray = field(init=False)
    eigenvalues: np.ndarray = field(init=False)
    rotation: np.ndarray = field(init=False)
    det: float = field(init=False)
    logdet: float = field(init=False)

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.cov = np.asarray(self.cov, dtype=float)
        d = self.mean.shape[0]
        if self.cov.shape != (d, d):
            raise ValueError(f"covariance shape {self.cov.shape} != ({d}, {d})")
        if not np.allclose(self.cov, self.cov.T, atol=1e-10 * max(1.0, np.abs(self.cov).max())):
            raise ValueError("covariance must be symmetric")
        w, Q = np.linalg.eigh(0.5 * (self.cov + self.cov.T))
        if np.any(w <= 0.0):
            raise ValueError(f"covariance must be positive definite, eigenvalues {w}")
        self.eigenvalues = 1.0 / w
        self.rotation = Q.T
        self.precision = (Q / w) @ Q.T
        self.det = float(np.prod(w))
        self.logdet = float(np.sum(np.log(w)))
        recon = self.rotation.T @ np.diag(self.eigenvalues) @ self.rotation
        err = np.abs(recon - self.precision).max()
        if err > 1e-10 * max(1.0, np.abs(self.precision).max()):
            raise ValueError(f"eigendecomposition reconstruction error {err:g}")

    @property
    def d(self) -> int:
        return self.mean.shape[0]

    @classmethod
    def from_diagonal(cls, mean, eps) -> "GaussianComponent":
        mean = np.asarray(mean, dtype=float)
        eps = np.broadcast_to(np.asarray(eps, dtype=float), mean.shape)
        return cls(mean=mean, cov=np.diag(eps))


@dataclass
class Mixture:
    """Uniformly weighted list of components sharing one dimension."""

    components: List[GaussianComponent]

    def __post_init__(self):
        if not self.components:
            raise ValueError("mixture needs at least one component")
        d = self.components[0].d
        if any(c.d != d for c in self.components):
            raise ValueError("all components must share one dimension")

    @property
    def d(self) -> int:
        return self.components[0].d

    @property
    def n_components(self) -> int:
        return len(self.components)


def component_logpdf(c: GaussianComponent, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (c.d,):
        raise ValueError(f"point has shape {x.shape}, expected ({c.d},)")
    delta = x - c.mean
    maha = float(delta @ c.precision @ delta)
    return -0.5 * (c.d * _LOG_2PI + c.logdet + maha)


def component_density(c: GaussianComponent, x) -> float:
    """(2 pi)^(-d/2) |Sigma|^(-1/2) exp(-(x-mu)^T Sigma^-1 (x-mu) / 2)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (c.d,):
        raise ValueError(f"point has shape {x.shape}, expected ({c.d},)")
    delta = x - c.mean
    maha = float(delta @ c.precision @ delta)
    norm = (2.0 * np.pi) ** (-0.5 * c.d) / np.sqrt(c.det)
    return norm * np.exp(-0.5 * maha)


def mixture_logpdf(m: Mixture, x) -> float:
    logs = np.array([component_logpdf(c, x) for c in m.components])
    top = logs.max()
    return float(top + np.log(np.mean(np.exp(logs - top))))


def mixture_density(m: Mixture, x) -> float:
    """Average of component densities; log-sum-exp path when exponents underflow."""
    logs = np.array([component_logpdf(c, x) for c in m.components])
    if logs.min() < _UNDERFLOW_EXPONENT:
        top = logs.max()
        if not np.isfinite(top):
            return 0.0
        return float(np.exp(top) * np.mean(np.exp(logs - top)))
    return float(np.mean(np.exp(logs)))


def weighted_radial(c: GaussianComponent, x) -> float:
    """Mahalanobis radius sqrt((x-mu)^T Sigma^-1 (x-mu))."""
    x = np.asarray(x, dtype=float)
    delta = x - c.mean
    val = float(delta @ c.precision @ delta)
    return np.sqrt(max(val, 0.0))


def empirical_obs_mean(states, h: Sequence[HermiteExpansion]) -> np.ndarray:
    """Particle average of each observation channel, (1/N_p) sum_i h_j(X_i)."""
    states = np.asarray(states, dtype=float)
    if states.ndim != 2 or states.shape[0] == 0:
        raise ValueError("need a non-empty (N, d) particle array")
    out = np.empty(len(h))
    for j, hj in enumerate(h):
        out[j] = np.mean([expansion_eval(hj, x) for x in states])
    return out
