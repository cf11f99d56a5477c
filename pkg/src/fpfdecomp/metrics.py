"""Run records and the comparison metrics used by the benchmark suites."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "RunRecord",
    "gain_l2_error",
    "armse",
    "armse_per_component",
    "mre",
    "scaling_fit",
]


@dataclass
class RunRecord:
    """One filter run: truth/estimate pairs plus timing and flags."""

    scenario: str
    method: str
    seed: int
    trial: int
    times: np.ndarray  # (n+1,)
    truth: np.ndarray  # (n+1, d)
    estimate: np.ndarray  # (n+1, d)
    cpu_s: float
    flags: List[str] = field(default_factory=list)
    n_particles: int = 0
    gain_build_s: float = 0.0

    def __post_init__(self):
        if self.truth.shape != self.estimate.shape:
            raise ValueError("truth and estimate must have equal shapes")
        if self.cpu_s < 0.0:
            raise ValueError("wall time must be non-negative")


def gain_l2_error(approx: np.ndarray, exact: np.ndarray, j: int) -> float:
    """Root sum of squares over particles of component j differences."""
    approx = np.atleast_2d(np.asarray(approx, dtype=float))
    exact = np.atleast_2d(np.asarray(exact, dtype=float))
    if approx.shape != exact.shape:
        raise ValueError(f"shape mismatch {approx.shape} vs {exact.shape}")
    return float(np.sqrt(np.sum((approx[:, j] - exact[:, j]) ** 2)))


def _step_mask(times: np.ndarray, t_min: Optional[float], t_max: Optional[float]) -> np.ndarray:
    mask = np.ones(times.shape[0], dtype=bool)
    mask[0] = False  # error starts accumulating after the first step
    if t_min is not None:
        mask &= times >= t_min - 1e-12
    if t_max is not None:
        mask &= times <= t_max + 1e-12
    return mask


def _stack_errors(records: Sequence[RunRecord], t_min, t_max) -> np.ndarray:
    if not records:
        raise ValueError("need at least one run record")
    n = records[0].times.shape[0]
    if any(r.times.shape[0] != n for r in records):
        raise ValueError("records must share one time grid")
    mask = _step_mask(records[0].times, t_min, t_max)
    return np.stack([(r.truth - r.estimate)[mask] for r in records])


def armse(records: Sequence[RunRecord], t_min=None, t_max=None) -> float:
    """Root of the double average over trials and steps of |X - Xhat|^2."""
    err = _stack_errors(records, t_min, t_max)
    return float(np.sqrt(np.mean(np.sum(err**2, axis=2))))


def armse_per_component(records: Sequence[RunRecord], t_min=None, t_max=None) -> np.ndarray:
    """Per-state-component ARMSE (the convention of the Lorenz tables)."""
    err = _stack_errors(records, t_min, t_max)
    return np.sqrt(np.mean(err**2, axis=(0, 1)))


def mre(record: RunRecord) -> float:
    """Accumulated error norm over accumulated state norm (Euclidean)."""
    num = float(np.sum(np.linalg.norm(record.truth - record.estimate, axis=1)))
    den = float(np.sum(np.linalg.norm(record.truth, axis=1)))
    if den == 0.0:
        raise ValueError("all-zero truth has no relative error")
    return num / den


def scaling_fit(points: Sequence[Tuple[float, float]]) -> float:
    """Least-squares slope of log(seconds) against log(d)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise ValueError("need at least 3 (d, seconds) points")
    if np.any(pts <= 0.0):
        raise ValueError("dimensions and timings must be positive")
    slope, _ = np.polyfit(np.log(pts[:, 0]), np.log(pts[:, 1]), 1)
    return float(slope)
