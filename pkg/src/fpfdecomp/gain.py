"""Gain solver: Galerkin backward recursion plus weighted-radial transport.

Per mixture component i and observation channel j the gain column splits
into two exactly solvable pieces:

* a Hermite polynomial phi_j^i solving
  -(x-X_i)^T Sigma_i^-1 grad(phi) + lap(phi) = -h_j(x) + C_j^i,
  obtained level by level from degree p downward (the block system below),
  with the constant C_j^i falling out of the degree-0 equation; and

* a radially symmetric field (x-X_i) * (hbar_j - C_j^i) * G(r) /
  (2 pi^(d/2) |Sigma_i|^(1/2)) with G the incomplete-gamma radial kernel,
  whose divergence is exactly (hbar_j - C_j^i) N(x; X_i, Sigma_i).

The assembled column is the density-weighted average of the component
gradients plus the radial fields, divided by the mixture density.

Blocks: for a degree-q target index q the level-q coupling matrix A_q has
diagonal entries sum_l S_ll q_l and off entries S_lm (q_m + 1) at index
q + e_m - e_l (S = Sigma^-1); A_q depends only on S, so factorizations are
shared across particles and channels.  The level-(q+1) and level-(q+2)
terms (B and D applications) carry the particle mean and the Laplacian
coupling and are applied matrix-free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.special

from .hermite import (
    HermiteExpansion,
    IndexSet,
    enumerate_indices,
    expansion_grad,
    hermite_values,
)
from .mixture import GaussianComponent, Mixture, component_logpdf
from .special import radial_kernel

__all__ = [
    "SingularBlock",
    "BlockSystem",
    "GainCoefficients",
    "GainField",
    "build_blocks",
    "backward_recursion",
    "scalar_recursion",
    "scalar_gain_closed_form",
    "radial_term",
    "assemble_gain",
    "invertibility_probe",
    "LevelReport",
]

_PIVOT_RTOL = 1e-12
_LOG_UNDERFLOW = -700.0


class SingularBlock(RuntimeError):
    """A level coupling matrix A_q factorized as numerically singular."""

    def __init__(self, level: int, message: str = ""):
        self.level = level
        super().__init__(message or f"coupling block at level {level} is singular")


@dataclass
class GainCoefficients:
    """Per (particle, channel) solution: polynomial part and its constant.

    ``expansion`` holds the Hermite coefficients for 1 <= |k|_1 <= p (the
    constant term is structurally zero), ``constant`` is C_j^i, and
    ``hbar`` the empirical observation mean attached at assembly time.
    For d = 1 solves ``ktilde`` additionally stores the K-tilde form
    (ktilde[q] = 2 (q+1) * coeff at degree q+1).
    """

    expansion: HermiteExpansion
    constant: float
    hbar: Optional[float] = None
    ktilde: Optional[np.ndarray] = None


@dataclass
class BlockSystem:
    """Level-block view of the Galerkin system for one precision matrix."""

    index_set: IndexSet
    precision: np.ndarray
    X: np.ndarray
    diagonal: bool
    _a_diag: Dict[int, np.ndarray] = field(default_factory=dict, repr=False)
    _a_dense: Dict[int, np.ndarray] = field(default_factory=dict, repr=False)
    _a_lu: Dict[int, tuple] = field(default_factory=dict, repr=False)

    @property
    def d(self) -> int:
        return self.index_set.d

    @property
    def p(self) -> int:
        return self.index_set.p

    def level_indices(self, q: int) -> np.ndarray:
        return self.index_set.indices[self.index_set.level_slice(q)]

    def a_matrix(self, q: int) -> np.ndarray:
        """Materialize A_q (rows and columns in graded-lex level order)."""
        if q in self._a_dense:
            return self._a_dense[q]
        iset = self.index_set
        idx = self.level_indices(q)
        n = idx.shape[0]
        S = self.precision
        base = int(iset.offsets[q])
        A = np.zeros((n, n))
        for r in range(n):
            krow = idx[r]
            A[r, r] = float(np.sum(np.diag(S) * krow))
            for l in range(self.d):
                if krow[l] == 0:
                    continue
                for m in range(self.d):
                    if m == l or S[l, m] == 0.0:
                        continue
                    col = krow.copy()
                    col[l] -= 1
                    col[m] += 1
                    cpos = iset.position(tuple(col)) - base
                    A[r, cpos] += S[l, m] * (krow[m] + 1)
        self._a_dense[q] = A
        return A

    def _diag_vector(self, q: int) -> np.ndarray:
        if q not in self._a_diag:
            idx = self.level_indices(q)
            self._a_diag[q] = idx @ np.diag(self.precision)
        return self._a_diag[q]

    def solve_level(self, q: int, rhs: np.ndarray) -> np.ndarray:
        """Solve A_q phi = rhs; raises SingularBlock on pivot breakdown."""
        if self.diagonal:
            diag = self._diag_vector(q)
            scale = np.abs(diag).max() if diag.size else 0.0
            if diag.size and np.abs(diag).min() < _PIVOT_RTOL * max(scale, 1.0):
                raise SingularBlock(q)
            return rhs / diag
        if q not in self._a_lu:
            A = self.a_matrix(q)
            lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
            pivots = np.abs(np.diag(lu))
            if pivots.min() < _PIVOT_RTOL * max(np.abs(A).max(), 1.0):
                raise SingularBlock(q)
            self._a_lu[q] = (lu, piv)
        return scipy.linalg.lu_solve(self._a_lu[q], rhs, check_finite=False)

    def apply_b(self, q: int, phi_next: np.ndarray, SX: np.ndarray) -> np.ndarray:
        """Right-hand-side term sum_m 2 (q_m + 1) (S X)_m phi[q + e_m]."""
        iset = self.index_set
        idx = self.level_indices(q)
        base_next = int(iset.offsets[q + 1])
        out = np.zeros(idx.shape[0])
        for r in range(idx.shape[0]):
            krow = idx[r]
            acc = 0.0
            for m in range(self.d):
                col = krow.copy()
                col[m] += 1
                pos = iset.position(tuple(col)) - base_next
                acc += 2.0 * (krow[m] + 1) * SX[m] * phi_next[pos]
            out[r] = acc
        return out

    def apply_d(self, q: int, phi_next2: np.ndarray) -> np.ndarray:
        """Right-hand-side degree-(q+2) term: diagonal Laplacian couplings
        2 (2 - S_ll)(q_l+1)(q_l+2) at q + 2 e_l minus the mixed
        2 S_lm (q_m+1)(q_l+1) at q + e_l + e_m."""
        iset = self.index_set
        idx = self.level_indices(q)
        S = self.precision
        base = int(iset.offsets[q + 2])
        out = np.zeros(idx.shape[0])
        for r in range(idx.shape[0]):
            krow = idx[r]
            acc = 0.0
            for l in range(self.d):
                col = krow.copy()
                col[l] += 2
                pos = iset.position(tuple(col)) - base
                acc += 2.0 * (2.0 - S[l, l]) * (krow[l] + 1) * (krow[l] + 2) * phi_next2[pos]
            for l in range(self.d):
                for m in range(self.d):
                    if m == l or S[l, m] == 0.0:
                        continue
                    col = krow.copy()
                    col[l] += 1
                    col[m] += 1
                    pos = iset.position(tuple(col)) - base
                    acc -= 2.0 * S[l, m] * (krow[m] + 1) * (krow[l] + 1) * phi_next2[pos]
            out[r] = acc
        return out


def build_blocks(precision, X, p: int) -> BlockSystem:
    """Set up the level blocks for one SPD precision matrix and mean X."""
    precision = np.asarray(precision, dtype=float)
    X = np.asarray(X, dtype=float)
    d = X.shape[0]
    if precision.shape != (d, d):
        raise ValueError(f"precision shape {precision.shape} != ({d}, {d})")
    if not np.allclose(precision, precision.T, atol=1e-10 * max(1.0, np.abs(precision).max())):
        raise ValueError("precision must be symmetric")
    try:
        np.linalg.cholesky(precision)
    except np.linalg.LinAlgError as exc:
        raise ValueError("precision must be positive definite") from exc
    offdiag = precision - np.diag(np.diag(precision))
    diagonal = not np.any(offdiag)
    return BlockSystem(
        index_set=enumerate_indices(d, p),
        precision=precision,
        X=X,
        diagonal=diagonal,
    )


def backward_recursion(
    blocks: BlockSystem, a: HermiteExpansion, X=None
) -> GainCoefficients:
    """Solve levels p..1 backward, then read off the constant.

    Level q satisfies A_q phi_q = a_q + B(phi_{q+1}) + D(phi_{q+2}) with
    phi_{p+1} = phi_{p+2} = 0, and
    C = a_0 + B(phi_1) + D(phi_2) at the zero index.
    """
    iset = blocks.index_set
    if a.d != iset.d or a.p > iset.p:
        raise ValueError("observation expansion does not match the block system")
    X = blocks.X if X is None else np.asarray(X, dtype=float)
    SX = blocks.precision @ X
    dense = a.to_dense(iset) if a.p == iset.p else HermiteExpansion(
        d=a.d, p=iset.p, coeffs=a.coeffs
    ).to_dense(iset)
    p = iset.p
    phi: Dict[int, np.ndarray] = {}
    for q in range(p, 0, -1):
        rhs = dense[iset.level_slice(q)].copy()
        if q + 1 <= p:
            rhs += blocks.apply_b(q, phi[q + 1], SX)
        if q + 2 <= p:
            rhs += blocks.apply_d(q, phi[q + 2])
        phi[q] = blocks.solve_level(q, rhs)
    constant = float(dense[0])
    if p >= 1:
        constant += float(blocks.apply_b(0, phi[1], SX)[0])
    if p >= 2:
        constant += float(blocks.apply_d(0, phi[2])[0])
    values = np.zeros(len(iset))
    for q, vec in phi.items():
        values[iset.level_slice(q)] = vec
    expansion = HermiteExpansion.from_dense(iset, values)
    ktilde = None
    if iset.d == 1:
        ktilde = np.array([2.0 * (q + 1) * values[q + 1] for q in range(p)])
    return GainCoefficients(expansion=expansion, constant=constant, ktilde=ktilde)


def scalar_recursion(a, X: float, eps: float) -> GainCoefficients:
    """Closed scalar path (d = 1): K-tilde backward recursion.

    K_k = 2 eps a_{k+1} + 2 (2 eps - 1)(k+2) K_{k+2} + 2 X K_{k+1}
    downward from k = p-1 with K_p = K_{p+1} = 0, then
    C = a_0 + (X/eps) K_0 + (2 - 1/eps) K_1.
    Serves as the oracle for (and fast path of) the d = 1 block solve.
    """
    a = np.asarray(a, dtype=float)
    p = a.shape[0] - 1
    kt = np.zeros(p + 2)
    for k in range(p - 1, -1, -1):
        kt[k] = 2.0 * eps * a[k + 1] + 2.0 * (2.0 * eps - 1.0) * (k + 2) * kt[k + 2] + 2.0 * X * kt[k + 1]
    ktilde = kt[: max(p, 0)]
    constant = float(a[0])
    if p >= 1:
        constant += (X / eps) * kt[0]
    if p >= 2:
        constant += (2.0 - 1.0 / eps) * kt[1]
    coeffs = {(q + 1,): ktilde[q] / (2.0 * (q + 1)) for q in range(len(ktilde)) if ktilde[q] != 0.0}
    expansion = HermiteExpansion(d=1, p=max(p, 0), coeffs=coeffs)
    return GainCoefficients(expansion=expansion, constant=constant, ktilde=ktilde.copy())


def scalar_gain_closed_form(x, particles, eps: float, a, hbar: float) -> np.ndarray:
    """Reference d = 1 gain: density-weighted polynomial parts plus the
    erf transport (hbar - C_i)/2 * erf((x - X_i)/sqrt(2 eps)), normalized
    by the scalar mixture.  Used as the oracle for the assembled field."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    particles = np.asarray(particles, dtype=float).reshape(-1)
    a = np.asarray(a, dtype=float)
    p = a.shape[0] - 1
    num = np.zeros_like(x)
    den = np.zeros_like(x)
    table = hermite_values(max(p - 1, 0), x)
    norm = 1.0 / np.sqrt(2.0 * np.pi * eps)
    for Xi in particles:
        sol = scalar_recursion(a, float(Xi), eps)
        poly = np.zeros_like(x)
        for l in range(len(sol.ktilde)):
            poly += sol.ktilde[l] * table[l]
        w = norm * np.exp(-0.5 * (x - Xi) ** 2 / eps)
        num += w * poly + 0.5 * (hbar - sol.constant) * scipy.special.erf(
            (x - Xi) / np.sqrt(2.0 * eps)
        )
        den += w
    return num / den


def radial_term(c: GaussianComponent, x, hbar_j: float, C: float) -> np.ndarray:
    """(x - X_i) (hbar_j - C) / (2 pi^(d/2) |Sigma_i|^(1/2)) * G(r); zero at X_i."""
    x = np.asarray(x, dtype=float)
    delta = x - c.mean
    r = float(np.sqrt(max(delta @ c.precision @ delta, 0.0)))
    coef = (hbar_j - C) / (2.0 * math.pi ** (0.5 * c.d) * math.sqrt(c.det))
    return delta * (coef * radial_kernel(c.d, r))


class GainField:
    """Callable gain field K(x) in R^(d x m) assembled from per-(i, j) pieces.

    Evaluation is lazy (queried point by point); the denominator is handled
    in log space, and if every component density underflows the value falls
    back to the nearest component's gradient plus its rescaled radial term.
    """

    def __init__(
        self,
        states: np.ndarray,
        mixture: Mixture,
        coeffs: Sequence[Sequence[GainCoefficients]],
        hbar: np.ndarray,
    ):
        self.states = np.asarray(states, dtype=float)
        self.mixture = mixture
        self.coeffs = coeffs
        self.hbar = np.asarray(hbar, dtype=float)
        self.n = self.states.shape[0]
        self.d = mixture.d
        self.m = self.hbar.shape[0]
        if len(coeffs) != self.n or any(len(row) != self.m for row in coeffs):
            raise ValueError("coefficient table must be N_p x m")
        self._radial_coef = np.empty((self.n, self.m))
        for i, comp in enumerate(mixture.components):
            norm = 1.0 / (2.0 * math.pi ** (0.5 * self.d) * math.sqrt(comp.det))
            for j in range(self.m):
                self._radial_coef[i, j] = (self.hbar[j] - coeffs[i][j].constant) * norm

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        comps = self.mixture.components
        logs = np.array([component_logpdf(c, x) for c in comps])
        top = float(logs.max())
        out = np.zeros((self.d, self.m))
        if top < _LOG_UNDERFLOW:
            i = int(np.argmax(logs))
            return self._far_field(i, x, logs[i])
        w = np.exp(logs - top)
        W = float(w.sum())
        scale = math.exp(-top) if top < 700.0 else 0.0
        for i, c in enumerate(comps):
            delta = x - c.mean
            r = float(np.sqrt(max(delta @ c.precision @ delta, 0.0)))
            g = radial_kernel(self.d, r)
            for j in range(self.m):
                out[:, j] += w[i] * expansion_grad(self.coeffs[i][j].expansion, x)
                if scale:
                    out[:, j] += scale * self._radial_coef[i, j] * g * delta
        return out / W

    def _far_field(self, i: int, x: np.ndarray, logw: float) -> np.ndarray:
        c = self.mixture.components[i]
        delta = x - c.mean
        r = float(np.sqrt(max(delta @ c.precision @ delta, 0.0)))
        out = np.zeros((self.d, self.m))
        with np.errstate(over="ignore"):
            ratio = math.exp(min(-logw, 700.0)) * radial_kernel(self.d, r)
            for j in range(self.m):
                out[:, j] = expansion_grad(self.coeffs[i][j].expansion, x)
                out[:, j] += self._radial_coef[i, j] * ratio * delta
        return out

    def eval_many(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return np.stack([self(x) for x in points])

    def column(self, x, j: int) -> np.ndarray:
        return self(x)[:, j]

    def jacobian_fd(self, x, step: Optional[float] = None) -> np.ndarray:
        """Coordinate central differences of K; entry [l, s, k] = dK_ls/dx_k."""
        x = np.asarray(x, dtype=float)
        h = step if step is not None else 1e-4 * (1.0 + float(np.linalg.norm(x)))
        out = np.empty((self.d, self.m, self.d))
        for k in range(self.d):
            xp = x.copy()
            xm = x.copy()
            xp[k] += h
            xm[k] -= h
            out[:, :, k] = (self(xp) - self(xm)) / (2.0 * h)
        return out


def assemble_gain(
    states,
    mixture: Mixture,
    coeffs: Sequence[Sequence[GainCoefficients]],
    hbar=None,
) -> GainField:
    """Wire per-(particle, channel) coefficients into the gain field.

    ``hbar`` defaults to the values already attached to the coefficients;
    pass the particle average of h (Algorithm-style) or the exact mixture
    mean (the average of the constants) explicitly to choose.
    """
    states = np.asarray(states, dtype=float)
    if hbar is None:
        first = coeffs[0]
        if any(c.hbar is None for c in first):
            raise ValueError("hbar not attached to coefficients; pass it explicitly")
        hbar = np.array([c.hbar for c in first])
    hbar = np.atleast_1d(np.asarray(hbar, dtype=float))
    for row in coeffs:
        for j, c in enumerate(row):
            c.hbar = float(hbar[j])
    return GainField(states=states, mixture=mixture, coeffs=coeffs, hbar=hbar)


@dataclass
class LevelReport:
    level: int
    size: int
    invertible: bool
    condition: float


def invertibility_probe(precision, d: int, p: int) -> List[LevelReport]:
    """Factorize every A_q, 1 <= q <= p, reporting success and conditioning.

    Diagonal precisions use the diagonal representation (A_q entries
    sum_l S_ll q_l); dense blocks are materialized only for dense S.
    """
    blocks = build_blocks(precision, np.zeros(d), p)
    reports = []
    for q in range(1, p + 1):
        size = blocks.index_set.level_size(q)
        if blocks.diagonal:
            diag = np.abs(blocks._diag_vector(q))
            cond = float(diag.max() / diag.min()) if diag.min() > 0 else float("inf")
        else:
            cond = float(np.linalg.cond(blocks.a_matrix(q)))
        try:
            blocks.solve_level(q, np.zeros(size))
            ok = True
        except SingularBlock:
            ok = False
        reports.append(LevelReport(level=q, size=size, invertible=ok, condition=cond))
    return reports
