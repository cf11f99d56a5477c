"""Physicists' Hermite polynomials and tensor-product expansions.

Everything here is built on the three-term recurrence

    H_0(x) = 1,   H_1(x) = 2x,   H_{k+1}(x) = 2x H_k(x) - 2k H_{k-1}(x),

its derivative identity H_k'(x) = 2k H_{k-1}(x), and the inverse relation
x H_k = 1/2 H_{k+1} + k H_{k-1} used to convert monomials into the Hermite
basis.  Multivariate polynomials live on the total-degree index set
{k in N^d : |k|_1 <= p} in graded lexicographic order (within a degree,
indices with larger leading entries come first, e.g. (2,0), (1,1), (0,2)).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterator, Optional, Sequence, Tuple

import numpy as np

from ._compat import maybe_njit

MultiIndex = Tuple[int, ...]

__all__ = [
    "MultiIndex",
    "IndexSet",
    "HermiteExpansion",
    "hermite_eval",
    "hermite_values",
    "enumerate_indices",
    "tensor_eval",
    "expansion_eval",
    "expansion_grad",
    "expansion_laplacian",
    "monomial_to_hermite",
]


@maybe_njit(cache=True)
def hermite_eval(k: int, x: float) -> float:
    """H_k(x) by the forward recurrence (stable for the moderate k used here)."""
    if k == 0:
        return 1.0
    h_prev = 1.0
    h = 2.0 * x
    for n in range(1, k):
        h, h_prev = 2.0 * x * h - 2.0 * n * h_prev, h
    return h


def hermite_values(p: int, x) -> np.ndarray:
    """Table of H_0..H_p at ``x`` (scalar or array); shape ``(p+1,) + x.shape``."""
    x = np.asarray(x, dtype=float)
    out = np.empty((p + 1,) + x.shape)
    out[0] = 1.0
    if p >= 1:
        out[1] = 2.0 * x
    for n in range(1, p):
        out[n + 1] = 2.0 * x * out[n] - 2.0 * n * out[n - 1]
    return out


def _level_indices(q: int, d: int) -> Iterator[MultiIndex]:
    # compositions of q into d parts, descending lexicographically
    if d == 1:
        yield (q,)
        return
    for first in range(q, -1, -1):
        for rest in _level_indices(q - first, d - 1):
            yield (first,) + rest


@dataclass(frozen=True)
class IndexSet:
    """Graded-lex ordered multi-indices {k : 0 <= |k|_1 <= p} in dimension d.

    ``offsets[q]:offsets[q+1]`` slices out the degree-q block in O(1).
    Instances are shared and must be treated as read-only.
    """

    d: int
    p: int
    indices: np.ndarray  # (n, d) int64
    offsets: np.ndarray  # (p + 2,) int64
    _positions: Dict[MultiIndex, int] = field(repr=False, default_factory=dict)

    def __len__(self) -> int:
        return self.indices.shape[0]

    def __iter__(self) -> Iterator[MultiIndex]:
        return (tuple(int(v) for v in row) for row in self.indices)

    def position(self, k: MultiIndex) -> int:
        return self._positions[tuple(k)]

    def __contains__(self, k) -> bool:
        return tuple(k) in self._positions

    def level_slice(self, q: int) -> slice:
        return slice(int(self.offsets[q]), int(self.offsets[q + 1]))

    def level_size(self, q: int) -> int:
        return int(self.offsets[q + 1] - self.offsets[q])


@lru_cache(maxsize=128)
def enumerate_indices(d: int, p: int) -> IndexSet:
    """Build the index set; cardinality is C(d+p, p)."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if p < 0:
        raise ValueError(f"max degree must be >= 0, got {p}")
    rows = []
    offsets = np.zeros(p + 2, dtype=np.int64)
    for q in range(p + 1):
        rows.extend(_level_indices(q, d))
        offsets[q + 1] = len(rows)
    indices = np.array(rows, dtype=np.int64).reshape(len(rows), d)
    positions = {k: i for i, k in enumerate(rows)}
    assert len(rows) == math.comb(d + p, p)
    return IndexSet(d=d, p=p, indices=indices, offsets=offsets, _positions=positions)


def tensor_eval(k: Sequence[int], x: Sequence[float]) -> float:
    """H_k(x) = prod_l H_{k_l}(x_l)."""
    if len(k) != len(x):
        raise ValueError(f"index has length {len(k)} but point has length {len(x)}")
    out = 1.0
    for kl, xl in zip(k, x):
        if kl:
            out *= hermite_eval(int(kl), float(xl))
    return out


@dataclass
class HermiteExpansion:
    """Sparse map multi-index -> coefficient over the degree-<=p basis.

    The dense vector view (``to_dense``) follows the graded-lex ordering of
    ``enumerate_indices(d, p)``; structurally-zero entries stay absent from
    ``coeffs`` so fast paths can skip them.
    """

    d: int
    p: int
    coeffs: Dict[MultiIndex, float]

    def __post_init__(self):
        clean: Dict[MultiIndex, float] = {}
        for k, c in self.coeffs.items():
            k = tuple(int(v) for v in k)
            if len(k) != self.d:
                raise ValueError(f"index {k} does not have dimension {self.d}")
            if any(v < 0 for v in k):
                raise ValueError(f"negative entry in index {k}")
            if sum(k) > self.p:
                raise ValueError(f"index {k} exceeds max degree {self.p}")
            clean[k] = float(c)
        self.coeffs = clean

    @property
    def index_set(self) -> IndexSet:
        return enumerate_indices(self.d, self.p)

    def terms(self) -> Iterator[Tuple[MultiIndex, float]]:
        return ((k, c) for k, c in self.coeffs.items() if c != 0.0)

    def to_dense(self, index_set: Optional[IndexSet] = None) -> np.ndarray:
        iset = index_set if index_set is not None else self.index_set
        out = np.zeros(len(iset))
        for k, c in self.coeffs.items():
            out[iset.position(k)] = c
        return out

    @classmethod
    def from_dense(cls, index_set: IndexSet, values: np.ndarray) -> "HermiteExpansion":
        coeffs = {
            tuple(int(v) for v in index_set.indices[i]): float(values[i])
            for i in np.nonzero(values)[0]
        }
        return cls(d=index_set.d, p=index_set.p, coeffs=coeffs)

    def degree(self) -> int:
        return max((sum(k) for k, c in self.terms()), default=0)

    def single_coordinate_support(self) -> Optional[int]:
        """Coordinate c if every non-constant term involves only x_c, else None."""
        coord = None
        for k, _ in self.terms():
            active = [l for l, v in enumerate(k) if v > 0]
            if not active:
                continue
            if len(active) > 1:
                return None
            if coord is None:
                coord = active[0]
            elif coord != active[0]:
                return None
        return coord if coord is not None else 0

    def univariate_coeffs(self, coord: int) -> np.ndarray:
        """Coefficients a_0..a_p of the 1-d series in x_coord (support must allow it)."""
        out = np.zeros(self.p + 1)
        for k, c in self.terms():
            out[k[coord]] += c
        return out


def expansion_eval(e: HermiteExpansion, x: Sequence[float]) -> float:
    """sum_k coeff(k) H_k(x)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (e.d,):
        raise ValueError(f"point has shape {x.shape}, expected ({e.d},)")
    table = hermite_values(e.p, x)  # (p+1, d)
    total = 0.0
    for k, c in e.terms():
        prod = c
        for l, kl in enumerate(k):
            if kl:
                prod *= table[kl, l]
        total += prod
    return total


def expansion_grad(e: HermiteExpansion, x: Sequence[float]) -> np.ndarray:
    """Gradient; component l is sum_k coeff(k) 2 k_l H_{k - e_l}(x)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (e.d,):
        raise ValueError(f"point has shape {x.shape}, expected ({e.d},)")
    table = hermite_values(e.p, x)
    out = np.zeros(e.d)
    for k, c in e.terms():
        parts = [table[kl, l] if kl else 1.0 for l, kl in enumerate(k)]
        full = c * float(np.prod(parts))
        for l, kl in enumerate(k):
            if kl == 0:
                continue
            # replace factor H_{k_l} by 2 k_l H_{k_l - 1}
            out[l] += full / parts[l] * 2.0 * kl * table[kl - 1, l]
    return out


def expansion_laplacian(e: HermiteExpansion, x: Sequence[float]) -> float:
    """sum_l d^2/dx_l^2 of the expansion, via H_k'' = 4 k (k-1) H_{k-2}."""
    x = np.asarray(x, dtype=float)
    if x.shape != (e.d,):
        raise ValueError(f"point has shape {x.shape}, expected ({e.d},)")
    table = hermite_values(e.p, x)
    total = 0.0
    for k, c in e.terms():
        parts = [table[kl, l] if kl else 1.0 for l, kl in enumerate(k)]
        full = c * float(np.prod(parts))
        for l, kl in enumerate(k):
            if kl < 2:
                continue
            total += full / parts[l] * 4.0 * kl * (kl - 1) * table[kl - 2, l]
    return total


@lru_cache(maxsize=64)
def _monomial_table(n: int) -> tuple:
    """Hermite coefficients of x^n: x^n = sum_k t[k] H_k(x).

    Built by repeated application of x H_k = 1/2 H_{k+1} + k H_{k-1}; all
    values are dyadic rationals, hence exact in binary floating point.
    """
    coeffs = [1.0]
    for _ in range(n):
        nxt = [0.0] * (len(coeffs) + 1)
        for k, c in enumerate(coeffs):
            if c == 0.0:
                continue
            nxt[k + 1] += 0.5 * c
            if k >= 1:
                nxt[k - 1] += k * c
        coeffs = nxt
    return tuple(coeffs)


def monomial_to_hermite(
    poly: Dict[MultiIndex, float], d: int, p: int
) -> HermiteExpansion:
    """Convert sum_alpha poly[alpha] x^alpha into the Hermite basis, exactly."""
    coeffs: Dict[MultiIndex, float] = {}
    for alpha, c in poly.items():
        alpha = tuple(int(v) for v in alpha)
        if len(alpha) != d:
            raise ValueError(f"exponent {alpha} does not have dimension {d}")
        if any(v < 0 for v in alpha):
            raise ValueError(f"negative exponent in {alpha}")
        if sum(alpha) > p:
            raise ValueError(f"monomial {alpha} has degree {sum(alpha)} > p = {p}")
        if c == 0.0:
            continue
        per_coord = []
        for a in alpha:
            tab = _monomial_table(a)
            per_coord.append([(k, t) for k, t in enumerate(tab) if t != 0.0])
        for combo in itertools.product(*per_coord):
            k = tuple(kl for kl, _ in combo)
            w = c
            for _, t in combo:
                w *= t
            coeffs[k] = coeffs.get(k, 0.0) + w
    coeffs = {k: v for k, v in coeffs.items() if v != 0.0}
    return HermiteExpansion(d=d, p=p, coeffs=coeffs)
