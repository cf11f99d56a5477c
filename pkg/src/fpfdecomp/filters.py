"""Time-stepping estimators: FPF (pluggable gain), EKF, bootstrap PF.

All three run off the same Euler-Maruyama discretization and the same
simulated truth/observation stream.  The FPF step follows

    X_i <- X_i + g(X_i) dt + sigma(X_i) sqrt(dt) xi_i
               + K(X_i) [dZ - (h(X_i) + hbar) dt / 2] / r_scale
               + Omega(X_i) dt,

with hbar the shared per-step observation mean, Omega the Wong-Zakai
correction (finite differences of the gain field, or zero), and r_scale
the innovation scaling for non-unit observation noise ("scaled": R^2 for
increment observations, R^2 dt for discrete ones folded into increment
form; "literal": 1).

Randomness is counter-based: every (seed, trial, stream) triple owns a
Philox generator, so trial-level parallelism cannot reorder draws.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence

import numpy as np

from . import _kernels
from .baselines import KernelGainConfig, constant_gain, kernel_gain, median_bandwidth
from .gain import (
    GainCoefficients,
    GainField,
    SingularBlock,
    assemble_gain,
    backward_recursion,
    build_blocks,
)
from .hermite import HermiteExpansion, expansion_eval, expansion_grad
from .metrics import RunRecord
from .mixture import GaussianComponent, Mixture

__all__ = [
    "IntegrationDiverged",
    "InnovationCovarianceSingular",
    "SdeModel",
    "Ensemble",
    "EkfState",
    "PfState",
    "FilterRunConfig",
    "euler_step",
    "control_u",
    "fpf_step",
    "ekf_step",
    "pf_step",
    "run_filter",
    "simulate_truth",
    "make_rng",
    "DecompositionGain",
    "ConstantGain",
    "KernelGain",
    "FPF_METHODS",
    "ALL_METHODS",
]

FPF_METHODS = ("fpf_decomp", "fpf_const", "fpf_kernel")
ALL_METHODS = FPF_METHODS + ("ekf", "pf")

_STREAM_IDS = {"truth": 0, "fpf_decomp": 1, "fpf_const": 2, "fpf_kernel": 3, "ekf": 4, "pf": 5}


class IntegrationDiverged(RuntimeError):
    """A state or particle became non-finite during time stepping."""


class InnovationCovarianceSingular(RuntimeError):
    """EKF innovation covariance could not be inverted."""


def make_rng(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class SdeModel:
    """Diffusion-with-observations model dX = g dt + sigma dB, plus a
    polynomial observation h given as Hermite expansions per channel."""

    name: str
    d: int
    m: int
    drift: Callable[[np.ndarray], np.ndarray]
    h: Sequence[HermiteExpansion]
    R: float = 1.0
    obs_kind: str = "increment"  # or "discrete"
    diffusion: Optional[Callable[[np.ndarray], np.ndarray]] = None
    diffusion_scale: float = 1.0
    drift_jac: Optional[Callable[[np.ndarray], np.ndarray]] = None
    drift_vec: Optional[Callable[[np.ndarray], np.ndarray]] = None
    sigma_apply_vec: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    h_eval_vec: Optional[Callable[[np.ndarray], np.ndarray]] = None
    x0: Optional[np.ndarray] = None
    analytic_gain: Optional[Callable[[np.ndarray], np.ndarray]] = None
    state_floor: Optional[Sequence] = None  # (coord, floor) clamps, e.g. ship radius
    state_bound: Optional[float] = None  # clamp |x_l| <= bound (stiff-drift guard)

    def drift_at(self, states: np.ndarray) -> np.ndarray:
        if self.drift_vec is not None:
            return self.drift_vec(states)
        return np.stack([self.drift(x) for x in states])

    def sigma_apply(self, states: np.ndarray, noise: np.ndarray) -> np.ndarray:
        if self.sigma_apply_vec is not None:
            return self.sigma_apply_vec(states, noise)
        if self.diffusion is None:
            return self.diffusion_scale * noise
        return np.stack([self.diffusion(x) @ w for x, w in zip(states, noise)])

    def h_at(self, states: np.ndarray) -> np.ndarray:
        if self.h_eval_vec is not None:
            return self.h_eval_vec(states)
        return np.array([[expansion_eval(hj, x) for hj in self.h] for x in states])

    def h_jacobian(self, x: np.ndarray) -> np.ndarray:
        return np.stack([expansion_grad(hj, x) for hj in self.h])

    def apply_floor(self, states: np.ndarray) -> List[str]:
        flags = []
        if self.state_floor is not None:
            coord, floor = self.state_floor
            below = states[..., coord] < floor
            if np.any(below):
                states[..., coord] = np.maximum(states[..., coord], floor)
                flags.append(f"floor_clamped_{coord}")
        if self.state_bound is not None:
            outside = np.abs(states) > self.state_bound
            if np.any(outside):
                np.clip(states, -self.state_bound, self.state_bound, out=states)
                flags.append("state_bound_clamped")
        return flags


@dataclass
class Ensemble:
    """N_p particle states sharing one diagonal mixture covariance."""

    states: np.ndarray  # (N_p, d)
    eps: np.ndarray  # (d,)

    def __post_init__(self):
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        self.eps = np.broadcast_to(
            np.asarray(self.eps, dtype=float), (self.states.shape[1],)
        ).copy()

    @property
    def n_particles(self) -> int:
        return self.states.shape[0]

    @property
    def d(self) -> int:
        return self.states.shape[1]

    def mixture(self) -> Mixture:
        return Mixture(
            [GaussianComponent.from_diagonal(x, self.eps) for x in self.states]
        )


@dataclass
class EkfState:
    t: float
    mean: np.ndarray
    cov: np.ndarray


@dataclass
class PfState:
    t: float
    states: np.ndarray
    weights: np.ndarray
    flags: List[str] = field(default_factory=list)


@dataclass
class FilterRunConfig:
    T: float
    dt: float
    n_particles: int = 50
    eps: object = 0.01  # mixture covariance diagonal (scalar or (d,))
    eps_mode: str = "fixed"  # "fixed" | "silverman" (per-step rule eps ~ N^(-2/(d+4)) var)
    omega: str = "fd"  # "fd" | "zero"
    obs_mean: str = "particle"  # "particle" | "mixture"
    innovation: str = "scaled"  # "scaled" | "literal"
    transport: str = "multivariate"  # "multivariate" | "percoord"
    kernel_bandwidth: object = 0.1  # float or "median"
    kernel_iters: int = 100
    x0: Optional[np.ndarray] = None
    init_cov: object = None  # defaults to eps
    force_generic: bool = False
    resample_fraction: float = 0.5
    silverman_floor: float = 1e-8
    # per-step gain-update limiter, in units of max(ensemble std, sqrt(eps))
    # per coordinate; the exact gain is unbounded across density gaps and a
    # clipped Euler step is the standard guard.  None disables.
    update_clip: Optional[float] = 3.0

    def eps_vector(self, d: int) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.eps, dtype=float), (d,)).copy()

    def init_cov_vector(self, d: int) -> np.ndarray:
        src = self.eps if self.init_cov is None else self.init_cov
        return np.broadcast_to(np.asarray(src, dtype=float), (d,)).copy()


def silverman_eps(states: np.ndarray, floor: float = 1e-8) -> np.ndarray:
    """Kernel-width rule eps_l = (4 / ((d+2) N))^(2/(d+4)) var_l(states)."""
    n, d = states.shape
    factor = (4.0 / (n * (d + 2.0))) ** (2.0 / (d + 4.0))
    return np.maximum(factor * states.var(axis=0), floor)


# ---------------------------------------------------------------------------
# primitive steps


def euler_step(model: SdeModel, x, dt: float, dB) -> np.ndarray:
    """x + g(x) dt + sigma(x) dB, with dB the Brownian increment."""
    x = np.asarray(x, dtype=float)
    dB = np.asarray(dB, dtype=float)
    if model.diffusion is None:
        noise = model.diffusion_scale * dB
    else:
        noise = model.diffusion(x) @ dB
    out = x + model.drift(x) * dt + noise
    if not np.all(np.isfinite(out)):
        raise IntegrationDiverged(f"non-finite state after Euler step: {out}")
    return out


def control_u(K: np.ndarray, Kgrad: np.ndarray, h_at_x: np.ndarray, hbar: np.ndarray) -> np.ndarray:
    """u = -K (h + hbar)/2 + Omega with Omega_l = sum_ks K_ks dK_ls/dx_k / 2.

    ``Kgrad[l, s, k]`` holds dK_ls/dx_k.
    """
    K = np.atleast_2d(np.asarray(K, dtype=float))
    h_at_x = np.atleast_1d(np.asarray(h_at_x, dtype=float))
    hbar = np.atleast_1d(np.asarray(hbar, dtype=float))
    omega = 0.5 * np.einsum("ks,lsk->l", K, np.asarray(Kgrad, dtype=float))
    return -0.5 * K @ (h_at_x + hbar) + omega


# ---------------------------------------------------------------------------
# gain providers


@dataclass
class _PackedGains:
    Xp: np.ndarray
    eps: np.ndarray
    ktilde: np.ndarray
    chan_coord: np.ndarray
    C: np.ndarray
    hbar: np.ndarray
    transport: str = "multivariate"  # or "percoord": 1-d mixtures per channel

    def apply(self, queries: np.ndarray, V: np.ndarray) -> np.ndarray:
        if self.transport == "percoord":
            return _kernels.gain_apply_percoord1d(
                queries, self.Xp, self.eps, self.ktilde, self.chan_coord, self.C, self.hbar, V
            )
        return _kernels.gain_apply_percoord(
            queries, self.Xp, self.eps, self.ktilde, self.chan_coord, self.C, self.hbar, V
        )

    def full(self, queries: np.ndarray) -> np.ndarray:
        if self.transport == "percoord":
            return _kernels.gain_full_percoord1d(
                queries, self.Xp, self.eps, self.ktilde, self.chan_coord, self.C, self.hbar
            )
        return _kernels.gain_full_percoord(
            queries, self.Xp, self.eps, self.ktilde, self.chan_coord, self.C, self.hbar
        )

    def supports_field_fd(self) -> bool:
        return True


@dataclass
class _FieldGains:
    field: GainField
    C: np.ndarray

    @property
    def hbar(self):
        return self.field.hbar

    def apply(self, queries: np.ndarray, V: np.ndarray) -> np.ndarray:
        return np.stack([self.field(x) @ v for x, v in zip(queries, V)])

    def full(self, queries: np.ndarray) -> np.ndarray:
        return self.field.eval_many(queries)

    def supports_field_fd(self) -> bool:
        return True


@dataclass
class _MatrixGains:
    gains: np.ndarray  # (N, d, m), valid at the particles only
    hbar: np.ndarray

    def apply(self, queries: np.ndarray, V: np.ndarray) -> np.ndarray:
        return np.einsum("nls,ns->nl", self.gains, V)

    def full(self, queries: np.ndarray) -> np.ndarray:
        return self.gains

    def supports_field_fd(self) -> bool:
        return False


class DecompositionGain:
    """Backward-recursion gain.

    Coefficient solves take the per-coordinate fast path when every channel
    is supported on one coordinate and the covariance is shared diagonal
    (the general dense-level solver otherwise, or when forced for timing).

    ``transport`` selects the assembly: "multivariate" is the d-dimensional
    mixture field (density-weighted gradients plus the incomplete-gamma
    radial sum); "percoord" assembles each single-coordinate channel as the
    scalar mixture gain on that coordinate (the decoupled construction,
    whose 1-d erf transport does not decay when particles separate).  The
    two agree for d = 1 and share all coefficients; off d = 1 their
    cross-particle transports differ.
    """

    def __init__(
        self,
        model: SdeModel,
        eps: np.ndarray,
        force_generic: bool = False,
        transport: str = "multivariate",
    ):
        self.model = model
        self.eps = np.asarray(eps, dtype=float)
        self.force_generic = force_generic
        if transport not in ("multivariate", "percoord"):
            raise ValueError(f"unknown transport {transport!r}")
        self.transport = transport
        self.solve_seconds = 0.0  # accumulated coefficient-build wall time
        self.p = max(hj.degree() for hj in model.h)
        coords = [hj.single_coordinate_support() for hj in model.h]
        self.percoord = all(c is not None for c in coords)
        if self.percoord:
            self.chan_coord = np.array([int(c) for c in coords], dtype=np.int64)
            self.a_chan = np.stack(
                [hj.univariate_coeffs(int(c)) for hj, c in zip(model.h, coords)]
            )
            self.eps_chan = self.eps[self.chan_coord]
        if force_generic:
            if not self.percoord:
                raise ValueError("generic dense path is set up for per-coordinate channels")
            from .hermite import enumerate_indices

            self.index_set = enumerate_indices(model.d, self.p)
            self.up1, self.up2 = _kernels.build_level_maps(self.index_set)
            self.a_dense = np.stack([hj.to_dense(self.index_set) for hj in model.h])
            spos = np.zeros((model.m, self.p), dtype=np.int64)
            for s in range(model.m):
                c = int(self.chan_coord[s])
                for q in range(1, self.p + 1):
                    k = [0] * model.d
                    k[c] = q
                    spos[s, q - 1] = self.index_set.position(tuple(k))
            self.spos = spos
        self._blocks = None  # lazy, generic non-diagonal path

    def prepare(self, states: np.ndarray, h_at: np.ndarray, obs_mean: str, eps=None):
        states = np.ascontiguousarray(states, dtype=float)
        eps = self.eps if eps is None else np.asarray(eps, dtype=float)
        t0 = time.perf_counter()
        if self.force_generic:
            ktilde, C = _kernels.solve_generic_diag(
                states,
                1.0 / eps,
                self.a_dense,
                self.index_set.indices,
                self.index_set.offsets,
                self.up1,
                self.up2,
                self.spos,
            )
        elif self.percoord:
            ktilde, C = _kernels.solve_percoord(
                states, eps[self.chan_coord], self.a_chan, self.chan_coord, self.p
            )
        else:
            out = self._prepare_generic_field(states, h_at, obs_mean, eps)
            self.solve_seconds += time.perf_counter() - t0
            return out
        self.solve_seconds += time.perf_counter() - t0
        hbar = C.mean(axis=0) if obs_mean == "mixture" else h_at.mean(axis=0)
        return _PackedGains(
            Xp=states,
            eps=eps,
            ktilde=ktilde,
            chan_coord=self.chan_coord,
            C=C,
            hbar=np.ascontiguousarray(hbar, dtype=float),
            transport=self.transport,
        )

    def _prepare_generic_field(self, states, h_at, obs_mean, eps):
        precision = np.diag(1.0 / eps)
        if self._blocks is None or not np.allclose(np.diag(self._blocks.precision), 1.0 / eps):
            self._blocks = build_blocks(precision, np.zeros(self.model.d), self.p)
        coeffs = []
        for x in states:
            coeffs.append([backward_recursion(self._blocks, hj, x) for hj in self.model.h])
        C = np.array([[c.constant for c in row] for row in coeffs])
        hbar = C.mean(axis=0) if obs_mean == "mixture" else h_at.mean(axis=0)
        mixture = Mixture([GaussianComponent.from_diagonal(x, eps) for x in states])
        return _FieldGains(field=assemble_gain(states, mixture, coeffs, hbar), C=C)


class ConstantGain:
    """Particle-averaged gain K = mean_i X_i (h(X_i) - hbar)^T, one matrix."""

    def __init__(self, model: SdeModel, eps=None, **_):
        self.model = model

    def prepare(self, states: np.ndarray, h_at: np.ndarray, obs_mean: str, eps=None):
        hbar = h_at.mean(axis=0)
        K = constant_gain(states, h_at, hbar)
        gains = np.broadcast_to(K, (states.shape[0],) + K.shape)
        return _MatrixGains(gains=np.ascontiguousarray(gains), hbar=hbar)


class KernelGain:
    """Semigroup fixed-point gain on a bi-normalized Gaussian kernel.

    ``bandwidth`` may be the string "median" to recompute the heuristic
    4 med^2 / log N on the current ensemble every step.
    """

    def __init__(self, model: SdeModel, eps=None, bandwidth=0.1, iters: int = 100):
        self.model = model
        self.median_rule = isinstance(bandwidth, str)
        if self.median_rule and bandwidth != "median":
            raise ValueError(f"unknown bandwidth rule {bandwidth!r}")
        self.bandwidth = None if self.median_rule else float(bandwidth)
        self.iters = int(iters)

    def prepare(self, states: np.ndarray, h_at: np.ndarray, obs_mean: str, eps=None):
        hbar = h_at.mean(axis=0)
        bw = median_bandwidth(states) if self.median_rule else self.bandwidth
        gains = kernel_gain(states, h_at, hbar, KernelGainConfig(bandwidth=bw, iterations=self.iters))
        return _MatrixGains(gains=gains, hbar=hbar)


_PROVIDERS = {
    "decomposition": DecompositionGain,
    "constant": ConstantGain,
    "kernel": KernelGain,
    "fpf_decomp": DecompositionGain,
    "fpf_const": ConstantGain,
    "fpf_kernel": KernelGain,
}


def _omega_fd_cols(pack, states: np.ndarray, K_full: np.ndarray) -> np.ndarray:
    """Per-column Wong-Zakai contractions by central differences taken along
    each gain column; out[:, :, s] = (grad K_s) K_s / 2."""
    n, d, m = K_full.shape
    omega = np.zeros((n, d, m))
    steps = 1e-4 * (1.0 + np.linalg.norm(states, axis=1))
    for s in range(m):
        direction = K_full[:, :, s]
        norms = np.linalg.norm(direction, axis=1)
        ok = norms > 0.0
        if not np.any(ok):
            continue
        unit = np.zeros_like(direction)
        unit[ok] = direction[ok] / norms[ok, None]
        hs = steps[:, None] * unit
        plus = pack.full(states + hs)[:, :, s]
        minus = pack.full(states - hs)[:, :, s]
        deriv = (plus - minus) / (2.0 * steps[:, None])
        omega[:, :, s] = 0.5 * deriv * norms[:, None]
    return omega


def _innovation_scale(model: SdeModel, dt: float, mode: str) -> float:
    """Innovation denominator for the gain application.

    "literal" is the algorithm as printed: K dZ with no scaling.  "scaled"
    divides by R^2 for increment observations (the unit-observation-noise
    normalization the gain equation assumes).  A discrete observation
    converted to increment form (dZ = Z_k dt) is instead applied once per
    measurement, X += K (Z_k - (h + hbar)/2), i.e. the denominator is dt;
    dividing such an update by R^2 as well makes the per-step gain exceed
    the discrete stability bound whenever the mixture width is comparable
    to R^2, and rings.
    """
    if mode == "literal":
        return 1.0
    if model.obs_kind == "discrete":
        return dt
    return model.R**2


def fpf_step(
    ensemble: Ensemble,
    model: SdeModel,
    gain_provider,
    dZ: np.ndarray,
    dt: float,
    rng: np.random.Generator,
    omega: str = "fd",
    obs_mean: str = "particle",
    innovation: str = "scaled",
    update_clip: Optional[float] = 5.0,
) -> Ensemble:
    """One FPF step; hbar is computed once and shared across particles."""
    if isinstance(gain_provider, str):
        gain_provider = _PROVIDERS[gain_provider](model, ensemble.eps)
    states = ensemble.states
    h_at = model.h_at(states)
    pack = gain_provider.prepare(states, h_at, obs_mean, eps=ensemble.eps)
    dZ = np.atleast_1d(np.asarray(dZ, dtype=float))
    r_scale = _innovation_scale(model, dt, innovation)
    V = (dZ[None, :] - 0.5 * (h_at + pack.hbar[None, :]) * dt) / r_scale
    update = pack.apply(states, V)
    # the Wong-Zakai term corrects the Stratonovich integral against a
    # continuous observation; a discrete measurement map carries none
    if omega == "fd" and model.obs_kind == "increment" and pack.supports_field_fd():
        K_full = pack.full(states)
        update = update + _omega_fd_cols(pack, states, K_full).sum(axis=2) * dt / r_scale**2
    flags: List[str] = []
    if update_clip is not None:
        # the exact gain is unbounded across density gaps; bound one step's
        # feedback per coordinate so explicit Euler cannot be catapulted.
        # The reference scale is the (outlier-immune) MAD of the ensemble.
        med = np.median(states, axis=0)
        mad = 1.4826 * np.median(np.abs(states - med[None, :]), axis=0)
        lim = update_clip * np.maximum(mad, np.sqrt(ensemble.eps))
        clipped = np.clip(update, -lim[None, :], lim[None, :])
        if not np.array_equal(clipped, update):
            flags.append("update_clipped")
        update = clipped
    noise = model.sigma_apply(states, np.sqrt(dt) * rng.standard_normal(states.shape))
    new_states = states + model.drift_at(states) * dt + noise + update
    flags.extend(model.apply_floor(new_states))
    if not np.all(np.isfinite(new_states)):
        raise IntegrationDiverged("non-finite particle after FPF step")
    out = Ensemble(states=new_states, eps=ensemble.eps)
    out.flags = flags  # type: ignore[attr-defined]
    return out


def ekf_step(state: EkfState, model: SdeModel, z_obs: np.ndarray, dt: float) -> EkfState:
    """Euler prediction of mean/covariance plus a discrete-style update.

    Increment observations supply y = dZ/dt with noise R^2/dt; discrete
    ones supply y = Z with noise R^2.
    """
    x, P = state.mean, state.cov
    A = model.drift_jac(x) if model.drift_jac is not None else _fd_jac(model.drift, x)
    if model.diffusion is None:
        Qc = model.diffusion_scale**2 * np.eye(model.d)
    else:
        S = model.diffusion(x)
        Qc = S @ S.T
    x = x + model.drift(x) * dt
    P = P + (A @ P + P @ A.T + Qc) * dt
    z_obs = np.atleast_1d(np.asarray(z_obs, dtype=float))
    if model.obs_kind == "discrete":
        y = z_obs
        r_var = model.R**2
    else:
        y = z_obs / dt
        r_var = model.R**2 / dt
    H = model.h_jacobian(x)
    hx = model.h_at(x[None, :])[0]
    S_inn = H @ P @ H.T + r_var * np.eye(model.m)
    PHt = P @ H.T
    try:
        K = np.linalg.solve(S_inn.T, PHt.T).T
    except np.linalg.LinAlgError:
        if np.allclose(PHt, 0.0):
            K = np.zeros_like(PHt)
        else:
            raise InnovationCovarianceSingular(
                f"innovation covariance singular at t={state.t:g}"
            ) from None
    x = x + K @ (y - hx)
    P = (np.eye(model.d) - K @ H) @ P
    P = 0.5 * (P + P.T)
    w = np.linalg.eigvalsh(P)
    if w.min() < 0.0:
        wv, Q = np.linalg.eigh(P)
        P = (Q * np.clip(wv, 0.0, None)) @ Q.T
    return EkfState(t=state.t + dt, mean=x, cov=P)


def _fd_jac(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    cols = []
    for k in range(x.shape[0]):
        xp, xm = x.copy(), x.copy()
        xp[k] += h
        xm[k] -= h
        cols.append((np.asarray(f(xp)) - np.asarray(f(xm))) / (2 * h))
    return np.stack(cols, axis=1)


def effective_sample_size(weights: np.ndarray) -> float:
    return 1.0 / float(np.sum(weights**2))


def systematic_resample(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = weights.shape[0]
    positions = (rng.random() + np.arange(n)) / n
    return np.searchsorted(np.cumsum(weights), positions)


def pf_step(
    state: PfState,
    model: SdeModel,
    z_obs: np.ndarray,
    dt: float,
    rng: np.random.Generator,
    resample_fraction: float = 0.5,
) -> PfState:
    """Bootstrap step: propagate, reweight by the observation likelihood,
    systematic resampling when ESS drops below resample_fraction * N_p."""
    states = state.states
    n = states.shape[0]
    noise = model.sigma_apply(states, np.sqrt(dt) * rng.standard_normal(states.shape))
    states = states + model.drift_at(states) * dt + noise
    model.apply_floor(states)
    if not np.all(np.isfinite(states)):
        raise IntegrationDiverged("non-finite particle after PF propagation")
    z_obs = np.atleast_1d(np.asarray(z_obs, dtype=float))
    h_at = model.h_at(states)
    if model.obs_kind == "discrete":
        resid = z_obs[None, :] - h_at
        loglik = -0.5 * np.sum(resid**2, axis=1) / model.R**2
    else:
        resid = z_obs[None, :] - h_at * dt
        loglik = -0.5 * np.sum(resid**2, axis=1) / (model.R**2 * dt)
    logw = np.log(np.maximum(state.weights, 1e-300)) + loglik
    logw -= logw.max()
    weights = np.exp(logw)
    total = weights.sum()
    flags = list(state.flags)
    if not np.isfinite(total) or total <= 0.0:
        weights = np.full(n, 1.0 / n)
        flags.append("weights_reset")
    else:
        weights = weights / total
    if effective_sample_size(weights) < resample_fraction * n:
        idx = systematic_resample(weights, rng)
        states = states[idx]
        weights = np.full(n, 1.0 / n)
    return PfState(t=state.t + dt, states=states, weights=weights, flags=flags)


# ---------------------------------------------------------------------------
# shared truth / observation simulation and the run harness


def simulate_truth(model: SdeModel, n_steps: int, dt: float, x0, rng: np.random.Generator):
    """Truth path plus the per-step observation records.

    Increment observations: obs[k] = h(X_k) dt + R sqrt(dt) xi.
    Discrete observations:  obs[k] = h(X_{k+1}) + R xi (measured at the
    end of step k).
    """
    x = np.asarray(x0, dtype=float).copy()
    truth = np.empty((n_steps + 1, model.d))
    obs = np.empty((n_steps, model.m))
    truth[0] = x
    for k in range(n_steps):
        if model.obs_kind == "increment":
            hx = model.h_at(x[None, :])[0]
            obs[k] = hx * dt + model.R * np.sqrt(dt) * rng.standard_normal(model.m)
        x = euler_step(model, x, dt, np.sqrt(dt) * rng.standard_normal(model.d))
        model.apply_floor(x[None, :])
        truth[k + 1] = x
        if model.obs_kind == "discrete":
            obs[k] = model.h_at(x[None, :])[0] + model.R * rng.standard_normal(model.m)
    return truth, obs


def _fpf_dz(model: SdeModel, obs_k: np.ndarray, dt: float) -> np.ndarray:
    if model.obs_kind == "discrete":
        return obs_k * dt
    return obs_k


def run_filter(
    model: SdeModel,
    method: str,
    config: FilterRunConfig,
    rng_seed: int,
    trial: int = 0,
    truth_obs=None,
) -> RunRecord:
    """Run one filter over one simulated truth; deterministic given the seed.

    The truth/observation stream comes from the (seed, trial, "truth")
    generator so every method sees identical data on matched seeds; pass
    ``truth_obs=(truth, obs)`` to share one simulation across methods.
    """
    if method not in ALL_METHODS:
        raise ValueError(f"unknown method {method!r}")
    d = model.d
    n_steps = int(round(config.T / config.dt))
    dt = config.dt
    x0 = np.asarray(config.x0 if config.x0 is not None else model.x0, dtype=float)
    if truth_obs is None:
        truth, obs = simulate_truth(
            model, n_steps, dt, x0, make_rng(rng_seed, trial, _STREAM_IDS["truth"])
        )
    else:
        truth, obs = truth_obs
    rng = make_rng(rng_seed, trial, _STREAM_IDS[method])
    eps = config.eps_vector(d)
    init_cov = config.init_cov_vector(d)
    estimates = np.empty((n_steps + 1, d))
    flags: List[str] = []
    t0 = time.perf_counter()
    if method == "ekf":
        state = EkfState(t=0.0, mean=x0.copy(), cov=np.diag(init_cov))
        estimates[0] = state.mean
        for k in range(n_steps):
            state = ekf_step(state, model, obs[k], dt)
            estimates[k + 1] = state.mean
    elif method == "pf":
        states = x0[None, :] + rng.standard_normal((config.n_particles, d)) * np.sqrt(init_cov)
        pstate = PfState(t=0.0, states=states, weights=np.full(config.n_particles, 1.0 / config.n_particles))
        estimates[0] = pstate.weights @ pstate.states
        for k in range(n_steps):
            pstate = pf_step(pstate, model, obs[k], dt, rng, config.resample_fraction)
            estimates[k + 1] = pstate.weights @ pstate.states
        flags = pstate.flags
    else:
        provider_cls = _PROVIDERS[method]
        if provider_cls is DecompositionGain:
            provider = DecompositionGain(
                model, eps, force_generic=config.force_generic, transport=config.transport
            )
        elif provider_cls is KernelGain:
            provider = KernelGain(model, eps, bandwidth=config.kernel_bandwidth, iters=config.kernel_iters)
        else:
            provider = ConstantGain(model, eps)
        states = x0[None, :] + rng.standard_normal((config.n_particles, d)) * np.sqrt(init_cov)
        ens = Ensemble(states=states, eps=eps)
        estimates[0] = ens.states.mean(axis=0)
        for k in range(n_steps):
            if config.eps_mode == "silverman":
                ens.eps = silverman_eps(ens.states, config.silverman_floor)
            ens = fpf_step(
                ens,
                model,
                provider,
                _fpf_dz(model, obs[k], dt),
                dt,
                rng,
                omega=config.omega,
                obs_mean=config.obs_mean,
                innovation=config.innovation,
                update_clip=config.update_clip,
            )
            step_flags = getattr(ens, "flags", [])
            for f in step_flags:
                if f not in flags:
                    flags.append(f)
            estimates[k + 1] = ens.states.mean(axis=0)
    cpu_s = time.perf_counter() - t0
    times = dt * np.arange(n_steps + 1)
    gain_build_s = 0.0
    if method == "fpf_decomp":
        gain_build_s = getattr(provider, "solve_seconds", 0.0)
    return RunRecord(
        scenario=model.name,
        method=method,
        seed=int(rng_seed),
        trial=int(trial),
        times=times,
        truth=truth,
        estimate=estimates,
        cpu_s=cpu_s,
        flags=flags,
        n_particles=config.n_particles if method != "ekf" else 0,
        gain_build_s=gain_build_s,
    )
