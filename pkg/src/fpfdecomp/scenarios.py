"""Benchmark problems as model builders with their stock parameter sets.

Four scenarios:

* ``static_gain_mixture`` — a fixed two-Gaussian mixture in R^2 with a
  quadratic scalar observation whose exact gain is known in closed form;
  used for gain-approximation comparisons, not filtering.
* ``cubic_sensor_d`` — d decoupled double-well diffusions observed through
  per-coordinate cubes, the dimension-scaling workhorse.
* ``ship_polar`` — planar ship tracking in polar coordinates (angle drift
  is exactly 1; the radius carries the restoring force), discrete angular
  measurements.
* ``lorenz63`` — the chaotic Lorenz oscillator with the first component
  observed through an increment process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from .filters import FilterRunConfig, SdeModel
from .hermite import HermiteExpansion, monomial_to_hermite

__all__ = [
    "ScenarioSpec",
    "StaticGainProblem",
    "SCENARIO_NAMES",
    "build_static_gain_mixture",
    "build_cubic_sensor",
    "build_ship_polar",
    "build_lorenz",
    "build_scenario",
    "scenario_defaults",
]

SCENARIO_NAMES = ("static_gain_mixture", "cubic_sensor_d", "ship_polar", "lorenz63")


@dataclass
class ScenarioSpec:
    name: str
    params: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in SCENARIO_NAMES:
            raise ValueError(f"unknown scenario {self.name!r}; choose from {SCENARIO_NAMES}")


# ---------------------------------------------------------------------------
# static two-Gaussian gain comparison


@dataclass
class StaticGainProblem:
    mu: np.ndarray
    sigma: np.ndarray  # mixture component variances (diagonal)
    eps: np.ndarray  # kernel covariance diagonal for the decomposition
    n_particles: int
    h: HermiteExpansion
    analytic_gain: Callable[[np.ndarray], np.ndarray]

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        signs = np.where(rng.random(n) < 0.5, 1.0, -1.0)
        return signs[:, None] * self.mu[None, :] + rng.standard_normal((n, 2)) * np.sqrt(
            self.sigma
        )

    def h_at(self, states: np.ndarray) -> np.ndarray:
        c2 = self.h.coeffs  # quadratic monomials: x1^2/s1 - mu1/(s1 mu2) x1 x2
        del c2
        s1 = self.sigma[0]
        ratio = self.mu[0] / (s1 * self.mu[1])
        return (states[:, 0] ** 2 / s1 - ratio * states[:, 0] * states[:, 1])[:, None]


def build_static_gain_mixture(params: Optional[dict] = None) -> StaticGainProblem:
    p = {"mu1": 1.0, "mu2": 1.0, "sigma1": 1.0, "sigma2": 2.0, "eps1": 0.5, "eps2": 1.0, "n_particles": 100}
    p.update(params or {})
    if p["sigma1"] <= 0 or p["sigma2"] <= 0:
        raise ValueError("mixture variances must be positive")
    if p["mu2"] == 0:
        raise ValueError("mu2 must be nonzero (it divides the observation)")
    mu = np.array([p["mu1"], p["mu2"]])
    sigma = np.array([p["sigma1"], p["sigma2"]])
    h = monomial_to_hermite(
        {(2, 0): 1.0 / p["sigma1"], (1, 1): -p["mu1"] / (p["sigma1"] * p["mu2"])}, d=2, p=2
    )
    slope = p["sigma2"] * p["mu1"] / (p["sigma1"] * p["mu2"])

    def analytic_gain(x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.stack([x[:, 0], -slope * x[:, 0]], axis=1)

    return StaticGainProblem(
        mu=mu,
        sigma=sigma,
        eps=np.array([p["eps1"], p["eps2"]]),
        n_particles=int(p["n_particles"]),
        h=h,
        analytic_gain=analytic_gain,
    )


# ---------------------------------------------------------------------------
# cubic sensor in d dimensions


def build_cubic_sensor(d: int, params: Optional[dict] = None) -> SdeModel:
    if d < 1:
        raise ValueError("dimension must be >= 1")
    # the double-well dynamics live in |x| <~ 4 at unit noise; the bound
    # keeps explicit Euler clear of the cubic drift's instability region
    p = {"x0": 0.0, "state_bound": 8.0}
    p.update(params or {})
    h = []
    for j in range(d):
        k3 = tuple(3 if l == j else 0 for l in range(d))
        k1 = tuple(1 if l == j else 0 for l in range(d))
        h.append(HermiteExpansion(d=d, p=3, coeffs={k3: 0.125, k1: 0.75}))

    def drift(x):
        return x * (1.0 - x * x)

    def drift_jac(x):
        return np.diag(1.0 - 3.0 * x * x)

    x0 = np.broadcast_to(np.asarray(p["x0"], dtype=float), (d,)).copy()
    return SdeModel(
        name=f"cubic_sensor_d{d}",
        d=d,
        m=d,
        drift=drift,
        drift_vec=drift,  # elementwise, works on (N, d) blocks too
        drift_jac=drift_jac,
        h=h,
        h_eval_vec=lambda states: states**3,
        R=1.0,
        obs_kind="increment",
        x0=x0,
        state_bound=p["state_bound"],
    )


# ---------------------------------------------------------------------------
# ship tracking in polar coordinates (state = (theta, rho))


def build_ship_polar(params: Optional[dict] = None) -> SdeModel:
    p = {
        "gamma": 2.0,
        "force": 50.0,  # theta_f, the restoring force magnitude
        "radius": 9.0,  # rho_c, where the restoring force switches on
        "q": 1.0,  # process noise amplitude (not stated in the source setup)
        "r": 0.32,
        "x0_cart": (0.5, -0.5),
        "rho_floor": 1e-3,
        # below this radius the 1/rho drift is evaluated frozen, so an Euler
        # step cannot catapult a particle that diffused toward the origin
        "rho_guard": 0.35,
    }
    p.update(params or {})
    gamma, force, radius, q = p["gamma"], p["force"], p["radius"], p["q"]
    guard = p["rho_guard"]
    drift_rho_coef = gamma + 0.5 * q * q

    def drift(x):
        theta, rho = x[0], x[1]
        del theta
        f = drift_rho_coef / max(rho, guard) - (force if rho > radius else 0.0)
        return np.array([1.0, f])

    def drift_vec(states):
        rho = states[:, 1]
        out = np.empty_like(states)
        out[:, 0] = 1.0
        out[:, 1] = drift_rho_coef / np.maximum(rho, guard) - force * (rho > radius)
        return out

    def drift_jac(x):
        rho = x[1]
        if rho < guard:
            return np.zeros((2, 2))
        return np.array([[0.0, 0.0], [0.0, -drift_rho_coef / rho**2]])

    def diffusion(x):
        theta, rho = x[0], max(x[1], guard)
        return q * np.array(
            [[-np.sin(theta) / rho, np.cos(theta) / rho], [np.cos(theta), np.sin(theta)]]
        )

    def sigma_apply_vec(states, noise):
        theta, rho = states[:, 0], np.maximum(states[:, 1], guard)
        s, c = np.sin(theta), np.cos(theta)
        out = np.empty_like(states)
        out[:, 0] = q * (-s * noise[:, 0] + c * noise[:, 1]) / rho
        out[:, 1] = q * (c * noise[:, 0] + s * noise[:, 1])
        return out

    x, y = p["x0_cart"]
    x0 = np.array([math.atan2(y, x), math.hypot(x, y)])
    h = [HermiteExpansion(d=2, p=1, coeffs={(1, 0): 0.5})]
    return SdeModel(
        name="ship_polar",
        d=2,
        m=1,
        drift=drift,
        drift_vec=drift_vec,
        drift_jac=drift_jac,
        diffusion=diffusion,
        sigma_apply_vec=sigma_apply_vec,
        h=h,
        h_eval_vec=lambda states: states[:, :1],
        R=p["r"],
        obs_kind="discrete",
        x0=x0,
        state_floor=(1, p["rho_floor"]),
    )


# ---------------------------------------------------------------------------
# Lorenz 63 oscillator


def build_lorenz(params: Optional[dict] = None) -> SdeModel:
    p = {"sigma": 10.0, "beta": 8.0 / 3.0, "rho": 25.0, "q": 0.18, "r": 0.2, "x0": (20.0, 15.0, 15.0)}
    p.update(params or {})
    sig, beta, rho, q = p["sigma"], p["beta"], p["rho"], p["q"]

    def drift(x):
        return np.array(
            [
                -sig * (x[0] - x[1]),
                -x[0] * x[2] + rho * x[0] - x[1],
                x[0] * x[1] - beta * x[2],
            ]
        )

    def drift_vec(states):
        x1, x2, x3 = states[:, 0], states[:, 1], states[:, 2]
        out = np.empty_like(states)
        out[:, 0] = -sig * (x1 - x2)
        out[:, 1] = -x1 * x3 + rho * x1 - x2
        out[:, 2] = x1 * x2 - beta * x3
        return out

    def drift_jac(x):
        return np.array(
            [
                [-sig, sig, 0.0],
                [rho - x[2], -1.0, -x[0]],
                [x[1], x[0], -beta],
            ]
        )

    h = [HermiteExpansion(d=3, p=1, coeffs={(1, 0, 0): 0.5})]
    return SdeModel(
        name="lorenz63",
        d=3,
        m=1,
        drift=drift,
        drift_vec=drift_vec,
        drift_jac=drift_jac,
        diffusion_scale=q,
        h=h,
        h_eval_vec=lambda states: states[:, :1],
        R=p["r"],
        obs_kind="increment",
        x0=np.asarray(p["x0"], dtype=float),
    )


# ---------------------------------------------------------------------------
# registry and stock run configurations


def scenario_defaults(name: str) -> dict:
    """Stock run parameters: the filtering examples' published settings."""
    if name == "cubic_sensor_d":
        return {
            "T": 40.0,
            "dt": 0.01,
            "eps": 0.01,
            "omega": "zero",
            "obs_mean": "particle",
            "innovation": "scaled",
            "transport": "percoord",
            "n_particles": {"fpf_decomp": 50, "fpf_const": 50, "fpf_kernel": 50, "pf": 500},
            "kernel_bandwidth": 0.1,
            "kernel_iters": 100,
            "dim": 1,
        }
    if name == "ship_polar":
        return {
            "T": 8.25,
            "dt": 0.05,
            "eps": [0.1, 0.1],
            "omega": "fd",
            "obs_mean": "particle",
            "innovation": "scaled",
            "n_particles": {"fpf_decomp": 9, "fpf_const": 9, "fpf_kernel": 9, "pf": 50},
            "kernel_bandwidth": 0.1,
            "kernel_iters": 100,
        }
    if name == "lorenz63":
        return {
            "T": 50.0,
            "dt": 0.001,
            "eps": 0.01,
            "eps_mode": "silverman",
            "omega": "zero",
            "obs_mean": "particle",
            "innovation": "scaled",
            "n_particles": {"fpf_decomp": 50, "fpf_const": 50, "fpf_kernel": 50, "pf": 500},
            "kernel_bandwidth": 0.1,
            "kernel_iters": 100,
        }
    if name == "static_gain_mixture":
        return {"n_particles": {"fpf_decomp": 100}, "kernel_bandwidth": 0.1, "kernel_iters": 100}
    raise ValueError(f"unknown scenario {name!r}")


def build_scenario(spec: ScenarioSpec):
    """Model plus stock run parameters for a spec; static mixture returns
    the StaticGainProblem instead of an SdeModel."""
    defaults = scenario_defaults(spec.name)
    params = dict(spec.params)
    if spec.name == "static_gain_mixture":
        return build_static_gain_mixture(params), defaults
    if spec.name == "cubic_sensor_d":
        dim = int(params.pop("dim", defaults.get("dim", 1)))
        return build_cubic_sensor(dim, params), defaults
    if spec.name == "ship_polar":
        return build_ship_polar(params), defaults
    if spec.name == "lorenz63":
        return build_lorenz(params), defaults
    raise ValueError(f"unknown scenario {spec.name!r}")


def make_run_config(defaults: dict, method: str, overrides: Optional[dict] = None) -> FilterRunConfig:
    """Assemble a FilterRunConfig for one method from scenario defaults."""
    o = dict(overrides or {})
    npart = defaults.get("n_particles", {})
    n = o.pop("n_particles", npart.get(method, 50) if isinstance(npart, dict) else npart)
    cfg = FilterRunConfig(
        T=o.pop("T", defaults["T"]),
        dt=o.pop("dt", defaults["dt"]),
        n_particles=int(n),
        eps=o.pop("eps", defaults.get("eps", 0.01)),
        eps_mode=o.pop("eps_mode", defaults.get("eps_mode", "fixed")),
        omega=o.pop("omega", defaults.get("omega", "fd")),
        obs_mean=o.pop("obs_mean", defaults.get("obs_mean", "particle")),
        innovation=o.pop("innovation", defaults.get("innovation", "scaled")),
        transport=o.pop("transport", defaults.get("transport", "multivariate")),
        kernel_bandwidth=o.pop("kernel_bandwidth", defaults.get("kernel_bandwidth", 0.1)),
        kernel_iters=int(o.pop("kernel_iters", defaults.get("kernel_iters", 100))),
    )
    for key, val in o.items():
        if not hasattr(cfg, key):
            raise ValueError(f"unknown run option {key!r}")
        setattr(cfg, key, val)
    return cfg
