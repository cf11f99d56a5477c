import numpy as np
import pytest
import scipy.integrate

from fpfdecomp.hermite import HermiteExpansion
from fpfdecomp.mixture import (
    GaussianComponent,
    Mixture,
    component_density,
    component_logpdf,
    empirical_obs_mean,
    mixture_density,
    weighted_radial,
)


def test_component_density_values():
    c1 = GaussianComponent.from_diagonal([0.0], [1.0])
    assert component_density(c1, np.zeros(1)) == pytest.approx(1 / np.sqrt(2 * np.pi))
    c2 = GaussianComponent.from_diagonal([1.0, -2.0], [1.0, 1.0])
    assert component_density(c2, c2.mean) == pytest.approx(1 / (2 * np.pi))


def test_density_log_path_agreement():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(3, 3))
    cov = A @ A.T + 3 * np.eye(3)
    c = GaussianComponent(mean=rng.normal(size=3), cov=cov)
    for _ in range(30):
        x = rng.normal(size=3) * 3
        assert component_density(c, x) == pytest.approx(
            np.exp(component_logpdf(c, x)), rel=1e-12
        )


def test_component_validation():
    with pytest.raises(ValueError):
        GaussianComponent(mean=np.zeros(2), cov=np.array([[1.0, 0.5], [0.4, 1.0]]))
    with pytest.raises(ValueError):
        GaussianComponent(mean=np.zeros(2), cov=np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_eigendecomposition_cache():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(4, 4))
    cov = A @ A.T + 4 * np.eye(4)
    c = GaussianComponent(mean=np.zeros(4), cov=cov)
    recon = c.rotation.T @ np.diag(c.eigenvalues) @ c.rotation
    assert np.abs(recon - c.precision).max() <= 1e-10 * np.abs(c.precision).max()
    assert np.all(c.eigenvalues > 0)


def test_mixture_density_trivial():
    c = GaussianComponent.from_diagonal([0.3, 0.1], [0.5, 0.5])
    single = Mixture([c])
    twin = Mixture([c, GaussianComponent.from_diagonal([0.3, 0.1], [0.5, 0.5])])
    x = np.array([0.2, -0.4])
    assert mixture_density(single, x) == pytest.approx(component_density(c, x))
    assert mixture_density(twin, x) == pytest.approx(component_density(c, x))


def test_mixture_integrates_to_one():
    rng = np.random.default_rng(2)
    comps = [
        GaussianComponent.from_diagonal(rng.normal(size=2), rng.uniform(0.2, 1.0, 2))
        for _ in range(5)
    ]
    m = Mixture(comps)
    val, err = scipy.integrate.dblquad(
        lambda y, x: mixture_density(m, np.array([x, y])),
        -8.0,
        8.0,
        lambda _: -8.0,
        lambda _: 8.0,
        epsabs=1e-5,
    )
    assert val == pytest.approx(1.0, abs=1e-4)


def test_mixture_underflow_path():
    m = Mixture(
        [
            GaussianComponent.from_diagonal([0.0], [0.01]),
            GaussianComponent.from_diagonal([100.0], [0.01]),
        ]
    )
    x = np.array([50.0])
    assert mixture_density(m, x) >= 0.0
    # both exponents < -700: direct exp would underflow to 0 identically
    assert mixture_density(m, x) == 0.0
    near = np.array([0.5])
    assert mixture_density(m, near) > 0.0


def test_weighted_radial():
    c = GaussianComponent.from_diagonal([1.0, 2.0], [1.0, 1.0])
    x = np.array([4.0, 6.0])
    assert weighted_radial(c, x) == pytest.approx(5.0)
    assert weighted_radial(c, c.mean) == 0.0
    # d = 1 with variance eps: |x - X| / sqrt(eps)
    c1 = GaussianComponent.from_diagonal([0.5], [0.25])
    assert weighted_radial(c1, np.array([1.5])) == pytest.approx(2.0)
    # diagonal: sqrt(a^2/eps1 + b^2/eps2)
    c2 = GaussianComponent.from_diagonal([0.0, 0.0], [0.5, 2.0])
    assert weighted_radial(c2, np.array([1.0, 2.0])) == pytest.approx(
        np.sqrt(1 / 0.5 + 4 / 2.0)
    )


def test_weighted_radial_rotation_invariance():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(3, 3))
    cov = A @ A.T + np.eye(3)
    c = GaussianComponent(mean=rng.normal(size=3), cov=cov)
    for _ in range(20):
        x = rng.normal(size=3) * 2
        y = c.rotation @ (x - c.mean)
        via_eig = np.sqrt(np.sum(c.eigenvalues * y**2))
        assert weighted_radial(c, x) == pytest.approx(via_eig, rel=1e-10)


def test_empirical_obs_mean():
    const = HermiteExpansion(d=1, p=0, coeffs={(0,): 2.5})
    states = np.array([[-1.0], [1.0]])
    assert empirical_obs_mean(states, [const])[0] == 2.5
    ident = HermiteExpansion(d=1, p=1, coeffs={(1,): 0.5})
    assert empirical_obs_mean(states, [ident])[0] == pytest.approx(0.0)
    rng = np.random.default_rng(4)
    cube = HermiteExpansion(d=1, p=3, coeffs={(3,): 0.125, (1,): 0.75})
    big = rng.standard_normal((1000, 1))
    assert abs(empirical_obs_mean(big, [cube])[0]) < 0.3
    with pytest.raises(ValueError):
        empirical_obs_mean(np.empty((0, 1)), [const])
