import math

import numpy as np
import pytest
import scipy.integrate
import scipy.special as sps

from fpfdecomp.special import (
    R_SWITCH,
    erf,
    lower_incomplete_gamma,
    radial_kernel,
    radial_kernel_vec,
)


def test_erf_basics():
    assert erf(0.0) == 0.0
    assert erf(6.0) > 1 - 1e-15
    # frozen from the series oracle (= scipy.special.erf)
    assert erf(1.0) == pytest.approx(0.8427007929497149, rel=1e-12)
    assert erf(-1.0) == -erf(1.0)
    for x in np.linspace(-4, 4, 41):
        assert abs(erf(x)) < 1.0 or x == 0.0
        assert erf(x) == pytest.approx(sps.erf(x), rel=1e-12, abs=1e-15)


def test_lower_incomplete_gamma_closed_forms():
    # gamma(1, x) = 1 - exp(-x)
    assert lower_incomplete_gamma(1.0, 2.0) == pytest.approx(1 - math.exp(-2), rel=1e-12)
    # gamma(1/2, x) = sqrt(pi) erf(sqrt(x))
    assert lower_incomplete_gamma(0.5, 1.0) == pytest.approx(
        math.sqrt(math.pi) * math.erf(1.0), rel=1e-12
    )
    assert lower_incomplete_gamma(2.5, 0.0) == 0.0


def test_lower_incomplete_gamma_against_scipy():
    rng = np.random.default_rng(0)
    for _ in range(200):
        s = float(rng.uniform(0.05, 60.0))
        x = float(rng.uniform(0.0, 120.0))
        want = sps.gammainc(s, x) * math.gamma(s)
        assert lower_incomplete_gamma(s, x) == pytest.approx(want, rel=1e-10, abs=1e-280)


def test_lower_incomplete_gamma_domain_errors():
    with pytest.raises(ValueError):
        lower_incomplete_gamma(0.0, 1.0)
    with pytest.raises(ValueError):
        lower_incomplete_gamma(-1.0, 1.0)
    with pytest.raises(ValueError):
        lower_incomplete_gamma(1.0, -0.1)


def test_gamma_monotone_in_x():
    for s in (0.5, 1.0, 1.5, 3.0, 7.5):
        xs = np.linspace(0, 40, 200)
        vals = [lower_incomplete_gamma(s, x) for x in xs]
        assert np.all(np.diff(vals) >= -1e-14)
        assert vals[-1] <= math.gamma(s) + 1e-10
        assert vals[-1] == pytest.approx(math.gamma(s), rel=1e-8)


def test_radial_kernel_values():
    # d = 2, r -> 0 limit is 2^(1-d/2)/d = 1/2
    assert radial_kernel(2, 0.0) == pytest.approx(0.5, rel=1e-12)
    # d = 1, r = 1: sqrt(pi) erf(1/sqrt(2)); cross-checked by quadrature
    quad, _ = scipy.integrate.quad(lambda t: t**-0.5 * np.exp(-t), 0.0, 0.5)
    assert radial_kernel(1, 1.0) == pytest.approx(quad, rel=1e-9)
    assert radial_kernel(1, 1.0) == pytest.approx(
        math.sqrt(math.pi) * math.erf(1 / math.sqrt(2)), rel=1e-12
    )
    # d = 3, large r: gamma(3/2) r^-3
    r = 40.0
    assert radial_kernel(3, r) == pytest.approx(0.5 * math.sqrt(math.pi) / r**3, rel=1e-10)


def test_radial_kernel_zero_limit_all_dims():
    for d in range(1, 11):
        want = 2.0 ** (1 - d / 2) / d
        assert radial_kernel(d, 0.0) == pytest.approx(want, rel=1e-12)
        # continuity across the series switch
        below = radial_kernel(d, R_SWITCH * 0.999)
        above = radial_kernel(d, R_SWITCH * 1.001)
        assert below == pytest.approx(above, rel=1e-9)
        assert radial_kernel(d, 0.0) == pytest.approx(want, abs=1e-9)


def test_radial_kernel_positive_decreasing():
    for d in (1, 2, 3, 5, 10):
        rs = np.linspace(1e-6, 12.0, 400)
        vals = np.array([radial_kernel(d, r) for r in rs])
        assert np.all(vals > 0)
        assert np.all(np.diff(vals) < 1e-14)


def test_radial_kernel_vec_matches_scalar():
    rng = np.random.default_rng(1)
    for d in (1, 2, 3, 4, 7):
        rs = np.abs(rng.normal(size=100)) * 5
        rs[0] = 0.0
        rs[1] = R_SWITCH / 2
        vec = radial_kernel_vec(d, rs)
        for r, v in zip(rs, vec):
            assert v == pytest.approx(radial_kernel(d, r), rel=1e-12, abs=1e-300)


def test_radial_kernel_domain():
    with pytest.raises(ValueError):
        radial_kernel(0, 1.0)
    with pytest.raises(ValueError):
        radial_kernel(2, -1.0)
