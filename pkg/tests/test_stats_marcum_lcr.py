import math

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hs
from scipy.stats import ncx2

from nsmimo.stats import (DegenerateSpectrumError, afd_empirical, afd_theoretical, lcr_empirical, lcr_theoretical,
                          marcum_q1, spectral_moments)


@settings(max_examples=200, deadline=None)
@given(hs.floats(0.0, 30.0), hs.floats(0.01, 30.0))
def test_marcum_matches_noncentral_chi2(a, b):
    expected = ncx2.sf(b * b, 2, a * a) if a > 0 else math.exp(-b * b / 2)
    assert marcum_q1(a, b) == pytest.approx(expected, rel=1e-9, abs=1e-14)


def test_marcum_special_cases():
    assert marcum_q1(0.0, 1.3) == pytest.approx(math.exp(-1.3 ** 2 / 2), rel=1e-14)
    assert marcum_q1(2.0, 0.0) == 1.0
    npt.assert_allclose(marcum_q1(np.array([1.0, 2.0]), np.array([1.0, 0.5])),
                        [ncx2.sf(1.0, 2, 1.0), ncx2.sf(0.25, 2, 4.0)], rtol=1e-10)


def isotropic_doppler(f_m, M=100_000):
    alpha = 2 * np.pi * (np.arange(M) + 0.5) / M
    return f_m * np.cos(alpha)


def test_b0_and_isotropic_moments():
    m = spectral_moments(isotropic_doppler(100.0), 5.514)
    assert m.b0 == pytest.approx(1 / 6.514, abs=1e-12)
    m0 = spectral_moments(isotropic_doppler(100.0), 0.0)
    assert abs(m0.b1) < 1e-9
    assert m0.b2 / m0.b0 == pytest.approx(2 * np.pi ** 2 * 100.0 ** 2, rel=1e-9)


def test_degenerate_spectrum_raises():
    with pytest.raises(DegenerateSpectrumError):
        spectral_moments(np.full(20, 37.0), 3.0)


def test_rayleigh_reduction():
    f_m = 100.0
    m = spectral_moments(isotropic_doppler(f_m), 0.0)
    r = np.geomspace(0.01, 3.0, 50)
    lcr = lcr_theoretical(r, m, 0.0)
    afd = afd_theoretical(r, m, 0.0)
    npt.assert_allclose(lcr, math.sqrt(2 * math.pi) * f_m * r * np.exp(-r * r), rtol=1e-9)
    npt.assert_allclose(afd, np.expm1(r * r) / (math.sqrt(2 * math.pi) * f_m * r), rtol=1e-9)


@settings(max_examples=30, deadline=None)
@given(hs.floats(0.0, 20.0), hs.floats(0.05, 3.0))
def test_lcr_afd_duality(K, r):
    rng = np.random.default_rng(1)
    m = spectral_moments(rng.uniform(-80, 120, 20), K)
    n = lcr_theoretical(r, m, K)
    ell = afd_theoretical(r, m, K)
    if n > 0:
        assert n * ell == pytest.approx(1.0 - marcum_q1(math.sqrt(2 * K), math.sqrt(2 * (K + 1)) * r),
                                        rel=1e-10, abs=1e-300)


def test_lcr_large_k_does_not_overflow():
    m = spectral_moments(np.linspace(-50, 90, 20), 500.0)
    out = lcr_theoretical(np.array([0.5, 1.0, 1.5]), m, 500.0)
    assert np.all(np.isfinite(out))


def test_lcr_vanishes_at_small_r():
    m = spectral_moments(isotropic_doppler(50.0, 1000), 2.0)
    assert lcr_theoretical(1e-6, m, 2.0) < 1e-3


def test_empirical_counts_on_known_series():
    env = np.array([2.0, 0.5, 2.0, 0.5, 2.0])
    assert lcr_empirical(env, 1.0, 1.0)[0] == pytest.approx(2 / 4)
    assert afd_empirical(env, 1.0, 1.0)[0] == pytest.approx(1.0)
    assert afd_empirical(env, 1.0, 0.1)[0] == np.inf
