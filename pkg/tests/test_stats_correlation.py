import math
import warnings

import numpy as np
import numpy.testing as npt
import pytest

from nsmimo import AntennaArray, ChannelSimulator, run
from nsmimo.cir import CirRecord
from nsmimo.stats import (CorrelationCurve, acf_empirical, acf_theoretical, ccf_empirical, ccf_theoretical,
                          doppler_psd, psd_integral, psd_support, survival_factor)

from conftest import make_config


def synthetic_record(h, fingerprint="f"):
    """One snapshot, one cluster, coefficients over rx elements."""
    h = np.asarray(h, dtype=complex)
    u = h.size
    return CirRecord(fingerprint=fingerprint, sample_interval=1e-3, carrier_frequency=2e9, n_rays=1, seed=0,
                     realization=0, rx_positions=np.c_[np.zeros(u), np.arange(u) * 0.05, np.zeros(u)],
                     tx_positions=np.zeros((1, 3)), steps=np.array([0]), offsets=np.array([0, 1]),
                     cluster_ids=np.array([0]), delays=np.array([1e-6]), powers=np.array([1.0]),
                     coefficients=h.reshape(1, u, 1))


def test_ccf_identical_elements_is_one():
    recs = [synthetic_record([z, z]) for z in (1 + 1j, 0.3 - 2j, -1.0)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        c = ccf_empirical(recs)
    npt.assert_allclose(c.values, 1.0, rtol=1e-14)


def test_ccf_independent_elements_vanishes():
    rng = np.random.default_rng(0)
    recs = [synthetic_record(rng.normal(size=2) + 1j * rng.normal(size=2)) for _ in range(4000)]
    c = ccf_empirical(recs)
    assert abs(c.values[1]) < 4 / math.sqrt(4000)


def test_ccf_warns_for_small_ensembles():
    with pytest.warns(UserWarning, match="100 realizations"):
        ccf_empirical([synthetic_record([1, 1])])


def test_mixed_fingerprints_rejected():
    with pytest.raises(ValueError, match="fingerprint"):
        acf_empirical([synthetic_record([1]), synthetic_record([1], fingerprint="g")])


def test_survival_factor_toggle():
    cfg = make_config(speed=20.0, clusters="speed_A = uniform 0 10\nspeed_Z = uniform 0 10")
    ens = [ChannelSimulator(cfg, r).rays(0) for r in range(2)]
    lags = np.linspace(0, 0.05, 11)
    with_s = acf_theoretical(ens, lags, cfg).values
    without = acf_theoretical(ens, lags, cfg, survival=False).values
    expected = np.exp(-cfg.scenario.lambda_R * (20.0 + cfg.scenario.P_c * 10.0) * lags / cfg.scenario.D_c)
    npt.assert_allclose(with_s / without, expected, rtol=1e-12)
    npt.assert_allclose(survival_factor(lags, 0.04, 10.0, 23.0), np.exp(-0.004 * 23.0 * lags))


def test_theory_zero_lag_and_bounds():
    cfg = make_config(preset="uma-los", antennas="rx_elements = 4\nrx_spacing = 0.5")
    ens = [ChannelSimulator(cfg, r).rays(0) for r in range(3)]
    acf = acf_theoretical(ens, np.linspace(0, 0.02, 21), cfg)
    ccf = ccf_theoretical(ens, np.linspace(0, 0.5, 11))
    assert acf.values[0] == pytest.approx(1.0, abs=1e-12)
    assert ccf.values[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.abs(acf.values) <= 1 + 1e-9) and np.all(np.abs(ccf.values) <= 1 + 1e-9)


def test_pure_los_ccf_has_unit_magnitude():
    cfg = make_config(preset="uma-los", scenario="rice_factor_K = 1e12")
    ens = [ChannelSimulator(cfg, 0).rays(0)]
    npt.assert_allclose(np.abs(ccf_theoretical(ens, np.linspace(0, 1, 9)).values), 1.0, atol=1e-9)


def frozen_config(**kw):
    return make_config(preset="uma-los", speed=0.0, scenario="P_c = 0\nzeta = inf", **kw)


def test_frozen_world_acf_is_one():
    cfg = frozen_config(duration=0.1)
    recs = [run(cfg, r) for r in range(3)]
    emp = acf_empirical(recs)
    npt.assert_allclose(emp.values, 1.0, atol=1e-12)
    ens = [ChannelSimulator(cfg, r).rays(0) for r in range(3)]
    npt.assert_allclose(acf_theoretical(ens, emp.lags, cfg).values, 1.0, atol=1e-12)


def test_psd_integral_and_frozen_delta():
    curve = CorrelationCurve(np.arange(64) * 1e-3, np.ones(64), "temporal-acf")
    psd = doppler_psd(curve, window="rectangular")
    assert psd_integral(psd) == pytest.approx(1.0, abs=1e-12)
    peak = np.argmax(psd.values)
    assert psd.lags[peak] == 0.0
    others = np.delete(psd.values, peak)
    npt.assert_allclose(others, 0.0, atol=1e-12)


def test_psd_of_single_tone():
    f0 = 120.0
    lags = np.arange(400) * 2.5e-4
    curve = CorrelationCurve(lags, np.exp(2j * np.pi * f0 * lags), "temporal-acf")
    psd = doppler_psd(curve)
    assert psd_integral(psd) == pytest.approx(1.0, abs=1e-12)
    df = psd.lags[1] - psd.lags[0]
    assert abs(psd.lags[np.argmax(psd.values)] - f0) <= df
    # off-bin tone: the first Hann sidelobe (about -31 dB) clears the 1e-3 threshold
    assert psd_support(psd) <= f0 + 4 * df


def test_psd_rejects_bad_grid():
    with pytest.raises(ValueError):
        doppler_psd(CorrelationCurve(np.array([0.0, 1.0, 3.0]), np.ones(3), "temporal-acf"))
