import numpy as np
import numpy.testing as npt
import pytest

from nsmimo import run
from nsmimo.stats import ccdf, ccdf_quantile, stationary_interval
from nsmimo.stats.stationarity import apdp, apdp_correlation

from conftest import make_config


def test_apdp_sliding_mean():
    pdp = np.arange(12, dtype=float).reshape(6, 2)
    out = apdp(pdp, 3)
    npt.assert_allclose(out[0], pdp[:3].mean(axis=0))
    npt.assert_allclose(out[-1], pdp[3:].mean(axis=0))
    with pytest.raises(ValueError, match="N_PDP"):
        apdp(pdp, 7)


def test_apdp_correlation():
    a = np.array([[1.0, 2.0, 0.0]])
    assert apdp_correlation(a, a)[0] == pytest.approx(1.0)
    assert apdp_correlation(a, 2 * a)[0] == pytest.approx(0.5)
    assert apdp_correlation(a, np.array([[0.0, 0.0, 5.0]]))[0] == 0.0


def test_ccdf():
    x, p = ccdf(np.array([3.0, 1.0, 2.0, 2.0]))
    npt.assert_array_equal(x, [1.0, 2.0, 3.0])
    npt.assert_allclose(p, [1.0, 0.75, 0.25])
    assert ccdf_quantile(np.arange(101.0), 0.8) == pytest.approx(20.0)


def test_frozen_world_interval_is_record_length():
    cfg = make_config(preset="uma-los", speed=0.0, scenario="P_c = 0\nzeta = inf", duration=0.05)
    rec = run(cfg)
    res = stationary_interval(rec)
    n_apdp = rec.n_snapshots - 10 + 1
    assert res.intervals[0] == pytest.approx((n_apdp - 1) * cfg.sample_interval)
    npt.assert_allclose(res.intervals, (n_apdp - 1 - np.arange(n_apdp)) * cfg.sample_interval)
    assert np.all(res.censored)


def test_max_lag_drops_truncated_starts():
    cfg = make_config(preset="uma-los", speed=30.0, duration=0.2)
    rec = run(cfg)
    res = stationary_interval(rec, max_lag=40)
    assert res.start_times.size == rec.n_snapshots - 10 + 1 - 40
    assert np.all(res.intervals <= 40 * cfg.sample_interval + 1e-15)


def test_validation():
    rec = run(make_config(duration=0.005))
    with pytest.raises(ValueError):
        stationary_interval(rec, c_thresh=1.0)
    with pytest.raises(ValueError, match="N_PDP"):
        stationary_interval(rec, n_pdp=50)
