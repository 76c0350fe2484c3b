import dataclasses
import math

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hs

from nsmimo.geometry import SPEED_OF_LIGHT, GeometryError
from nsmimo.kinematics import (geometric_delay, log_power, normalize_powers, update_angles, update_los,
                               update_positions, update_power, update_virtual_delay, virtual_delay_extend,
                               virtual_delay_series)
from nsmimo.scenario import PRESETS, new_cluster, realization_rng

from conftest import make_config


def one_ray_cluster(pos_t, pos_r, v_a=(0, 0, 0), v_z=(0, 0, 0)):
    cfg = make_config()
    c = new_cluster(cfg, realization_rng(0, 0), 0, 0.0)
    return dataclasses.replace(c, ray_positions_T=np.array([pos_t], float), ray_positions_R=np.array([pos_r], float),
                               v_A=np.array(v_a, float), v_Z=np.array(v_z, float), anchor_time=0.0)


def test_static_positions_constant():
    c = one_ray_cluster((100, 20, 5), (-50, 30, 0))
    pt, pr = update_positions(c, np.zeros(3), np.array([0.0, 1.0, 50.0]))
    npt.assert_array_equal(pt, np.broadcast_to(c.ray_positions_T, pt.shape))
    npt.assert_array_equal(pr, np.broadcast_to(c.ray_positions_R, pr.shape))


def test_moving_receiver_side():
    c = one_ray_cluster((100, 0, 0), (200, 0, 0), v_z=(5, 0, 0))
    _, pr = update_positions(c, np.array([20.0, 0, 0]), np.array([1.0]))
    npt.assert_allclose(pr[0, 0], [185, 0, 0])


def test_collapse_names_cluster():
    c = one_ray_cluster((100, 0, 0), (10, 0, 0))
    with pytest.raises(GeometryError, match="cluster 0"):
        update_positions(c, np.array([10.0, 0, 0]), np.array([1.0]))


def test_geometric_delay():
    pt = np.array([[[200.0, 0, 0]]])
    pr = np.array([[[0.0, 200.0, 0]]])
    assert geometric_delay(pt, pr)[0] == pytest.approx(400 / SPEED_OF_LIGHT, abs=1e-18)
    assert 400 / SPEED_OF_LIGHT == pytest.approx(1.33428e-6, abs=5e-11)


def test_virtual_delay_filter():
    assert update_virtual_delay(3e-7, 5e-7, 0.0, 0.3) == 3e-7
    assert update_virtual_delay(3e-7, 5e-7, 100.0, 0.3) == pytest.approx(5e-7, rel=1e-12)


def test_virtual_delay_series_matches_recursion():
    sc = PRESETS["umi-nlos"]
    c = one_ray_cluster((100, 0, 0), (50, 0, 0))
    c = dataclasses.replace(c, virtual_delay=1e-7, delay_target_quantile=0.4)
    los = np.linspace(5e-7, 5.1e-7, 20)
    geo = np.linspace(4.9e-7, 5.0e-7, 20)
    out = virtual_delay_series(c, sc, los, geo, 1e-3)
    prev = 1e-7
    for k in range(1, 20):
        x = max(0.0, los[k] + 0.4 * sc.tau_max - geo[k])
        prev = update_virtual_delay(prev, x, 1e-3, sc.zeta)
        assert out[k] == pytest.approx(prev, rel=1e-12)
    assert np.all(out >= 0)


@pytest.mark.parametrize("per_step", [False, True])
def test_virtual_delay_extend_concatenates(per_step):
    sc = PRESETS["uma-los"]
    c = dataclasses.replace(one_ray_cluster((100, 0, 0), (50, 0, 0)), virtual_delay=2e-7)
    rng = np.random.default_rng(3)
    los = 5e-7 + 1e-9 * rng.random(30)
    geo = 4.9e-7 + 1e-9 * rng.random(30)
    whole = virtual_delay_series(c, sc, los, geo, 1e-3, per_step)
    head = virtual_delay_series(c, sc, los[:12], geo[:12], 1e-3, per_step)
    tail = virtual_delay_extend(c, sc, head[-1], los[12:], geo[12:], 1e-3, 12, per_step)
    npt.assert_allclose(np.concatenate([head, tail]), whole, rtol=1e-15)


def test_power_values():
    sc = PRESETS["uma-los"]
    sc = dataclasses.replace(sc, r_tau=2.5, sigma_tau=100e-9)
    assert update_power(0.0, 1.0, 0.0, sc) == pytest.approx(1.0)
    assert update_power(100e-9, 1.0, 0.0, sc) == pytest.approx(math.exp(-0.6), abs=1e-12)
    assert update_power(0.0, 0.5, 10.0, sc) == pytest.approx(0.25 * 0.1)


def test_normalize_powers_per_group():
    logp = np.log(np.array([1.0, 3.0, 2.0, 2.0, 1e-300]))
    p = normalize_powers(logp, np.array([0, 0, 1, 1, 1]))
    npt.assert_allclose(np.bincount([0, 0, 1, 1, 1], p), [1.0, 1.0], atol=1e-15)
    npt.assert_allclose(p[:2], [0.25, 0.75])


@given(hs.lists(hs.floats(-800, 50), min_size=1, max_size=40))
def test_normalize_sums_to_one(logs):
    p = normalize_powers(np.array(logs))
    assert abs(p.sum() - 1.0) < 1e-12


def test_angles_from_positions():
    dep, arr = update_angles(np.array([0.0, 100.0, 0.0]), np.array([100.0, 0.0, 100.0]))
    assert dep.azimuth == pytest.approx(90.0) and dep.elevation == pytest.approx(0.0)
    assert arr.elevation == pytest.approx(math.degrees(math.asin(100 / math.hypot(100, 100))))


def test_los_update():
    los = update_los(np.array([100.0, 0, 0]), np.array([0.0, 20.0, 0]), 5.0)
    assert los.D_LoS == pytest.approx(math.hypot(100, 100))
    assert los.departure.azimuth == pytest.approx(45.0)
    assert los.arrival.azimuth == pytest.approx(-135.0)
    still = update_los(np.array([100.0, 0, 0]), np.zeros(3), 7.0)
    assert still.D_LoS == 100.0
