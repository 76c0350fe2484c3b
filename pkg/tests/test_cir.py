import math

import numpy as np
import numpy.testing as npt
import pytest

from nsmimo import AntennaArray, ChannelSimulator, run, transfer_function
from nsmimo.cir import LOS_ID, CirRecord, doppler_frequency, los_coefficient, nlos_coefficient
from nsmimo.geometry import SPEED_OF_LIGHT

from conftest import make_config


def test_doppler_frequency_values():
    lam = 0.15
    assert doppler_frequency(np.zeros(3), np.zeros(3), np.zeros(3), [1, 0, 0], [0, 1, 0], lam) == 0.0
    assert doppler_frequency([20, 0, 0], np.zeros(3), np.zeros(3), [0, 1, 0], [1, 0, 0], lam) == pytest.approx(
        20 / lam)
    assert doppler_frequency(np.zeros(3), np.zeros(3), [5, 0, 0], [0, 1, 0], [1, 0, 0], lam) == pytest.approx(
        -5 / lam)


def test_single_ray_magnitude():
    arr = AntennaArray.single()
    h = nlos_coefficient(0.3, 2.0, [[1, 0, 0]], [[0, 1, 0]], np.array([[0.7, 1.1, -2.0, 0.4]]), np.array([np.inf]),
                         [0.0], arr, arr, 0.1)
    assert abs(h[0, 0]) == pytest.approx(math.sqrt(0.3 / 3.0), rel=1e-12)


def test_mean_power_over_random_phases():
    rng = np.random.default_rng(0)
    arr = AntennaArray.single()
    M, n = 20, 20000
    phi = rng.normal(size=(M, 3))
    phi /= np.linalg.norm(phi, axis=1, keepdims=True)
    psi = rng.normal(size=(M, 3))
    psi /= np.linalg.norm(psi, axis=1, keepdims=True)
    p = np.empty(n)
    for k in range(n):
        h = nlos_coefficient(0.4, 1.0, phi, psi, rng.uniform(-np.pi, np.pi, (M, 4)), np.full(M, np.inf),
                             np.zeros(M), arr, arr, 0.1)
        p[k] = abs(h[0, 0]) ** 2
    assert abs(p.mean() - 0.2) < 3 * p.std() / math.sqrt(n)


def test_half_wavelength_spacing_phase():
    lam = 0.1
    rx = AntennaArray.ula(2, lam / 2, "y")
    h = nlos_coefficient(1.0, 0.0, [[1, 0, 0]], [[0, 1, 0]], np.zeros((1, 4)), np.array([np.inf]), [0.0],
                         AntennaArray.single(), rx, lam)
    assert abs(abs(np.angle(h[1, 0] / h[0, 0])) - np.pi) < 1e-9


def test_los_coefficient_magnitude():
    arr = AntennaArray.single()
    assert abs(los_coefficient(0.0, [1, 0, 0], 0.3, 0.1, 0.0, arr, arr, 0.1)[0, 0]) == 0.0
    assert abs(los_coefficient(5.514, [1, 0, 0], 0.3, 0.1, 0.0, arr, arr, 0.1)[0, 0]) == pytest.approx(
        math.sqrt(5.514 / 6.514), rel=1e-12)
    assert abs(los_coefficient(1e12, [1, 0, 0], 0.3, 0.1, 0.0, arr, arr, 0.1)[0, 0]) == pytest.approx(1.0)


def test_zero_duration_single_snapshot():
    rec = run(make_config(duration=0.0))
    assert rec.n_snapshots == 1 and rec.times[0] == 0.0


def test_run_is_bit_identical():
    cfg = make_config(preset="uma-los", speed=60.0)
    assert run(cfg, 2).identical(run(cfg, 2))
    assert not run(cfg, 2).identical(run(cfg, 3))


def test_snapshot_invariants():
    cfg = make_config(preset="uma-los", speed=60.0, duration=1.0, bd=20)
    rec = run(cfg)
    cl = rec.cluster_ids != LOS_ID
    sums = np.bincount(rec.snapshot_index[cl], rec.powers[cl], rec.n_snapshots)
    npt.assert_allclose(sums, 1.0, atol=1e-12)
    assert np.all(np.bincount(rec.snapshot_index, minlength=rec.n_snapshots)[:] >= 1)
    for i in range(0, rec.n_snapshots, 50):
        snap = rec.snapshot(i)
        order = np.lexsort((snap.cluster_ids, snap.delays))
        npt.assert_array_equal(order, np.arange(snap.N))


def test_los_entry_at_los_delay():
    cfg = make_config(preset="uma-los", speed=30.0, duration=0.5)
    rec = run(cfg)
    los = rec.cluster_ids == LOS_ID
    assert los.sum() == rec.n_snapshots
    d = np.linalg.norm(cfg.los_vector + cfg.ms_velocity * rec.times[:, None], axis=1) / SPEED_OF_LIGHT
    npt.assert_allclose(rec.delays[los], d, rtol=1e-14)
    npt.assert_allclose(np.abs(rec.coefficients[los, 0, 0]), math.sqrt(5.514 / 6.514), rtol=1e-12)


def test_first_path_placement_merges_los():
    cfg = make_config(preset="uma-los", simulation="los_placement = first-path")
    rec = run(cfg)
    assert not np.any(rec.cluster_ids == LOS_ID)


def test_evaluate_subset_matches_full_run():
    cfg = make_config(preset="uma-los", speed=40.0, duration=0.3, simulation="virtual_delay_input = per-step")
    sim = ChannelSimulator(cfg, 0)
    full = sim.evaluate()
    part = sim.evaluate([7, 100, 250])
    for j, i in enumerate([7, 100, 250]):
        a, b = full.snapshot(i), part.snapshot(j)
        npt.assert_array_equal(a.cluster_ids, b.cluster_ids)
        npt.assert_allclose(a.delays, b.delays, rtol=1e-13)
        npt.assert_allclose(a.coefficients, b.coefficients, rtol=1e-10, atol=1e-14)


def test_incremental_evaluation_matches_one_shot():
    cfg = make_config(preset="uma-los", speed=40.0, duration=0.3, simulation="virtual_delay_input = per-step")
    full = ChannelSimulator(cfg, 1).evaluate()
    sim = ChannelSimulator(cfg, 1)
    for i in (3, 40, 41, 299):
        a, b = full.snapshot(i), sim.evaluate([i]).snapshot(0)
        npt.assert_array_equal(a.cluster_ids, b.cluster_ids)
        npt.assert_allclose(a.delays, b.delays, rtol=1e-14)


def test_geometric_delay_track_matches_positions():
    from nsmimo.cir import _geometric_delay_track
    from nsmimo.kinematics import geometric_delay, update_positions
    cfg = make_config(speed=30.0, clusters="speed_A = uniform 0 10\nspeed_Z = uniform 0 10")
    sim = ChannelSimulator(cfg, 0)
    c = next(iter(sim.clusters.values()))
    t = np.linspace(0, 0.2, 50)
    npt.assert_allclose(_geometric_delay_track(c, cfg.ms_velocity, t),
                        geometric_delay(*update_positions(c, cfg.ms_velocity, t)), rtol=1e-12)


def test_cluster_count_matches_records():
    cfg = make_config(speed=60.0, duration=2.0, bd=20)
    sim = ChannelSimulator(cfg, 0)
    rec = sim.evaluate()
    npt.assert_array_equal(rec.cluster_counts, sim.cluster_count())


def test_frozen_world_constant_coefficients():
    cfg = make_config(preset="uma-los", speed=0.0, scenario="P_c = 0\nzeta = inf", duration=0.2)
    rec = run(cfg)
    h = rec.coefficients.reshape(rec.n_snapshots, -1)
    assert np.all(h == h[0])


def test_transfer_function_single_cluster():
    rec = CirRecord(fingerprint="x", sample_interval=1.0, carrier_frequency=1e9, n_rays=1, seed=0, realization=0,
                    rx_positions=np.zeros((1, 3)), tx_positions=np.zeros((1, 3)), steps=np.array([0, 1]),
                    offsets=np.array([0, 1, 2]), cluster_ids=np.array([0, 0]), delays=np.array([0.0, 1e-6]),
                    powers=np.ones(2), coefficients=np.array([0.3 + 0.4j, 0.6j]).reshape(2, 1, 1))
    f = np.arange(1990e6, 2010e6 + 0.05e6, 0.1e6) - 2000e6
    assert f.size == 201
    H = transfer_function(rec, f)
    npt.assert_allclose(H[0, 0, :, 0], 0.3 + 0.4j)
    period = transfer_function(rec, np.array([0.0, 1e6, 2.5e5]))[0, 0, :, 1]
    assert period[0] == pytest.approx(period[1])
    assert period[2] == pytest.approx(0.6j * np.exp(-2j * np.pi * 0.25))
