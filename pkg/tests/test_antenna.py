import numpy as np
import numpy.testing as npt
import pytest

from nsmimo.antenna import PATTERNS, AntennaArray, half_wave_dipole


def test_ula_positions():
    arr = AntennaArray.ula(3, 0.05, "y")
    npt.assert_allclose(arr.positions, [[0, 0, 0], [0, 0.05, 0], [0, 0.1, 0]])
    assert arr.n_elements == 3


def test_single_isotropic_field_is_unit_vertical():
    fv, fh = AntennaArray.single().field(np.array([0.0, 30.0]), np.array([10.0, -70.0]))
    npt.assert_allclose(fv, 1.0)
    npt.assert_allclose(fh, 0.0)


def test_dipole_peak_at_horizon_and_null_at_zenith():
    fv, _ = half_wave_dipole(np.array([0.0, 90.0]), np.zeros(2))
    assert fv[0] == pytest.approx(1.0)
    assert abs(fv[1]) < 1e-12


def test_unknown_pattern_rejected():
    with pytest.raises(ValueError, match="pattern"):
        AntennaArray(np.zeros((1, 3)), "yagi")


def test_patterns_registered():
    assert {"isotropic", "isotropic-dual", "dipole"} <= set(PATTERNS)
