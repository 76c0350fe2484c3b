import math

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given
from hypothesis import strategies as hs

from nsmimo.geometry import (GeometryError, MotionState, advance, cartesian_to_angles, unit_direction,
                             velocity_vector, wrap_azimuth)


@pytest.mark.parametrize("az, el, expected", [
    (0.0, 0.0, (1.0, 0.0, 0.0)),
    (90.0, 0.0, (0.0, 1.0, 0.0)),
    (45.0, 60.0, (math.cos(math.radians(60)) / math.sqrt(2), math.cos(math.radians(60)) / math.sqrt(2),
                  math.sin(math.radians(60)))),
])
def test_unit_direction(az, el, expected):
    npt.assert_allclose(unit_direction(az, el), expected, atol=1e-15)


def test_velocity_vector():
    npt.assert_array_equal(velocity_vector(MotionState(0.0, 33.0, 12.0)), 0.0)
    npt.assert_allclose(velocity_vector(MotionState(20.0, 120.0, 0.0)), [-10.0, 20 * math.sqrt(3) / 2, 0.0],
                        atol=1e-12)
    npt.assert_allclose(velocity_vector(MotionState(5.0, 0.0, 90.0)), [0.0, 0.0, 5.0], atol=1e-15)


def test_negative_speed_rejected():
    with pytest.raises(ValueError, match="speed"):
        MotionState(-1.0, 0.0, 0.0)


@pytest.mark.parametrize("p, az, el", [
    ((1.0, 0.0, 0.0), 0.0, 0.0),
    ((-1.0, -1.0, 0.0), -135.0, 0.0),
    ((0.0, 100.0, 0.0), 90.0, 0.0),
    ((100.0, 0.0, 100.0), 0.0, 45.0),
    ((-1.0, 1.0, 0.0), 135.0, 0.0),
    ((1.0, -1.0, 0.0), -45.0, 0.0),
])
def test_cartesian_to_angles_quadrants(p, az, el):
    a = cartesian_to_angles(np.array(p))
    assert a.azimuth == pytest.approx(az, abs=1e-12)
    assert a.elevation == pytest.approx(el, abs=1e-12)


def test_pole_has_zero_azimuth():
    a = cartesian_to_angles(np.array([0.0, 0.0, 2.0]))
    assert a.azimuth == 0.0 and a.elevation == pytest.approx(90.0)


def test_collapsed_vector_raises_with_label():
    with pytest.raises(GeometryError, match="ray 7"):
        cartesian_to_angles(np.array([1e-4, 0.0, 0.0]), "ray 7")


def test_advance():
    npt.assert_array_equal(advance((1, 2, 3), (0, 0, 0), 10), [1, 2, 3])
    npt.assert_array_equal(advance((0, 0, 0), (15, 0, 0), 2), [30, 0, 0])
    npt.assert_allclose(advance((200, 0, 0), (-10, 17.3205, 0), 1), [190, 17.3205, 0])


@given(hs.floats(-179.9, 179.9), hs.floats(-89.9, 89.9), hs.floats(0.01, 1e4))
def test_angles_round_trip(az, el, r):
    p = r * unit_direction(az, el)
    a = cartesian_to_angles(p)
    assert a.elevation == pytest.approx(el, abs=1e-7)
    assert wrap_azimuth(a.azimuth - az) == pytest.approx(0.0, abs=1e-7)


@given(hs.floats(-1e4, 1e4))
def test_wrap_azimuth_range(x):
    w = wrap_azimuth(x)
    assert -180.0 <= w < 180.0 or math.isclose(w, 180.0)
    assert math.isclose(math.cos(math.radians(w)), math.cos(math.radians(x)), abs_tol=1e-9)
