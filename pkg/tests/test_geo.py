import math

import numpy as np
import pytest

from travel_features.errors import InvalidCoordinateError
from travel_features.models.geo import (
    EARTH_RADIUS_M,
    GeoPoint,
    from_local_xy,
    haversine_m,
    haversine_matrix,
    to_local_xy,
)


def test_identical_points_are_zero_apart():
    p = GeoPoint(109.5, 36.6)
    assert haversine_m(p, p) == 0.0


def test_one_degree_of_latitude_on_the_equator():
    assert haversine_m(GeoPoint(0, 0), GeoPoint(0, 1)) == pytest.approx(111_195, abs=1.0)


def test_antipodal_distance_is_half_circumference():
    assert haversine_m(GeoPoint(0, 0), GeoPoint(180, 0)) == pytest.approx(math.pi * EARTH_RADIUS_M)


def test_symmetry_and_triangle_inequality():
    rng = np.random.default_rng(0)
    pts = [GeoPoint(float(lng), float(lat)) for lng, lat in
           zip(rng.uniform(-180, 180, 300), rng.uniform(-90, 90, 300))]
    for a, b in zip(pts[:100], pts[100:200]):
        assert haversine_m(a, b) == haversine_m(b, a)
    for a, b, c in zip(pts[:100], pts[100:200], pts[200:]):
        assert haversine_m(a, c) <= (haversine_m(a, b) + haversine_m(b, c)) * (1 + 1e-6)


@pytest.mark.parametrize("lng,lat", [(181.0, 0.0), (0.0, -90.5), (float("nan"), 1.0), (0.0, float("inf"))])
def test_invalid_coordinates_are_rejected(lng, lat):
    with pytest.raises(InvalidCoordinateError):
        GeoPoint(lng, lat)


def test_matrix_matches_scalar_distance():
    rng = np.random.default_rng(1)
    a = np.column_stack([rng.uniform(109, 110, 5), rng.uniform(36, 37, 5)])
    b = np.column_stack([rng.uniform(109, 110, 4), rng.uniform(36, 37, 4)])
    dist = haversine_matrix(a, b)
    assert dist.shape == (5, 4)
    for i in range(5):
        for j in range(4):
            assert dist[i, j] == pytest.approx(haversine_m(GeoPoint(*a[i]), GeoPoint(*b[j])), rel=1e-12)


def test_tangent_frame_inverts_and_measures_meters():
    origin = np.array([109.49, 36.6])
    xy = np.array([[100.0, 0.0], [0.0, -250.0], [30.0, 40.0]])
    back = to_local_xy(from_local_xy(xy, origin), origin)
    np.testing.assert_allclose(back, xy, atol=1e-6)

    east = from_local_xy(np.array([[100.0, 0.0]]), origin)[0]
    assert haversine_m(GeoPoint(*origin), GeoPoint(*east)) == pytest.approx(100.0, rel=1e-4)
