"""
Coordinate types and great-circle distance.

All distances are meters. Coordinates are WGS84 degrees stored as (lng, lat),
and every array helper in the package uses the same column order.
"""

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from ..errors import InvalidCoordinateError

EARTH_RADIUS_M = 6_371_000.0


@dataclass(frozen=True)
class GeoPoint:
    """A WGS84 location in degrees"""

    lng: float
    lat: float

    def __post_init__(self):
        validate_coordinates(self.lng, self.lat)


PointsLike = Union[Sequence[GeoPoint], np.ndarray]


def validate_coordinates(lng: float, lat: float) -> None:
    """Raise InvalidCoordinateError unless (lng, lat) is a finite, in-range pair"""
    try:
        lng_f, lat_f = float(lng), float(lat)
    except (TypeError, ValueError) as e:
        raise InvalidCoordinateError(f"Non-numeric coordinate ({lng!r}, {lat!r})") from e

    if not (math.isfinite(lng_f) and math.isfinite(lat_f)):
        raise InvalidCoordinateError(f"Non-finite coordinate ({lng_f}, {lat_f})")
    if not -180.0 <= lng_f <= 180.0:
        raise InvalidCoordinateError(f"Longitude out of range: {lng_f}")
    if not -90.0 <= lat_f <= 90.0:
        raise InvalidCoordinateError(f"Latitude out of range: {lat_f}")


def haversine_m(a: GeoPoint, b: GeoPoint) -> float:
    """
    Great-circle distance between two points on a sphere of radius 6,371,000 m.

    Args:
        a: First point
        b: Second point

    Returns:
        Distance in meters
    """
    for p in (a, b):
        if not (math.isfinite(p.lng) and math.isfinite(p.lat)):
            raise InvalidCoordinateError(f"Non-finite coordinate ({p.lng}, {p.lat})")

    phi1, phi2 = math.radians(a.lat), math.radians(b.lat)
    d_phi = phi2 - phi1
    d_lam = math.radians(b.lng - a.lng)
    h = math.sin(d_phi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(d_lam / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def as_lnglat_array(points: Union[PointsLike, Iterable[GeoPoint]]) -> np.ndarray:
    """Convert GeoPoints (or an existing array) into a float (n, 2) [lng, lat] array"""
    if isinstance(points, np.ndarray):
        arr = np.asarray(points, dtype=float)
        if arr.ndim == 1 and arr.shape[0] == 2:
            arr = arr.reshape(1, 2)
    else:
        pts = list(points)
        arr = np.array([[p.lng, p.lat] for p in pts], dtype=float).reshape(len(pts), 2)

    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InvalidCoordinateError(f"Expected an (n, 2) coordinate array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidCoordinateError("Coordinate array contains non-finite values")
    return arr


def to_geopoints(arr: np.ndarray) -> list:
    return [GeoPoint(float(lng), float(lat)) for lng, lat in np.asarray(arr, dtype=float)]


def haversine_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Vectorised haversine distances.

    Args:
        a: (n, 2) [lng, lat] degrees
        b: (m, 2) [lng, lat] degrees

    Returns:
        (n, m) distances in meters
    """
    a = np.asarray(a, dtype=float).reshape(-1, 2)
    b = np.asarray(b, dtype=float).reshape(-1, 2)
    lng1, lat1 = np.radians(a[:, 0])[:, None], np.radians(a[:, 1])[:, None]
    lng2, lat2 = np.radians(b[:, 0])[None, :], np.radians(b[:, 1])[None, :]

    h = np.sin((lat2 - lat1) / 2) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin((lng2 - lng1) / 2) ** 2
    return 2 * EARTH_RADIUS_M * np.arcsin(np.minimum(1.0, np.sqrt(h)))


def haversine_to(points: np.ndarray, origin: np.ndarray) -> np.ndarray:
    """Distances (meters) from every row of `points` to a single [lng, lat] origin"""
    return haversine_matrix(points, np.asarray(origin, dtype=float).reshape(1, 2))[:, 0]


def to_local_xy(points: np.ndarray, origin: np.ndarray) -> np.ndarray:
    """
    Project [lng, lat] degrees into a local equirectangular tangent frame.

    Returns an (n, 2) array of (meters east, meters north) of `origin`.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    origin = np.asarray(origin, dtype=float).reshape(2)
    scale = math.radians(1.0) * EARTH_RADIUS_M
    east = (pts[:, 0] - origin[0]) * scale * math.cos(math.radians(origin[1]))
    north = (pts[:, 1] - origin[1]) * scale
    return np.column_stack([east, north])


def from_local_xy(xy: np.ndarray, origin: np.ndarray) -> np.ndarray:
    """Inverse of to_local_xy"""
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    origin = np.asarray(origin, dtype=float).reshape(2)
    scale = math.radians(1.0) * EARTH_RADIUS_M
    lng = origin[0] + xy[:, 0] / (scale * math.cos(math.radians(origin[1])))
    lat = origin[1] + xy[:, 1] / scale
    return np.column_stack([lng, lat])
