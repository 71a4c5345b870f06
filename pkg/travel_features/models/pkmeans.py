"""
Seeded K-means over trajectory points and life-circle construction.

P-KMEANS takes K and the starting centroids from the POI seeds; the unseeded
baseline draws K starting centroids at random from the data. Both share one
Lloyd loop: haversine nearest-center assignment (ties to the lowest index),
arithmetic-mean centroid update.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from ..errors import InputDataError, NumericalError
from .geo import GeoPoint, PointsLike, as_lnglat_array, haversine_matrix, to_geopoints
from .meanshift import SeedSet

logger = logging.getLogger(__name__)

LIFE_CIRCLE_RADIUS_M = 500.0
MONOTONE_RTOL = 1e-6


@dataclass
class ClusterModel:
    """Fitted K-means partition of a point set"""

    k: int
    centers: List[GeoPoint]
    assignments: np.ndarray
    inertia: float
    n_iterations: int
    inertia_history: List[float] = field(default_factory=list)

    def __post_init__(self):
        if len(self.centers) != self.k:
            raise ValueError(f"Expected {self.k} centers, got {len(self.centers)}")
        self.assignments = np.asarray(self.assignments, dtype=int)
        if len(self.assignments) and (self.assignments.min() < 0 or self.assignments.max() >= self.k):
            raise ValueError("Assignment outside [0, k)")

    @property
    def centers_array(self) -> np.ndarray:
        return as_lnglat_array(self.centers)

    def cluster_sizes(self, point_indices: Optional[Sequence[int]] = None) -> np.ndarray:
        labels = self.assignments if point_indices is None else self.assignments[np.asarray(point_indices, dtype=int)]
        return np.bincount(labels, minlength=self.k)

    def center_rows(self) -> List[Dict[str, object]]:
        sizes = self.cluster_sizes()
        return [
            {"k": i, "lng": c.lng, "lat": c.lat, "n_k": int(sizes[i])}
            for i, c in enumerate(self.centers)
        ]


@dataclass(frozen=True)
class LifeCircle:
    """A passenger activity zone around a trajectory-cluster centroid"""

    center: GeoPoint
    radius_m: float
    n_k: int
    cluster: int = -1

    def __post_init__(self):
        if not self.radius_m > 0:
            raise ValueError(f"Life circle radius must be > 0, got {self.radius_m}")


def _assign(points: np.ndarray, centers: np.ndarray):
    dist = haversine_matrix(points, centers)
    labels = np.argmin(dist, axis=1)
    return labels, dist[np.arange(len(points)), labels]


def _reseed_empty(points: np.ndarray, centers: np.ndarray, labels: np.ndarray, nearest: np.ndarray) -> int:
    """Move each empty center onto the point farthest from its current center"""
    k = len(centers)
    sizes = np.bincount(labels, minlength=k)
    empty = np.flatnonzero(sizes == 0)
    if len(empty) == 0:
        return 0

    order = np.argsort(-nearest, kind="stable")
    taken = 0
    for j in empty:
        # Only steal from clusters that keep at least one member.
        for idx in order[taken:]:
            taken += 1
            if sizes[labels[idx]] > 1:
                sizes[labels[idx]] -= 1
                labels[idx] = j
                nearest[idx] = 0.0
                sizes[j] = 1
                centers[j] = points[idx]
                break
    logger.debug(f"Re-seeded {len(empty)} empty clusters")
    return len(empty)


def lloyd(
    points: np.ndarray, init_centers: np.ndarray, epsilon: float = 1.0, max_iter: int = 300
) -> ClusterModel:
    """
    Lloyd iterations from fixed starting centers.

    Each sweep assigns every point to its nearest center and moves centers to
    the mean of their members. The loop stops when assignments repeat, the
    largest center move is below epsilon meters, or max_iter is reached. A
    final assignment against the returned centers keeps the partition
    Voronoi-consistent.
    """
    pts = np.asarray(points, dtype=float)
    centers = np.array(init_centers, dtype=float, copy=True)
    k = len(centers)
    if k < 1:
        raise InputDataError("At least one starting center is required")
    if k > len(pts):
        raise InputDataError(f"Cannot fit {k} clusters to {len(pts)} points")

    prev_labels = None
    history: List[float] = []
    n_iter = 0

    for n_iter in range(1, max_iter + 1):
        labels, nearest = _assign(pts, centers)
        _reseed_empty(pts, centers, labels, nearest)
        history.append(float(np.sum(nearest ** 2)))
        if len(history) > 1 and history[-1] > history[-2] * (1 + MONOTONE_RTOL):
            logger.warning(f"Inertia increased at sweep {n_iter}: {history[-2]:.6g} -> {history[-1]:.6g}")

        new_centers = np.vstack([
            pts[labels == j].mean(axis=0) if np.any(labels == j) else centers[j]
            for j in range(k)
        ])
        shift = haversine_matrix(new_centers, centers).diagonal().max()
        centers = new_centers

        if prev_labels is not None and np.array_equal(labels, prev_labels):
            break
        if shift < epsilon:
            break
        prev_labels = labels

    labels, nearest = _assign(pts, centers)
    inertia = float(np.sum(nearest ** 2))
    logger.debug(f"Lloyd converged: k={k}, iterations={n_iter}, inertia={inertia:.6g}")

    return ClusterModel(
        k=k,
        centers=to_geopoints(centers),
        assignments=labels,
        inertia=inertia,
        n_iterations=n_iter,
        inertia_history=history,
    )


def p_kmeans(points: PointsLike, seeds: SeedSet, epsilon: float = 1.0, max_iter: int = 300) -> ClusterModel:
    """
    Seeded K-means: K = number of POI seeds, starting centroids = seed locations.

    Args:
        points: Trajectory points
        seeds: POI seeds from Mean-Shift
        epsilon: Center-shift stopping threshold in meters
        max_iter: Lloyd sweep cap

    Returns:
        Fitted ClusterModel
    """
    pts = as_lnglat_array(points)
    if seeds.k < 1:
        raise InputDataError("Seed set is empty")
    if seeds.k > len(pts):
        raise InputDataError(f"{seeds.k} seeds exceed the {len(pts)} available points")
    return lloyd(pts, seeds.as_array(), epsilon=epsilon, max_iter=max_iter)


def unseeded_kmeans(
    points: PointsLike, k: int, rng_seed: int = 0, epsilon: float = 1.0, max_iter: int = 300
) -> ClusterModel:
    """Baseline K-means with k starting centers drawn uniformly (without replacement) from the points"""
    pts = as_lnglat_array(points)
    if k < 1:
        raise InputDataError(f"k must be >= 1, got {k}")
    if k > len(pts):
        raise InputDataError(f"Cannot draw {k} starting centers from {len(pts)} points")
    rng = np.random.default_rng(rng_seed)
    init = pts[rng.choice(len(pts), size=k, replace=False)]
    return lloyd(pts, init, epsilon=epsilon, max_iter=max_iter)


def extend_seeds(points: PointsLike, seeds: SeedSet, k: int) -> np.ndarray:
    """
    Seeded starting centers for an arbitrary K.

    Fewer than |seeds|: the k seeds with the most members (stable on ties).
    More than |seeds|: all seeds plus farthest-first data points.
    """
    pts = as_lnglat_array(points)
    if k < 1 or k > len(pts):
        raise InputDataError(f"k={k} outside [1, {len(pts)}]")

    seed_arr = seeds.as_array()
    if k <= len(seed_arr):
        order = np.argsort(-np.asarray(seeds.member_count), kind="stable")[:k]
        return seed_arr[np.sort(order)]

    centers = list(seed_arr) if len(seed_arr) else [pts[0]]
    nearest = haversine_matrix(pts, np.vstack(centers)).min(axis=1)
    while len(centers) < k:
        idx = int(np.argmax(nearest))
        centers.append(pts[idx])
        nearest = np.minimum(nearest, haversine_matrix(pts, pts[idx:idx + 1])[:, 0])
    return np.vstack(centers)


def life_circles(
    model: ClusterModel,
    radius_m: float = LIFE_CIRCLE_RADIUS_M,
    point_indices: Optional[Sequence[int]] = None,
) -> List[LifeCircle]:
    """
    One life circle per non-empty cluster.

    Args:
        model: Fitted model
        radius_m: Circle radius (DIS), 500 m by default
        point_indices: Restrict member counts to these points (one passenger's
            records); all points when omitted

    Returns:
        Circles ordered by cluster index, n_k = member count
    """
    sizes = model.cluster_sizes(point_indices)
    return [
        LifeCircle(center=model.centers[j], radius_m=float(radius_m), n_k=int(sizes[j]), cluster=int(j))
        for j in range(model.k)
        if sizes[j] > 0
    ]


def passenger_life_circles(
    model: ClusterModel, point_uids: Sequence[str], radius_m: float = LIFE_CIRCLE_RADIUS_M
) -> Dict[str, List[LifeCircle]]:
    """Life circles per passenger from a model fitted on all passengers' points"""
    uids = np.asarray(point_uids)
    if len(uids) != len(model.assignments):
        raise NumericalError("point_uids must align with the model's assignments")
    index: Dict[str, List[int]] = {}
    for i, uid in enumerate(uids.tolist()):
        index.setdefault(uid, []).append(i)
    return {uid: life_circles(model, radius_m, idx) for uid, idx in index.items()}
