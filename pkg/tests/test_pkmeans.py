import math

import numpy as np
import pytest

from travel_features.errors import InputDataError
from travel_features.models.geo import GeoPoint, haversine_m, haversine_matrix
from travel_features.models.meanshift import SeedSet, mean_shift_cluster
from travel_features.models.pkmeans import (
    LIFE_CIRCLE_RADIUS_M,
    ClusterModel,
    extend_seeds,
    life_circles,
    lloyd,
    p_kmeans,
    passenger_life_circles,
    unseeded_kmeans,
)

from .conftest import FIVE_CENTERS_XY, planted_blobs


def _seed_set(arr, counts=None):
    counts = counts or [1] * len(arr)
    return SeedSet(seeds=[GeoPoint(*p) for p in arr], member_count=counts)


def _brute_force_lloyd(points, centers, max_iter=300):
    """Straight-line Lloyd: nearest center by scalar haversine, mean update, stop when labels repeat"""
    pts = [tuple(p) for p in points]
    cents = [tuple(c) for c in centers]
    labels = None
    for _ in range(max_iter):
        new_labels = []
        for p in pts:
            d = [haversine_m(GeoPoint(*p), GeoPoint(*c)) for c in cents]
            new_labels.append(d.index(min(d)))
        cents = [
            tuple(np.mean([pts[i] for i, lab in enumerate(new_labels) if lab == j], axis=0))
            for j in range(len(cents))
        ]
        if new_labels == labels:
            break
        labels = new_labels
    return np.array(labels), np.array(cents)


def test_points_equal_to_seeds_converge_immediately():
    pts, _ = planted_blobs([(0.0, 0.0), (3000.0, 0.0), (0.0, 3000.0)], 1, 1.0)
    model = p_kmeans(pts, _seed_set(pts))
    assert model.inertia == 0.0
    assert model.n_iterations == 1
    assert model.assignments.tolist() == [0, 1, 2]


def test_single_cluster_center_is_the_mean(five_blobs):
    pts, _ = five_blobs
    model = p_kmeans(pts, _seed_set(pts[:1]))
    np.testing.assert_allclose(model.centers_array[0], pts.mean(axis=0), atol=1e-12)


def test_matches_brute_force_lloyd_from_planted_seeds():
    pts, _ = planted_blobs(FIVE_CENTERS_XY, 40, 400.0, rng_seed=4)
    seeds, _ = planted_blobs([(x + 700.0, y - 500.0) for x, y in FIVE_CENTERS_XY], 1, 1.0, rng_seed=5)
    model = p_kmeans(pts, _seed_set(seeds), epsilon=1e-9, max_iter=300)
    labels, centers = _brute_force_lloyd(pts, seeds)
    assert model.assignments.tolist() == labels.tolist()
    np.testing.assert_allclose(model.centers_array, centers, atol=1e-9)


def test_partition_is_voronoi_consistent_and_monotone(five_blobs):
    pts, _ = five_blobs
    model = unseeded_kmeans(pts, 7, rng_seed=1)
    nearest = np.argmin(haversine_matrix(pts, model.centers_array), axis=1)
    assert model.assignments.tolist() == nearest.tolist()
    assert model.inertia >= 0
    for before, after in zip(model.inertia_history, model.inertia_history[1:]):
        assert after <= before * (1 + 1e-6)


def test_unseeded_is_deterministic_per_seed(five_blobs):
    pts, _ = five_blobs
    a = unseeded_kmeans(pts, 5, rng_seed=3)
    b = unseeded_kmeans(pts, 5, rng_seed=3)
    assert a.assignments.tolist() == b.assignments.tolist()
    assert a.centers == b.centers
    assert a.inertia == b.inertia


def test_k_equal_to_point_count_has_zero_inertia():
    pts, _ = planted_blobs([(0.0, 0.0)], 12, 300.0, rng_seed=8)
    assert unseeded_kmeans(pts, len(pts), rng_seed=0).inertia == 0.0


def test_too_many_clusters_is_rejected():
    pts, _ = planted_blobs([(0.0, 0.0)], 3, 30.0)
    with pytest.raises(InputDataError):
        unseeded_kmeans(pts, 4)
    with pytest.raises(InputDataError):
        p_kmeans(pts, SeedSet(seeds=[], member_count=[]))


def test_seeded_inertia_not_worse_than_random_restarts(five_blobs):
    pts, _ = five_blobs
    seeded = p_kmeans(pts, mean_shift_cluster(pts))
    unseeded = [unseeded_kmeans(pts, seeded.k, rng_seed=s).inertia for s in range(10)]
    assert seeded.inertia <= np.mean(unseeded) * (1 + 1e-9)


def test_seeded_run_converges_no_slower_than_the_unseeded_median():
    pts, _ = planted_blobs(FIVE_CENTERS_XY, 200, 50.0, rng_seed=5)
    seeded = p_kmeans(pts, mean_shift_cluster(pts))
    assert seeded.k == 5
    unseeded = [unseeded_kmeans(pts, seeded.k, rng_seed=s) for s in range(10)]
    assert seeded.n_iterations <= np.median([m.n_iterations for m in unseeded])
    assert seeded.inertia <= np.mean([m.inertia for m in unseeded]) * (1 + 1e-9)


def test_extend_seeds_shrinks_by_member_count_and_grows_farthest_first(five_blobs):
    pts, _ = five_blobs
    seeds = _seed_set(pts[[0, 60, 120]], counts=[5, 50, 20])
    np.testing.assert_array_equal(extend_seeds(pts, seeds, 2), pts[[60, 120]])

    grown = extend_seeds(pts, seeds, 5)
    assert grown.shape == (5, 2)
    np.testing.assert_array_equal(grown[:3], pts[[0, 60, 120]])
    assert len({tuple(c) for c in grown}) == 5


def test_life_circles_carry_member_counts():
    model = ClusterModel(
        k=3,
        centers=[GeoPoint(109.5, 36.6), GeoPoint(109.6, 36.6), GeoPoint(109.7, 36.6)],
        assignments=np.array([0] * 3 + [2] * 7),
        inertia=0.0,
        n_iterations=1,
    )
    circles = life_circles(model)
    assert [c.n_k for c in circles] == [3, 7]
    assert [c.cluster for c in circles] == [0, 2]
    assert all(c.radius_m == LIFE_CIRCLE_RADIUS_M == 500.0 for c in circles)


def test_passenger_life_circles_split_counts_by_uid(five_blobs):
    pts, _ = five_blobs
    model = unseeded_kmeans(pts, 5, rng_seed=0)
    uids = ["a" if i % 3 else "b" for i in range(len(pts))]
    per_uid = passenger_life_circles(model, uids)
    assert sum(c.n_k for c in per_uid["a"]) == uids.count("a")
    assert sum(c.n_k for c in per_uid["b"]) == uids.count("b")
    assert math.isclose(sum(c.n_k for circles in per_uid.values() for c in circles), len(pts))
