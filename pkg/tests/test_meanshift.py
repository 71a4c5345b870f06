import math
import time

import numpy as np
import pytest

from travel_features.errors import ConfigError, IsolatedPointError
from travel_features.models.geo import GeoPoint, from_local_xy, haversine_matrix
from travel_features.models.meanshift import (
    MeanShiftConfig,
    SeedSet,
    mean_shift_cluster,
    mean_shift_vector,
    merge_seed_sets,
    seed_all_labels,
)
from travel_features.utils.ingest import ALL_LABELS, PoiLabel, PoiRecord
from travel_features.utils.synthgen import SynthConfig, generate_city

from .conftest import ORIGIN, planted_blobs


def test_vector_vanishes_at_the_center_of_a_symmetric_square():
    square = np.array([[0.001, 0.0], [-0.001, 0.0], [0.0, 0.001], [0.0, -0.001]])
    east, north = mean_shift_vector(GeoPoint(0.0, 0.0), square, MeanShiftConfig())
    assert math.hypot(east, north) < 1e-9


def test_vector_is_zero_for_a_lone_point_at_x():
    x = GeoPoint(109.5, 36.6)
    assert mean_shift_vector(x, [x], MeanShiftConfig()) == (0.0, 0.0)


def test_single_neighbour_100m_east():
    east_point = from_local_xy(np.array([[100.0, 0.0]]), ORIGIN)
    east, north = mean_shift_vector(GeoPoint(*ORIGIN), east_point, MeanShiftConfig(bandwidth_h=500.0))
    assert east == pytest.approx(100.0, abs=1e-6)
    assert north == pytest.approx(0.0, abs=1e-6)


def test_isolated_point_raises_for_flat_kernel():
    far = from_local_xy(np.array([[10_000.0, 0.0]]), ORIGIN)
    with pytest.raises(IsolatedPointError):
        mean_shift_vector(GeoPoint(*ORIGIN), far, MeanShiftConfig())


@pytest.mark.parametrize(
    "kwargs",
    [{"bandwidth_h": 0}, {"epsilon": -1}, {"kernel": "epanechnikov"}, {"max_iter": 0}, {"merge_radius": -5}],
)
def test_config_rejects_out_of_range_values(kwargs):
    with pytest.raises(ConfigError):
        MeanShiftConfig(**kwargs)


def test_identical_points_collapse_to_one_seed():
    pts = np.tile(ORIGIN, (50, 1))
    seeds = mean_shift_cluster(pts)
    assert seeds.k == 1
    assert seeds.member_count == [50]
    assert seeds.seeds[0] == GeoPoint(*ORIGIN)


def test_two_blobs_5km_apart_give_seeds_near_blob_means():
    pts, owner = planted_blobs([(0.0, 0.0), (5000.0, 0.0)], 80, 50.0, rng_seed=2)
    seeds = mean_shift_cluster(pts, MeanShiftConfig(bandwidth_h=500.0))
    assert seeds.k == 2
    assert sum(seeds.member_count) == len(pts)
    blob_means = np.vstack([pts[owner == b].mean(axis=0) for b in range(2)])
    dist = haversine_matrix(seeds.as_array(), blob_means)
    assert np.all(dist.min(axis=1) < 25.0)


def test_five_blobs_recover_five_fixed_point_seeds(five_blobs):
    pts, _ = five_blobs
    config = MeanShiftConfig()
    seeds = mean_shift_cluster(pts, config)
    assert seeds.k == 5
    for s in seeds.seeds:
        east, north = mean_shift_vector(s, pts, config)
        assert math.hypot(east, north) < config.epsilon


def test_clustering_is_deterministic_and_permutation_stable(five_blobs):
    pts, _ = five_blobs
    config = MeanShiftConfig()
    first = mean_shift_cluster(pts, config)
    assert mean_shift_cluster(pts, config) == first

    shuffled = pts[np.random.default_rng(9).permutation(len(pts))]
    other = mean_shift_cluster(shuffled, config)
    assert other.k == first.k
    dist = haversine_matrix(first.as_array(), other.as_array())
    assert np.all(dist.min(axis=1) <= config.effective_merge_radius)


def test_gaussian_kernel_also_recovers_blobs(five_blobs):
    pts, _ = five_blobs
    seeds = mean_shift_cluster(pts, MeanShiftConfig(kernel="gaussian", bandwidth_h=300.0))
    assert seeds.k == 5


def test_per_label_seeding_and_merge():
    food, _ = planted_blobs([(0.0, 0.0), (6000.0, 0.0)], 20, 40.0, rng_seed=1)
    hotel, _ = planted_blobs([(0.0, 6000.0)], 20, 40.0, rng_seed=2)
    pois = [PoiRecord(GeoPoint(*p), f"f{i}", PoiLabel.FOOD) for i, p in enumerate(food)]
    pois += [PoiRecord(GeoPoint(*p), f"h{i}", PoiLabel.HOTEL) for i, p in enumerate(hotel)]

    per_label = seed_all_labels(pois, labels=[PoiLabel.FOOD, PoiLabel.HOTEL, PoiLabel.FINANCE])
    assert [s.k for s in per_label] == [2, 1, 0]
    assert per_label[2].source_label is PoiLabel.FINANCE

    merged = merge_seed_sets(per_label)
    assert merged.k == 3
    assert sum(merged.member_count) == len(pois)
    assert {row["label"] for row in per_label[0].to_rows()} == {"food"}


def test_seed_set_length_mismatch():
    with pytest.raises(ValueError):
        SeedSet(seeds=[GeoPoint(0, 0)], member_count=[1, 2])


def test_ten_thousand_poi_city_yields_five_seeds_per_label_at_blob_means():
    config = SynthConfig(rng_seed=0, n_blobs_per_label=5, pois_per_blob=118, n_passengers=0)
    assert config.blob_sigma_m == 50.0 and config.min_center_separation_m >= 5000.0
    city = generate_city(config)
    assert len(city.pois) == 10_030

    start = time.perf_counter()
    seed_sets = seed_all_labels(city.pois)
    assert time.perf_counter() - start < 10.0

    for label, seeds in zip(ALL_LABELS, seed_sets):
        assert seeds.k == 5
        members = city.pois_of(label)
        blobs = sorted({p.area for p in members})
        means = np.array([
            np.mean([[p.location.lng, p.location.lat] for p in members if p.area == blob], axis=0)
            for blob in blobs
        ])
        dist = haversine_matrix(seeds.as_array(), means)
        assert sorted(dist.argmin(axis=1).tolist()) == [0, 1, 2, 3, 4]
        assert dist.min(axis=1).max() <= 25.0
