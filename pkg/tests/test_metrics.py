import numpy as np
import pytest

from travel_features.errors import InputDataError, UndefinedIndexError
from travel_features.models.geo import from_local_xy, haversine_matrix, to_local_xy
from travel_features.models.meanshift import mean_shift_cluster
from travel_features.models.metrics import (
    SWEEP_COLUMNS,
    PredictionReport,
    calinski_harabasz,
    davies_bouldin,
    evaluate_clustering,
    k_sweep,
    macro_mean_report,
    prediction_metrics,
    silhouette,
)

from .conftest import ORIGIN, planted_blobs


def _random_partition(n=200, k=4, seed=0):
    rng = np.random.default_rng(seed)
    xy = rng.normal(0.0, 2000.0, size=(n, 2))
    labels = np.concatenate([np.arange(k), rng.integers(0, k, size=n - k)])
    return from_local_xy(xy, ORIGIN), labels


def _silhouette_oracle(points, labels):
    dist = haversine_matrix(points, points)
    scores = []
    for i in range(len(points)):
        own = labels == labels[i]
        if own.sum() == 1:
            scores.append(0.0)
            continue
        a = dist[i, own].sum() / (own.sum() - 1)
        b = min(dist[i, labels == c].mean() for c in np.unique(labels) if c != labels[i])
        scores.append(0.0 if max(a, b) == 0 else (b - a) / max(a, b))
    return float(np.mean(scores))


def _tangent_groups(points, labels):
    xy = to_local_xy(points, points.mean(axis=0))
    return xy, {c: xy[labels == c] for c in np.unique(labels)}


def _calinski_harabasz_oracle(points, labels):
    xy, groups = _tangent_groups(points, labels)
    overall = xy.mean(axis=0)
    between = sum(len(g) * np.sum((g.mean(axis=0) - overall) ** 2) for g in groups.values())
    within = sum(np.sum((g - g.mean(axis=0)) ** 2) for g in groups.values())
    k, n = len(groups), len(xy)
    return (between / (k - 1)) / (within / (n - k))


def _davies_bouldin_oracle(points, labels):
    _, groups = _tangent_groups(points, labels)
    cents = {c: g.mean(axis=0) for c, g in groups.items()}
    scatter = {c: np.mean(np.linalg.norm(g - cents[c], axis=1)) for c, g in groups.items()}
    worst = [
        max((scatter[i] + scatter[j]) / np.linalg.norm(cents[i] - cents[j]) for j in groups if j != i)
        for i in groups
    ]
    return float(np.mean(worst))


@pytest.mark.parametrize("k", [2, 4, 8])
def test_indices_match_direct_formulas(k):
    points, labels = _random_partition(k=k, seed=k)
    assert silhouette(points, labels) == pytest.approx(_silhouette_oracle(points, labels), abs=1e-9)
    assert calinski_harabasz(points, labels) == pytest.approx(_calinski_harabasz_oracle(points, labels), rel=1e-6)
    assert davies_bouldin(points, labels) == pytest.approx(_davies_bouldin_oracle(points, labels), rel=1e-6)


def test_two_far_blobs_have_high_silhouette():
    points, labels = planted_blobs([(0.0, 0.0), (5000.0, 0.0)], 20, 50.0, rng_seed=3)
    assert silhouette(points, labels) > 0.9


def test_identical_points_score_zero_silhouette():
    points = np.tile(ORIGIN, (6, 1))
    assert silhouette(points, [0, 0, 0, 1, 1, 1]) == 0.0


def test_tight_clusters_have_zero_davies_bouldin():
    far = from_local_xy(np.array([[3000.0, 0.0]]), ORIGIN)[0]
    points = np.vstack([np.tile(ORIGIN, (3, 1)), np.tile(far, (3, 1))])
    assert davies_bouldin(points, [0, 0, 0, 1, 1, 1]) == 0.0


def test_calinski_harabasz_grows_as_clusters_tighten():
    centers = [(0.0, 0.0), (4000.0, 0.0), (0.0, 4000.0)]
    scores = []
    for sigma in (800.0, 200.0, 50.0):
        points, labels = planted_blobs(centers, 30, sigma, rng_seed=1)
        scores.append(calinski_harabasz(points, labels))
    assert scores == sorted(scores)


def test_indices_ignore_relabeling_and_east_west_translation():
    points, labels = _random_partition(seed=2)
    relabeled = np.array([3, 0, 2, 1])[labels]
    shifted = from_local_xy(to_local_xy(points, ORIGIN) + np.array([5000.0, 0.0]), ORIGIN)

    base = evaluate_clustering(points, labels)
    other = evaluate_clustering(points, relabeled)
    assert other.silhouette == pytest.approx(base.silhouette, abs=1e-9)
    assert other.calinski_harabasz == pytest.approx(base.calinski_harabasz, rel=1e-9)
    assert other.davies_bouldin == pytest.approx(base.davies_bouldin, rel=1e-9)

    assert calinski_harabasz(shifted, labels) == pytest.approx(base.calinski_harabasz, rel=1e-6)
    assert davies_bouldin(shifted, labels) == pytest.approx(base.davies_bouldin, rel=1e-6)
    assert -1.0 <= base.silhouette <= 1.0 and base.davies_bouldin >= 0 and base.calinski_harabasz >= 0


@pytest.mark.parametrize("labels", [[0, 0, 0, 0], [0, 1, 2, 3]])
def test_indices_are_undefined_outside_two_to_n_minus_one(labels):
    points, _ = _random_partition(n=4, k=1)
    for index in (silhouette, calinski_harabasz, davies_bouldin):
        with pytest.raises(UndefinedIndexError):
            index(points, labels)


def test_silhouette_subsample_is_deterministic(five_blobs):
    points, labels = five_blobs
    a = silhouette(points, labels, sample_size=100, rng_seed=4)
    assert a == silhouette(points, labels, sample_size=100, rng_seed=4)
    assert a > 0.9


def test_k_sweep_rows_and_planted_optimum(five_blobs):
    points, _ = five_blobs
    sweep = k_sweep(points, mean_shift_cluster(points), k_range=range(2, 13), n_runs=10, rng_seed=0)
    assert list(sweep.columns) == SWEEP_COLUMNS
    assert int(sweep["seeded"].sum()) == 11
    assert int((~sweep["seeded"].astype(bool)).sum()) == 110
    assert sweep.groupby("k").size().tolist() == [11] * 11

    seeded = sweep[sweep["seeded"].astype(bool)].set_index("k")
    assert seeded["silhouette"].idxmax() == 5
    assert seeded["calinski_harabasz"].idxmax() == 5
    assert seeded["davies_bouldin"].idxmin() == 5


def test_k_sweep_without_seeds_skips_impossible_k():
    points, _ = planted_blobs([(0.0, 0.0), (3000.0, 0.0)], 3, 40.0)
    sweep = k_sweep(points, k_range=range(2, 13), n_runs=2)
    assert sorted(sweep["k"].unique().tolist()) == [2, 3, 4, 5]
    assert not sweep["seeded"].astype(bool).any()


def test_perfect_prediction():
    y = [0, 1, 2, 1, 0]
    report = prediction_metrics(y, y, np.eye(3)[y], attribute="age")
    assert (report.recall, report.precision, report.f1, report.mae) == (1.0, 1.0, 1.0, 0.0)
    assert report.n == 5 and report.attribute == "age"


def test_majority_predictor_on_balanced_classes():
    y_true = [0, 1] * 10
    y_pred = [0] * 20
    report = prediction_metrics(y_true, y_pred, np.tile([0.5, 0.5], (20, 1)))
    assert report.recall == pytest.approx(0.5)
    assert report.precision == pytest.approx(0.25)
    assert report.mae == pytest.approx(0.5)


def test_prediction_metrics_ignore_passenger_order():
    rng = np.random.default_rng(0)
    y_true = rng.integers(0, 3, 40)
    theta = rng.dirichlet(np.ones(3), size=40)
    y_pred = theta.argmax(axis=1)
    perm = rng.permutation(40)
    a = prediction_metrics(y_true, y_pred, theta)
    b = prediction_metrics(y_true[perm], y_pred[perm], theta[perm])
    assert a.recall == pytest.approx(b.recall)
    assert a.precision == pytest.approx(b.precision)
    assert a.f1 == pytest.approx(b.f1)
    assert a.mae == pytest.approx(b.mae)


def test_prediction_metrics_reject_empty_or_misaligned_input():
    with pytest.raises(InputDataError):
        prediction_metrics([], [], np.empty((0, 2)))
    with pytest.raises(InputDataError):
        prediction_metrics([0, 1], [0], np.eye(2))
    with pytest.raises(InputDataError):
        prediction_metrics([0, 2], [0, 1], np.eye(2))


def test_macro_mean_report_averages_attributes():
    reports = [
        PredictionReport("age", 10, 0.6, 0.5, 0.4, 0.3),
        PredictionReport("gender", 10, 0.8, 0.7, 0.6, 0.1),
    ]
    mean = macro_mean_report(reports)
    assert mean.attribute == "macro_mean"
    assert mean.n == 20
    assert (mean.recall, mean.precision, mean.f1, mean.mae) == pytest.approx((0.7, 0.6, 0.5, 0.2))
    with pytest.raises(InputDataError):
        macro_mean_report([])
