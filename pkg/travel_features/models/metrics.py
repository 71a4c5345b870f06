"""
Cluster validity indices and attribute prediction metrics.

Silhouette works on pairwise haversine distances; Calinski-Harabasz and
Davies-Bouldin are centroid based and are computed in a tangent plane (meters)
around the mean of the points. Prediction quality is macro-averaged over
classes.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd
from sklearn.metrics import (
    calinski_harabasz_score,
    davies_bouldin_score,
    precision_recall_fscore_support,
    silhouette_score,
)

from ..errors import InputDataError, UndefinedIndexError
from .geo import PointsLike, as_lnglat_array, haversine_matrix, to_local_xy
from .meanshift import SeedSet
from .pkmeans import extend_seeds, lloyd, unseeded_kmeans

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = [
    "k", "silhouette", "calinski_harabasz", "davies_bouldin", "seeded", "run", "inertia", "n_iterations",
]
MAE_NOTE = "mae = mean |theta - one_hot(true class)| over held-out passengers and classes"


@dataclass
class ClusterEvalReport:
    k: int
    silhouette: float
    calinski_harabasz: float
    davies_bouldin: float


@dataclass
class PredictionReport:
    """Macro-averaged classification quality for one attribute (or the mean over attributes)"""

    attribute: str
    n: int
    recall: float
    precision: float
    f1: float
    mae: float

    def to_row(self) -> dict:
        return asdict(self)


def _prepare(points: PointsLike, assignments: Sequence[int]):
    pts = as_lnglat_array(points)
    labels = np.asarray(assignments, dtype=int)
    if len(labels) != len(pts):
        raise InputDataError(f"{len(labels)} assignments for {len(pts)} points")
    k = len(np.unique(labels))
    if k < 2:
        raise UndefinedIndexError(f"Index undefined for k={k} (< 2 clusters)")
    if k >= len(pts):
        raise UndefinedIndexError(f"Index undefined for k={k} with only {len(pts)} points")
    return pts, labels


def _tangent(pts: np.ndarray) -> np.ndarray:
    return to_local_xy(pts, pts.mean(axis=0))


def silhouette(
    points: PointsLike, assignments: Sequence[int], sample_size: Optional[int] = None, rng_seed: int = 0
) -> float:
    """
    Mean silhouette over haversine distances.

    Singleton clusters score 0 for their point, as do points with a = b = 0.

    Args:
        points: Clustered points
        assignments: Cluster index per point
        sample_size: Score a deterministic random subset of this many points
        rng_seed: Seed for the subset draw

    Raises:
        UndefinedIndexError: fewer than 2 clusters, or as many clusters as points
    """
    pts, labels = _prepare(points, assignments)
    if sample_size is not None and sample_size < len(pts):
        idx = np.sort(np.random.default_rng(rng_seed).choice(len(pts), size=sample_size, replace=False))
        pts, labels = pts[idx], labels[idx]
        if not 2 <= len(np.unique(labels)) < len(pts):
            raise UndefinedIndexError("Subsample does not contain a scorable partition")
    dist = haversine_matrix(pts, pts)
    np.fill_diagonal(dist, 0.0)
    return float(silhouette_score(dist, labels, metric="precomputed"))


def calinski_harabasz(points: PointsLike, assignments: Sequence[int]) -> float:
    """[B / (k - 1)] / [W / (n - k)] on tangent-plane meters"""
    pts, labels = _prepare(points, assignments)
    return float(calinski_harabasz_score(_tangent(pts), labels))


def davies_bouldin(points: PointsLike, assignments: Sequence[int]) -> float:
    """Mean over clusters of the worst (s_i + s_j) / d_ij on tangent-plane meters; lower is better"""
    pts, labels = _prepare(points, assignments)
    return float(davies_bouldin_score(_tangent(pts), labels))


def evaluate_clustering(
    points: PointsLike, assignments: Sequence[int], sample_size: Optional[int] = None, rng_seed: int = 0
) -> ClusterEvalReport:
    labels = np.asarray(assignments, dtype=int)
    return ClusterEvalReport(
        k=int(len(np.unique(labels))),
        silhouette=silhouette(points, labels, sample_size=sample_size, rng_seed=rng_seed),
        calinski_harabasz=calinski_harabasz(points, labels),
        davies_bouldin=davies_bouldin(points, labels),
    )


def k_sweep(
    points: PointsLike,
    seeds: Optional[SeedSet] = None,
    k_range: Iterable[int] = range(2, 13),
    n_runs: int = 10,
    rng_seed: int = 0,
    epsilon: float = 1.0,
    max_iter: int = 300,
    sample_size: Optional[int] = None,
) -> pd.DataFrame:
    """
    Score K-means fits across K.

    For every K one seeded fit (starting from `extend_seeds`) when seeds are
    given, plus `n_runs` unseeded fits with rng seeds rng_seed + run. K values
    that leave no scorable partition are skipped.

    Returns:
        DataFrame with SWEEP_COLUMNS, seeded rows first within each K
    """
    pts = as_lnglat_array(points)
    rows: List[dict] = []

    def score(model, k, seeded, run):
        try:
            report = evaluate_clustering(pts, model.assignments, sample_size=sample_size, rng_seed=rng_seed)
        except UndefinedIndexError as e:
            logger.debug(f"Skipping k={k} run={run}: {e}")
            return
        rows.append({
            "k": k,
            "silhouette": report.silhouette,
            "calinski_harabasz": report.calinski_harabasz,
            "davies_bouldin": report.davies_bouldin,
            "seeded": seeded,
            "run": run,
            "inertia": model.inertia,
            "n_iterations": model.n_iterations,
        })

    for k in k_range:
        if k < 2 or k >= len(pts):
            logger.info(f"K-sweep: k={k} is outside [2, {len(pts) - 1}] and was skipped")
            continue
        if seeds is not None:
            model = lloyd(pts, extend_seeds(pts, seeds, k), epsilon=epsilon, max_iter=max_iter)
            score(model, k, True, 0)
        for run in range(n_runs):
            model = unseeded_kmeans(pts, k, rng_seed=rng_seed + run, epsilon=epsilon, max_iter=max_iter)
            score(model, k, False, run)

    logger.info(f"K-sweep produced {len(rows)} rows")
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def prediction_metrics(
    true_classes: Sequence[int],
    predicted_classes: Sequence[int],
    theta_rows: np.ndarray,
    attribute: str = "",
) -> PredictionReport:
    """
    Macro recall/precision/F1 and MAE of theta against one-hot true classes.

    Args:
        true_classes: True class index per held-out passenger
        predicted_classes: Predicted class index per passenger (argmax theta)
        theta_rows: (n, K) topic proportions, aligned with the class vectors
        attribute: Name carried into the report

    Raises:
        InputDataError: empty or misaligned evaluation set
    """
    y_true = np.asarray(true_classes, dtype=int)
    y_pred = np.asarray(predicted_classes, dtype=int)
    theta = np.asarray(theta_rows, dtype=float)
    if len(y_true) == 0:
        raise InputDataError("Evaluation set is empty")
    if len(y_pred) != len(y_true) or theta.ndim != 2 or theta.shape[0] != len(y_true):
        raise InputDataError("true classes, predictions and theta rows must be aligned")
    if y_true.max() >= theta.shape[1] or y_true.min() < 0:
        raise InputDataError(f"True class outside [0, {theta.shape[1]})")

    precision, recall, f1, _ = precision_recall_fscore_support(
        y_true, y_pred, average="macro", zero_division=0
    )
    one_hot = np.eye(theta.shape[1])[y_true]
    mae = float(np.abs(theta - one_hot).mean())

    return PredictionReport(
        attribute=attribute,
        n=int(len(y_true)),
        recall=float(recall),
        precision=float(precision),
        f1=float(f1),
        mae=mae,
    )


def macro_mean_report(reports: Sequence[PredictionReport], attribute: str = "macro_mean") -> PredictionReport:
    """Unweighted mean of the per-attribute reports"""
    if not reports:
        raise InputDataError("No reports to average")
    return PredictionReport(
        attribute=attribute,
        n=int(sum(r.n for r in reports)),
        recall=float(np.mean([r.recall for r in reports])),
        precision=float(np.mean([r.precision for r in reports])),
        f1=float(np.mean([r.f1 for r in reports])),
        mae=float(np.mean([r.mae for r in reports])),
    )
