"""
Cluster Stage - P-KMEANS over trajectory points plus the K-sweep
"""

import logging
from typing import Any, Dict, List, Tuple

import numpy as np
import pandas as pd

from ..errors import InputDataError, UndefinedIndexError
from ..models.geo import GeoPoint
from ..models.metrics import evaluate_clustering, k_sweep
from ..models.pkmeans import ClusterModel, p_kmeans
from ..utils.ingest import TrajectoryRecord, format_timestamp, record_count_distribution
from ..utils.table_writer import write_frame, write_records
from .base_stage import BaseStage
from .seed_stage import read_seed_set

logger = logging.getLogger(__name__)

ASSIGNMENT_COLUMNS = ["point_index", "uid", "lng", "lat", "up_time", "cluster"]


def flatten_points(partition: Dict[str, List[TrajectoryRecord]]) -> Tuple[np.ndarray, List[str], List[TrajectoryRecord]]:
    """Points ordered by uid then time, with the uid of every point"""
    records = [rec for uid in sorted(partition) for rec in partition[uid]]
    points = np.array([[r.location.lng, r.location.lat] for r in records], dtype=float).reshape(len(records), 2)
    return points, [r.uid for r in records], records


def read_cluster_model(centers: pd.DataFrame, assignments: pd.DataFrame) -> Tuple[ClusterModel, List[str]]:
    """Rebuild the fitted model and point uids from centers.csv and assignments.csv"""
    model = ClusterModel(
        k=len(centers),
        centers=[GeoPoint(float(r.lng), float(r.lat)) for r in centers.itertuples(index=False)],
        assignments=assignments["cluster"].to_numpy(dtype=int),
        inertia=float("nan"),
        n_iterations=0,
    )
    return model, assignments["uid"].astype(str).tolist()


class ClusterStage(BaseStage):
    """Fits P-KMEANS on all retained passengers' points and sweeps K for the validity indices"""

    name = "cluster"
    requires = ("seed",)
    outputs = ("centers.csv", "assignments.csv", "k_sweep.csv")

    def run(self, request: Dict[str, Any]) -> Dict[str, Any]:
        seeds = read_seed_set(self.read_artifact("seeds.csv"))
        partition, kept, report = self.load_passengers()
        if not kept:
            raise InputDataError(
                f"No passenger has more than {self.config.matrix.min_records} records"
            )

        points, _, records = flatten_points(kept)
        km = self.config.kmeans
        model = p_kmeans(points, seeds, epsilon=km.epsilon, max_iter=km.max_iter)
        logger.info(f"P-KMEANS: K={model.k}, {model.n_iterations} iterations, inertia={model.inertia:.6g}")

        assignment_rows = [
            {
                "point_index": i,
                "uid": rec.uid,
                "lng": rec.location.lng,
                "lat": rec.location.lat,
                "up_time": format_timestamp(rec.up_time),
                "cluster": int(c),
            }
            for i, (rec, c) in enumerate(zip(records, model.assignments))
        ]

        sweep = k_sweep(
            points,
            seeds,
            k_range=range(km.sweep_k_min, km.sweep_k_max + 1),
            n_runs=km.sweep_runs,
            rng_seed=self.config.rng_seed,
            epsilon=km.epsilon,
            max_iter=km.max_iter,
            sample_size=km.silhouette_sample,
        )

        summary = {"k": model.k, "inertia": model.inertia, "n_iterations": model.n_iterations,
                   "n_points": len(points), "n_passengers": len(kept)}
        try:
            report_row = evaluate_clustering(points, model.assignments,
                                             sample_size=km.silhouette_sample, rng_seed=self.config.rng_seed)
            summary.update(silhouette=report_row.silhouette, calinski_harabasz=report_row.calinski_harabasz,
                           davies_bouldin=report_row.davies_bouldin)
        except UndefinedIndexError as e:
            logger.warning(f"Validity indices undefined for the seeded model: {e}")

        outputs = [
            write_records(model.center_rows(), self.artifact("centers.csv"), ["k", "lng", "lat", "n_k"]),
            write_records(assignment_rows, self.artifact("assignments.csv"), ASSIGNMENT_COLUMNS),
            write_frame(sweep, self.artifact("k_sweep.csv")),
            write_frame(pd.DataFrame([summary]), self.artifact("cluster_summary.csv")),
            write_frame(record_count_distribution(partition, self.config.matrix.min_records),
                        self.artifact("passenger_record_counts.csv")),
            self.write_drop_report("trajectory_ingest_report.csv", "trajectory_csv", report),
        ]
        return {"outputs": outputs, "k": model.k, "n_points": len(points), "n_passengers": len(kept)}
