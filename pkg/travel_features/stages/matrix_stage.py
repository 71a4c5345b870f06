"""
Matrix Stage - travel pattern matrix from life circles and POIs
"""

import logging
from typing import Any, Dict

from ..models.poi_matrix import build_travel_pattern_matrix
from ..utils.table_writer import write_frame, write_records
from .base_stage import BaseStage
from .cluster_stage import read_cluster_model

logger = logging.getLogger(__name__)


class MatrixStage(BaseStage):
    """Builds the passenger x label pseudo-count matrix"""

    name = "matrix"
    requires = ("cluster",)
    outputs = ("pattern_matrix.csv",)

    def run(self, request: Dict[str, Any]) -> Dict[str, Any]:
        centers = self.read_artifact("centers.csv")
        assignments = self.read_artifact("assignments.csv", dtype={"uid": str})
        model, point_uids = read_cluster_model(centers, assignments)
        pois, _ = self.load_pois()

        cfg = self.config.matrix
        matrix = build_travel_pattern_matrix(model, point_uids, pois, radius_m=cfg.dis_m, row_total=cfg.row_total)
        dropped = [{"uid": uid, "reason": reason} for uid, reason in matrix.dropped.items()]

        outputs = [
            write_frame(matrix.to_frame(), self.artifact("pattern_matrix.csv")),
            write_records(dropped, self.artifact("dropped_passengers.csv"), ["uid", "reason"]),
        ]
        logger.info(f"Pattern matrix: {len(matrix.passengers)} passengers, {len(dropped)} dropped, L={cfg.row_total}")
        return {"outputs": outputs, "n_passengers": len(matrix.passengers), "n_dropped": len(dropped)}
