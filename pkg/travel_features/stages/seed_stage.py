"""
Seed Stage - Mean-Shift POI seeds per label
"""

import logging
from typing import Any, Dict, List

import pandas as pd

from ..models.geo import GeoPoint
from ..models.meanshift import SeedSet, merge_seed_sets, seed_all_labels
from ..utils.ingest import label_counts
from ..utils.table_writer import write_records
from .base_stage import BaseStage

logger = logging.getLogger(__name__)

SEED_COLUMNS = ["label", "lng", "lat", "member_count"]


def read_seed_set(df: pd.DataFrame) -> SeedSet:
    """Global seed set from a seeds.csv frame (rows in file order)"""
    return SeedSet(
        seeds=[GeoPoint(float(r.lng), float(r.lat)) for r in df.itertuples(index=False)],
        member_count=[int(c) for c in df["member_count"]],
    )


class SeedStage(BaseStage):
    """Runs ingest and per-label Mean-Shift, writing seeds.csv"""

    name = "seed"
    outputs = ("seeds.csv",)

    def run(self, request: Dict[str, Any]) -> Dict[str, Any]:
        pois, report = self.load_pois()
        seed_sets = seed_all_labels(pois, self.config.meanshift)

        rows: List[Dict[str, Any]] = []
        for seed_set in seed_sets:
            rows.extend(seed_set.to_rows())
        merged = merge_seed_sets(seed_sets)

        counts = label_counts(pois)
        empty = [label.value for label, n in counts.items() if n == 0]
        if empty:
            logger.warning(f"Labels without POIs (no seeds): {empty}")

        outputs = [
            write_records(rows, self.artifact("seeds.csv"), SEED_COLUMNS),
            self.write_drop_report("poi_ingest_report.csv", "poi_csv", report),
        ]
        logger.info(f"Mean-Shift produced {merged.k} seeds from {len(pois)} POIs")
        return {
            "outputs": outputs,
            "n_seeds": merged.k,
            "seeds_per_label": {s.source_label.value: s.k for s in seed_sets},
        }
