"""
Base Stage class for the travel feature pipeline
"""

import json
import logging
from abc import ABC, abstractmethod
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Tuple

from ..config import PipelineConfig
from ..errors import InputDataError, TravelFeatureError
from ..utils.ingest import (
    DropReport,
    PoiRecord,
    TrajectoryRecord,
    dedup_poi,
    filter_min_records,
    load_poi_csv,
    load_trajectory_csv,
    partition_by_uid,
)
from ..utils.table_writer import read_frame, write_records

logger = logging.getLogger(__name__)


class BaseStage(ABC):
    """Base class for all pipeline stages"""

    name = "stage"
    requires: Tuple[str, ...] = ()
    outputs: Tuple[str, ...] = ()

    def __init__(self, config: PipelineConfig, run_dir: Path):
        self.config = config
        self.run_dir = Path(run_dir)

    def artifact(self, filename: str) -> Path:
        return self.run_dir / filename

    def is_complete(self) -> bool:
        return all(self.artifact(f).is_file() for f in self.outputs)

    def read_artifact(self, filename: str, **kwargs):
        path = self.artifact(filename)
        if not path.is_file():
            raise InputDataError(f"Missing upstream artifact {path}")
        return read_frame(path, **kwargs)

    def load_pois(self) -> Tuple[List[PoiRecord], DropReport]:
        self.config.require_paths(["poi_csv"])
        records, report = load_poi_csv(self.config.paths.poi_csv)
        unique = dedup_poi(records)
        if len(unique) < len(records):
            logger.info(f"Removed {len(records) - len(unique)} duplicate POIs")
        return unique, report

    def load_passengers(self) -> Tuple[Dict[str, List[TrajectoryRecord]], Dict[str, List[TrajectoryRecord]], DropReport]:
        """(all passengers, passengers above min_records, drop report)"""
        self.config.require_paths(["trajectory_csv"])
        records, report = load_trajectory_csv(self.config.paths.trajectory_csv)
        partition = partition_by_uid(records)
        kept = filter_min_records(partition, self.config.matrix.min_records)
        logger.info(f"{len(kept)}/{len(partition)} passengers have more than {self.config.matrix.min_records} records")
        return partition, kept, report

    def write_drop_report(self, filename: str, source: str, report: DropReport) -> Path:
        rows = [{"source": source, "item": key, "count": value} for key, value in report.to_dict().items()]
        return write_records(rows, self.artifact(filename), ["source", "item", "count"])

    @abstractmethod
    def run(self, request: Dict[str, Any]) -> Dict[str, Any]:
        """Run the stage and return its outputs; library errors propagate"""
        pass

    def process_request(self, request: Dict[str, Any] = None) -> Dict[str, Any]:
        """Run the stage, converting toolkit errors into a failed result"""
        request = request or {}
        self.run_dir.mkdir(parents=True, exist_ok=True)
        try:
            response = self.run(request)
            response.setdefault("success", True)
        except TravelFeatureError as e:
            logger.error(f"Stage {self.name} failed: {e}")
            response = {"success": False, "error": str(e), "exit_code": e.exit_code}

        self.log_run(request, response)
        return response

    def log_run(self, request: Dict[str, Any], response: Dict[str, Any]):
        """Log stage runs for monitoring"""
        log_entry = {
            "timestamp": datetime.now().isoformat(),
            "stage": self.name,
            "request": {k: str(v) for k, v in request.items()},
            "success": response.get("success", False),
            "outputs": [str(p) for p in response.get("outputs", [])],
            "error": response.get("error"),
        }
        logger.info(f"Stage run: {json.dumps(log_entry, indent=2)}")
