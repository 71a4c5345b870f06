"""
Synth Stage - synthetic city, passengers and ground truth
"""

import logging
from typing import Any, Dict

from ..utils.synthgen import write_synthetic_dataset
from .base_stage import BaseStage

logger = logging.getLogger(__name__)

SYNTH_DIR = "data"


class SynthStage(BaseStage):
    name = "synth"
    outputs = (f"{SYNTH_DIR}/pois.csv", f"{SYNTH_DIR}/trajectories.csv", f"{SYNTH_DIR}/ground_truth.csv")

    def run(self, request: Dict[str, Any]) -> Dict[str, Any]:
        paths = write_synthetic_dataset(self.artifact(SYNTH_DIR), self.config.synth)
        return {"outputs": list(paths.values()), "paths": {k: str(v) for k, v in paths.items()}}
