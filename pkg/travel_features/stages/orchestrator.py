"""
Pipeline Orchestrator - routes commands to stages and runs missing upstream stages
"""

import logging
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional

from ..config import PipelineConfig
from ..errors import ConfigError
from ..utils.table_writer import write_yaml
from .base_stage import BaseStage
from .cluster_stage import ClusterStage
from .eval_stage import EvalStage
from .lda_stage import LdaStage
from .matrix_stage import MatrixStage
from .seed_stage import SeedStage
from .synth_stage import SYNTH_DIR, SynthStage

logger = logging.getLogger(__name__)

PIPELINE_ORDER = ["seed", "cluster", "matrix", "lda", "eval"]


class PipelineOrchestrator:
    """Coordinates the pipeline stages for one run directory"""

    def __init__(self, config: PipelineConfig, run_dir: Optional[Path] = None):
        self.config = config
        self.run_dir = Path(run_dir) if run_dir is not None else config.run_dir()
        self.history: List[Dict[str, Any]] = []
        self._build_routes()

    def _build_routes(self):
        self.stage_routes: Dict[str, BaseStage] = {
            "synth": SynthStage(self.config, self.run_dir),
            "seed": SeedStage(self.config, self.run_dir),
            "cluster": ClusterStage(self.config, self.run_dir),
            "matrix": MatrixStage(self.config, self.run_dir),
            "lda": LdaStage(self.config, self.run_dir),
            "eval": EvalStage(self.config, self.run_dir),
        }

    def route_request(self, command: str) -> Dict[str, Any]:
        """Run one command (a stage name or "pipeline")"""
        if command == "pipeline":
            return self.run_pipeline()
        if command not in self.stage_routes:
            return {"success": False, "error": f"Unknown command {command!r}", "exit_code": ConfigError.exit_code}

        self._snapshot_config()
        if command != "synth":
            prepared = self._use_synthetic_inputs(rerun=False)
            if not prepared["success"]:
                return prepared
        return self._run_with_upstream(command)

    def run_pipeline(self) -> Dict[str, Any]:
        """Synth (when enabled) then seed, cluster, matrix, lda and eval, each rerun from scratch"""
        self._snapshot_config()
        results: Dict[str, Any] = {}

        prepared = self._use_synthetic_inputs(rerun=True)
        if not prepared["success"]:
            return prepared
        if "synth" in prepared:
            results["synth"] = prepared["synth"]

        for name in PIPELINE_ORDER:
            if name == "eval" and not self.config.paths.ground_truth_csv:
                logger.info("No ground truth configured; skipping eval")
                continue
            result = self._run_stage(name)
            results[name] = result
            if not result["success"]:
                return {**result, "stages": results}

        outputs = [p for r in results.values() for p in r.get("outputs", [])]
        return {"success": True, "run_dir": str(self.run_dir), "stages": results, "outputs": outputs}

    def _run_stage(self, name: str) -> Dict[str, Any]:
        result = self.stage_routes[name].process_request({"command": name, "run_dir": self.run_dir})
        self.history.append({"stage": name, "success": result["success"]})
        return result

    def _run_with_upstream(self, name: str) -> Dict[str, Any]:
        stage = self.stage_routes[name]
        for dep in stage.requires:
            if not self.stage_routes[dep].is_complete():
                logger.info(f"{name} needs {dep}; running it first")
                result = self._run_with_upstream(dep)
                if not result["success"]:
                    return result
        return self._run_stage(name)

    def _use_synthetic_inputs(self, rerun: bool) -> Dict[str, Any]:
        """With run_synth set, generate (if needed) and point the input paths at the synthetic data"""
        if not self.config.run_synth:
            return {"success": True}

        out: Dict[str, Any] = {"success": True}
        synth = self.stage_routes["synth"]
        if rerun or not synth.is_complete():
            result = self._run_stage("synth")
            if not result["success"]:
                return result
            out["synth"] = result

        data = self.run_dir / SYNTH_DIR
        paths = replace(
            self.config.paths,
            poi_csv=str(data / "pois.csv"),
            trajectory_csv=str(data / "trajectories.csv"),
            ground_truth_csv=str(data / "ground_truth.csv"),
        )
        self.config = replace(self.config, paths=paths)
        self._build_routes()
        return out

    def _snapshot_config(self) -> Path:
        self.run_dir.mkdir(parents=True, exist_ok=True)
        return write_yaml(self.config.to_dict(), self.run_dir / "config.yaml")
