from .base_stage import BaseStage
from .cluster_stage import ClusterStage
from .eval_stage import EvalStage
from .lda_stage import LdaStage
from .matrix_stage import MatrixStage
from .orchestrator import PipelineOrchestrator
from .seed_stage import SeedStage
from .synth_stage import SynthStage

__all__ = [
    "BaseStage",
    "ClusterStage",
    "EvalStage",
    "LdaStage",
    "MatrixStage",
    "PipelineOrchestrator",
    "SeedStage",
    "SynthStage",
]
