"""
Passenger travel feature mining

Mean-Shift POI seeds, seeded K-means life circles, POI travel pattern matrices
and seeded LDA attribute profiles for bus passengers.
"""

__version__ = "0.1.0"

from .config import PipelineConfig, load_config
from .stages.orchestrator import PipelineOrchestrator

__all__ = [
    "PipelineConfig",
    "PipelineOrchestrator",
    "load_config",
]
