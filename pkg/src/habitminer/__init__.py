"""Habit mining on call records: local-metric clustering with random-walk
agents, a PROCLUS baseline, and the reporting around them."""

__version__ = "0.1.0"

from .dissimilarity import VALID_PCS, ParameterConfig, d_circular, d_composite, d_delta, d_manhattan
from .engine import EngineConfig, EngineResult, MetaCluster, run_engine
from .ingest import Dataset, load_dataset
from .proclus import ProclusConfig, ProclusResult, run_proclus

__all__ = [
    "VALID_PCS",
    "Dataset",
    "EngineConfig",
    "EngineResult",
    "MetaCluster",
    "ParameterConfig",
    "ProclusConfig",
    "ProclusResult",
    "d_circular",
    "d_composite",
    "d_delta",
    "d_manhattan",
    "load_dataset",
    "run_engine",
    "run_proclus",
]
