"""Query routing in unstructured P2P networks using formal concept analysis."""

from .fca import FormalConcept, FormalContext, derive_extent, derive_intent, enumerate_concepts, next_closure
from .knowledge import KnowledgeBase, LogEntry, QueryLog, build_static, update_incremental
from .routing import Query, lps_select_v1, lps_select_v2
from .config import SimConfig
from .simulator import Simulator, run

__all__ = [
    "FormalConcept", "FormalContext", "derive_extent", "derive_intent", "enumerate_concepts", "next_closure",
    "KnowledgeBase", "LogEntry", "QueryLog", "build_static", "update_incremental",
    "Query", "lps_select_v1", "lps_select_v2", "SimConfig", "Simulator", "run",
]
__version__ = "0.1.0"
