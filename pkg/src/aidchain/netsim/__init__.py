"""Deterministic in-process network for consensus and fault testing."""

from .cluster import Cluster, ConsensusNode, ListMempool, build_cluster
from .sim import (
    NodeContext,
    Partition,
    SimConfig,
    Simulator,
    Trace,
    TraceRecord,
    UnknownDirectiveError,
    UnknownNodeError,
)

__all__ = [
    "Cluster",
    "ConsensusNode",
    "ListMempool",
    "NodeContext",
    "Partition",
    "SimConfig",
    "Simulator",
    "Trace",
    "TraceRecord",
    "UnknownDirectiveError",
    "UnknownNodeError",
    "build_cluster",
]
