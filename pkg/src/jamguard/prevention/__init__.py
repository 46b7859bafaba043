"""Reallocation-based jamming prevention on a WDM mesh."""

from .metrics import estimate_probabilities, reconfiguration_report, security_metric
from .simulator import AUTH, UNAUTH, ExposureStats, ExposureTracker, SimParams, SimResult, replay, simulate
from .topology import Topology, TopologyError, load_nsfnet, load_topology, parse_topology

__all__ = [
    "AUTH",
    "UNAUTH",
    "ExposureStats",
    "ExposureTracker",
    "SimParams",
    "SimResult",
    "Topology",
    "TopologyError",
    "estimate_probabilities",
    "load_nsfnet",
    "load_topology",
    "parse_topology",
    "reconfiguration_report",
    "replay",
    "security_metric",
    "simulate",
]
