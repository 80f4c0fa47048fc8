"""Ensemble defense system: hybrid IDS pipeline, event store, and query API."""

from .anomaly import AnomalyAlert, AnomalyConfig, AnomalyEngine
from .config import BadCidr, EdsConfig, UnwritableLogDir, load_config
from .flows import ConnRecord, FlowKey, FlowTracker, TrackerConfig, conn_to_event, network_direction
from .kql import QuerySyntaxError, eval_query, glob_match, parse_kql, to_kql
from .pcapio import (
    BadMagic,
    DecodedPacket,
    Skipped,
    Truncated,
    decode_packet,
    parse_http_request,
    read_pcap,
    write_pcap,
)
from .pipeline import PipelineStats, ShipStats, run_pipeline, ship_logs
from .presets import DOS_QUERY, PORT_SCAN_QUERY, PRESETS, SQLI_QUERY
from .signatures import SigAlert, SigRule, SignatureEngine, default_ruleset, parse_ruleset
from .store import CorruptSegment, EventStore, Histogram, SearchResult
from .synth import LabeledPcap, ScenarioSpec, builtin_scenario, compose, load_scenario, read_labels

__version__ = "0.1.0"

__all__ = [
    "AnomalyAlert",
    "AnomalyConfig",
    "AnomalyEngine",
    "BadCidr",
    "BadMagic",
    "ConnRecord",
    "CorruptSegment",
    "DOS_QUERY",
    "DecodedPacket",
    "EdsConfig",
    "EventStore",
    "FlowKey",
    "FlowTracker",
    "Histogram",
    "LabeledPcap",
    "PORT_SCAN_QUERY",
    "PRESETS",
    "PipelineStats",
    "QuerySyntaxError",
    "SQLI_QUERY",
    "ScenarioSpec",
    "SearchResult",
    "ShipStats",
    "SigAlert",
    "SigRule",
    "SignatureEngine",
    "Skipped",
    "TrackerConfig",
    "Truncated",
    "UnwritableLogDir",
    "builtin_scenario",
    "compose",
    "conn_to_event",
    "decode_packet",
    "default_ruleset",
    "eval_query",
    "glob_match",
    "load_config",
    "load_scenario",
    "network_direction",
    "parse_http_request",
    "parse_kql",
    "parse_ruleset",
    "read_labels",
    "read_pcap",
    "run_pipeline",
    "ship_logs",
    "to_kql",
    "write_pcap",
]
