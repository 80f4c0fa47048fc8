"""Replay a pcap through every detector and ship their logs to the store.

The pipeline writes one NDJSON log per detector role under the configured
log directory (conn.ndjson, http.ndjson, eve.ndjson, alerts.ndjson),
appending on repeat runs. ``ship_logs`` then moves those lines into an
EventStore exactly once: each shipped doc gains log.file.path/log.offset
provenance fields, and the resume offsets are recomputed from the store
itself on every run, so a checkpoint file is only a cache and a crash
between lines never double-ingests.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import anomaly as anomaly_mod
from . import signatures as sig_mod
from .anomaly import AnomalyEngine
from .config import EdsConfig
from .flows import FlowTracker, conn_to_event, network_direction
from .kql import MatchAll
from .pcapio import DecodedPacket, HttpRequestInfo, Skipped, decode_packet, parse_http_request, read_pcap
from .signatures import SignatureEngine, default_ruleset, parse_ruleset
from .store import EventStore

CONN_LOG = "conn.ndjson"
HTTP_LOG = "http.ndjson"
EVE_LOG = "eve.ndjson"
ALERTS_LOG = "alerts.ndjson"

CHECKPOINT_FILE = ".ship-checkpoint.json"


@dataclass
class PipelineStats:
    packets_read: int = 0
    packets_skipped: int = 0
    conn_records: int = 0
    http_events: int = 0
    sig_alerts: int = 0
    anomaly_alerts: int = 0
    docs_ingested: int = 0
    wall_time: float = field(default=0.0, compare=False)


def http_to_event(pkt: DecodedPacket, http: HttpRequestInfo, direction: str) -> dict:
    doc = {
        "@timestamp": pkt.ts_us,
        "event.kind": "event",
        "event.module": "zeek",
        "source.ip": pkt.src_ip,
        "source.port": pkt.src_port,
        "destination.ip": pkt.dst_ip,
        "destination.port": pkt.dst_port,
        "network.transport": "tcp",
        "network.direction": direction,
        "http.request.method": http.method,
        "url.original": f"http://{http.host}{http.uri}" if http.host else http.uri,
    }
    if http.host:
        doc["url.domain"] = http.host
    if http.user_agent:
        doc["user_agent.original"] = http.user_agent
    return doc


class _LogWriter:
    def __init__(self, log_dir: Path):
        log_dir.mkdir(parents=True, exist_ok=True)
        self._handles = {}
        self._dir = log_dir
        self.lines = 0

    def write(self, name: str, doc: dict) -> None:
        fh = self._handles.get(name)
        if fh is None:
            fh = open(self._dir / name, "a", encoding="utf-8")
            self._handles[name] = fh
        fh.write(json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n")
        self.lines += 1

    def close(self) -> None:
        for fh in self._handles.values():
            fh.close()


def run_pipeline(pcap_path: str | Path, cfg: EdsConfig) -> PipelineStats:
    """Decode ``pcap_path`` and fan packets out to all three detector roles."""
    t0 = time.monotonic()
    stats = PipelineStats()
    if cfg.ruleset_path is not None:
        rules = parse_ruleset(Path(cfg.ruleset_path).read_text(encoding="utf-8"))
    else:
        rules = default_ruleset()
    sig = SignatureEngine(rules)
    tracker = FlowTracker()
    detector = AnomalyEngine(cfg.anomaly)
    writer = _LogWriter(Path(cfg.log_dir))
    nets = list(cfg.home_nets)
    try:
        for raw in read_pcap(pcap_path):
            stats.packets_read += 1
            pkt = decode_packet(raw)
            if isinstance(pkt, Skipped):
                stats.packets_skipped += 1
                continue
            http = None
            if pkt.ip_proto == "tcp" and pkt.payload:
                http = parse_http_request(pkt.payload)
            for alert in sig.feed(pkt, http):
                writer.write(EVE_LOG, sig_mod.alert_to_event(alert))
                stats.sig_alerts += 1
            if http is not None:
                direction = network_direction(pkt.src_ip, pkt.dst_ip, nets)
                writer.write(HTTP_LOG, http_to_event(pkt, http, direction))
                stats.http_events += 1
            for alert in detector.observe(pkt):
                writer.write(ALERTS_LOG, anomaly_mod.alert_to_event(alert))
                stats.anomaly_alerts += 1
            for rec in tracker.feed(pkt):
                writer.write(CONN_LOG, conn_to_event(rec, nets))
                stats.conn_records += 1
                for alert in detector.observe(rec):
                    writer.write(ALERTS_LOG, anomaly_mod.alert_to_event(alert))
                    stats.anomaly_alerts += 1
        for rec in tracker.flush():
            writer.write(CONN_LOG, conn_to_event(rec, nets))
            stats.conn_records += 1
            for alert in detector.observe(rec):
                writer.write(ALERTS_LOG, anomaly_mod.alert_to_event(alert))
                stats.anomaly_alerts += 1
        for alert in detector.flush():
            writer.write(ALERTS_LOG, anomaly_mod.alert_to_event(alert))
            stats.anomaly_alerts += 1
    finally:
        writer.close()
    stats.docs_ingested = writer.lines
    stats.wall_time = time.monotonic() - t0
    return stats


@dataclass(frozen=True)
class CorruptLine:
    path: str
    line_no: int
    reason: str


@dataclass
class ShipStats:
    ingested: int = 0
    already_present: int = 0
    corrupt: list[CorruptLine] = field(default_factory=list)


def _shipped_offsets(store: EventStore) -> dict[str, int]:
    offsets: dict[str, int] = {}
    for doc in store.search(MatchAll()).docs:
        path = doc.get("log.file.path")
        if path is not None:
            offsets[path] = max(offsets.get(path, 0), doc.get("log.offset", 0))
    return offsets


def ship_logs(log_dir: str | Path, store: EventStore) -> ShipStats:
    """Ingest every NDJSON log line under ``log_dir`` exactly once.

    Offsets already in the store win over the checkpoint cache, so a stale
    or missing checkpoint can cause extra reads but never duplicates.
    """
    log_dir = Path(log_dir)
    stats = ShipStats()
    offsets = _shipped_offsets(store)
    for path in sorted(log_dir.glob("*.ndjson")):
        resolved = str(path.resolve())
        done = offsets.get(resolved, 0)
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if line_no <= done:
                    stats.already_present += 1
                    continue
                try:
                    doc = json.loads(line)
                    if not isinstance(doc, dict):
                        raise ValueError("not a JSON object")
                    doc["log.file.path"] = resolved
                    doc["log.offset"] = line_no
                    store.ingest(doc)
                except ValueError as err:
                    stats.corrupt.append(CorruptLine(resolved, line_no, str(err)))
                else:
                    stats.ingested += 1
                offsets[resolved] = line_no
    checkpoint = {path: done for path, done in sorted(offsets.items())}
    tmp = log_dir / (CHECKPOINT_FILE + ".tmp")
    tmp.write_text(json.dumps(checkpoint, indent=2) + "\n", encoding="utf-8")
    tmp.replace(log_dir / CHECKPOINT_FILE)
    return stats
