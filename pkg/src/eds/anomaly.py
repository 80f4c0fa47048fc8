"""Behavioral anomaly detection over sliding windows.

Three detectors watch per-source profiles: ``port_scan`` counts distinct
failed destination ports per (source, destination) pair, ``icmp_sweep``
counts echo requests per source, and ``syn_flood`` counts SYNs and distinct
sources per (destination, port). Profile entries older than the window are
evicted lazily at observation time.

A detector fires at most once per window for its key. While a window is
open the engine keeps the alert pending and grows its evidence, emitting
the final form when the window slides past (or at flush); a 1000-port scan
therefore yields one alert whose confidence reflects all 1000 ports, not
the twenty that first crossed the threshold.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .flows import ConnRecord
from .pcapio import DecodedPacket

CATEGORY_RECON = "reconnaissance scanning"
CATEGORY_DOS = "Attempted Denial of Service"

_SEVERITY = {"port_scan": 2, "icmp_sweep": 3, "syn_flood": 1}


@dataclass(frozen=True)
class AnomalyConfig:
    window_s: float = 60.0
    scan_distinct_ports: int = 20
    sweep_echo_count: int = 8
    flood_syn_count: int = 500
    flood_window_s: float = 10.0
    spoof_distinct_srcs: int = 100

    def __post_init__(self) -> None:
        for name in ("scan_distinct_ports", "sweep_echo_count", "flood_syn_count", "spoof_distinct_srcs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.window_s <= 0 or self.flood_window_s <= 0:
            raise ValueError("windows must be positive")


@dataclass(frozen=True)
class AnomalyAlert:
    ts_us: int
    detector: str  # port_scan | icmp_sweep | syn_flood
    category: str
    confidence: float
    evidence: dict
    src_ip: str | None = None
    dst_ip: str | None = None
    dst_port: int | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must be in [0, 1]")


@dataclass
class _Pending:
    deadline_us: int
    ts_us: int
    confidence: float
    evidence: dict
    src_ip: str | None = None
    dst_ip: str | None = None
    dst_port: int | None = None


@dataclass
class _FloodProfile:
    syns: deque = field(default_factory=deque)  # (ts, src_ip)
    src_seen: dict = field(default_factory=dict)  # src_ip -> last ts


def alert_to_event(alert: AnomalyAlert) -> dict:
    doc = {
        "@timestamp": alert.ts_us,
        "event.kind": "alert",
        "event.module": "slips",
        "alert.category": alert.category,
        "alert.signature": _describe(alert),
        "alert.severity": _SEVERITY[alert.detector],
        "slips.detector": alert.detector,
        "slips.confidence": round(alert.confidence, 4),
    }
    if alert.src_ip is not None:
        doc["source.ip"] = alert.src_ip
    if alert.dst_ip is not None:
        doc["destination.ip"] = alert.dst_ip
    if alert.dst_port is not None:
        doc["destination.port"] = alert.dst_port
    for key, value in alert.evidence.items():
        doc[f"slips.evidence.{key}"] = value
    if alert.detector == "syn_flood":
        doc["slips.spoofed_source"] = bool(alert.evidence.get("spoofed_source"))
    return doc


def _describe(alert: AnomalyAlert) -> str:
    if alert.detector == "port_scan":
        return f"Port scan: {alert.evidence['distinct_ports']} failed ports toward {alert.dst_ip}"
    if alert.detector == "icmp_sweep":
        return f"ICMP sweep: {alert.evidence['echo_requests']} echo requests from {alert.src_ip}"
    return (
        f"SYN flood: {alert.evidence['syn_count']} SYNs toward "
        f"{alert.dst_ip}:{alert.dst_port}"
    )


class AnomalyEngine:
    """Single-writer detector state; feed packets and connection records."""

    def __init__(self, cfg: AnomalyConfig | None = None):
        self.cfg = cfg or AnomalyConfig()
        # src -> dst -> {failed port -> last ts}
        self._scan: dict[str, dict[str, dict[int, int]]] = {}
        # src -> (echo request timestamps, last dst)
        self._sweep: dict[str, deque] = {}
        self._sweep_dst: dict[str, str] = {}
        # (dst, port) -> flood profile
        self._flood: dict[tuple[str, int], _FloodProfile] = {}
        self._pending: dict[tuple, _Pending] = {}

    # --- plumbing ------------------------------------------------------

    def _emit_expired(self, now_us: int) -> list[AnomalyAlert]:
        out = []
        for key in [k for k, p in self._pending.items() if now_us > p.deadline_us]:
            out.append(self._finalize(key))
        return out

    def _finalize(self, key: tuple) -> AnomalyAlert:
        p = self._pending.pop(key)
        return AnomalyAlert(
            ts_us=p.ts_us,
            detector=key[0],
            category=CATEGORY_DOS if key[0] == "syn_flood" else CATEGORY_RECON,
            confidence=p.confidence,
            evidence=dict(p.evidence),
            src_ip=p.src_ip,
            dst_ip=p.dst_ip,
            dst_port=p.dst_port,
        )

    def _raise_pending(self, key: tuple, window_us: int, ts_us: int, confidence: float, evidence: dict, **endpoints) -> None:
        p = self._pending.get(key)
        if p is None:
            self._pending[key] = _Pending(
                deadline_us=ts_us + window_us,
                ts_us=ts_us,
                confidence=confidence,
                evidence=evidence,
                **endpoints,
            )
        elif confidence >= p.confidence:
            p.ts_us = ts_us
            p.confidence = confidence
            p.evidence = evidence

    # --- detectors -----------------------------------------------------

    def _observe_conn(self, rec: ConnRecord, now_us: int) -> None:
        if rec.key.proto != "tcp":
            return
        failed = rec.history == "S" or rec.history.startswith("Sr")
        if not failed:
            return
        ports = self._scan.setdefault(rec.key.orig_ip, {}).setdefault(rec.key.resp_ip, {})
        ports[rec.key.resp_port] = now_us
        horizon = now_us - int(self.cfg.window_s * 1_000_000)
        for port in [p for p, ts in ports.items() if ts <= horizon]:
            del ports[port]
        distinct = len(ports)
        if distinct >= self.cfg.scan_distinct_ports:
            self._raise_pending(
                ("port_scan", rec.key.orig_ip, rec.key.resp_ip),
                int(self.cfg.window_s * 1_000_000),
                now_us,
                confidence=min(1.0, distinct / 100),
                evidence={"distinct_ports": distinct},
                src_ip=rec.key.orig_ip,
                dst_ip=rec.key.resp_ip,
            )

    def _observe_packet(self, pkt: DecodedPacket, now_us: int) -> None:
        if pkt.ip_proto == "icmp" and pkt.icmp_type == 8:
            stamps = self._sweep.setdefault(pkt.src_ip, deque())
            stamps.append(now_us)
            self._sweep_dst[pkt.src_ip] = pkt.dst_ip
            horizon = now_us - int(self.cfg.window_s * 1_000_000)
            while stamps and stamps[0] <= horizon:
                stamps.popleft()
            count = len(stamps)
            if count >= self.cfg.sweep_echo_count:
                self._raise_pending(
                    ("icmp_sweep", pkt.src_ip),
                    int(self.cfg.window_s * 1_000_000),
                    now_us,
                    confidence=min(1.0, count / 20),
                    evidence={"echo_requests": count},
                    src_ip=pkt.src_ip,
                    dst_ip=self._sweep_dst[pkt.src_ip],
                )
        elif pkt.ip_proto == "tcp" and "SYN" in pkt.tcp_flags and "ACK" not in pkt.tcp_flags:
            profile = self._flood.setdefault((pkt.dst_ip, pkt.dst_port), _FloodProfile())
            profile.syns.append((now_us, pkt.src_ip))
            profile.src_seen[pkt.src_ip] = now_us
            horizon = now_us - int(self.cfg.flood_window_s * 1_000_000)
            while profile.syns and profile.syns[0][0] <= horizon:
                profile.syns.popleft()
            count = len(profile.syns)
            if count >= self.cfg.flood_syn_count:
                for src in [s for s, ts in profile.src_seen.items() if ts <= horizon]:
                    del profile.src_seen[src]
                distinct = len(profile.src_seen)
                self._raise_pending(
                    ("syn_flood", pkt.dst_ip, pkt.dst_port),
                    int(self.cfg.flood_window_s * 1_000_000),
                    now_us,
                    confidence=min(1.0, count / (2 * self.cfg.flood_syn_count)),
                    evidence={
                        "syn_count": count,
                        "distinct_sources": distinct,
                        "spoofed_source": distinct >= self.cfg.spoof_distinct_srcs,
                    },
                    dst_ip=pkt.dst_ip,
                    dst_port=pkt.dst_port,
                )

    # --- public API ----------------------------------------------------

    def observe(self, event: ConnRecord | DecodedPacket) -> list[AnomalyAlert]:
        """Update profiles with one observation; return any alerts due."""
        now_us = event.last_ts_us if isinstance(event, ConnRecord) else event.ts_us
        alerts = self._emit_expired(now_us)
        if isinstance(event, ConnRecord):
            self._observe_conn(event, now_us)
        else:
            self._observe_packet(event, now_us)
        return alerts

    def flush(self) -> list[AnomalyAlert]:
        """Emit every still-pending alert (end of stream)."""
        keys = sorted(self._pending, key=lambda k: self._pending[k].ts_us)
        return [self._finalize(k) for k in keys]
