"""Bidirectional connection tracking with compact per-flow history strings.

Packets are aggregated into flows keyed on their endpoint pair; the endpoint
that sent the first observed packet is the originator. Each TCP packet may
contribute one letter to the flow's history string (originator uppercase,
responder lowercase), recorded only the first time that cased letter occurs:

    S  SYN without ACK        F  FIN
    H  SYN with ACK           R  RST
    A  pure ACK (no payload)  D  payload-bearing packet

Flows are emitted as immutable :class:`ConnRecord` values when they close
(FIN exchange, RST, or ICMP echo reply), idle out, or at end-of-stream flush.
"""

from __future__ import annotations

import ipaddress
import uuid
from dataclasses import dataclass
from typing import Iterable

from .pcapio import DecodedPacket

ORIG = "orig"
RESP = "resp"

STATE_OPEN = "open"
STATE_CLOSED = "closed"
STATE_TIMED_OUT = "timed_out"


@dataclass(frozen=True)
class TrackerConfig:
    idle_timeout_s: float = 60.0
    max_history: int = 16

    def __post_init__(self) -> None:
        if self.idle_timeout_s <= 0:
            raise ValueError("idle_timeout_s must be positive")


@dataclass(frozen=True)
class FlowKey:
    orig_ip: str
    resp_ip: str
    orig_port: int
    resp_port: int
    proto: str


@dataclass(frozen=True)
class ConnRecord:
    uid: str
    key: FlowKey
    start_ts_us: int
    last_ts_us: int
    history: str
    orig_pkts: int
    resp_pkts: int
    orig_bytes: int
    resp_bytes: int
    state: str
    icmp_type: int | None = None


def history_letter(pkt: DecodedPacket, direction: str, seen: Iterable[str] = ()) -> str | None:
    """Letter this packet contributes to its flow's history, if any.

    ``seen`` holds the cased letters already recorded for the flow; a letter
    is only reported on its first occurrence. Non-TCP packets contribute
    nothing.
    """
    if pkt.ip_proto != "tcp":
        return None
    flags = pkt.tcp_flags
    if "SYN" in flags and "ACK" not in flags:
        letter = "S"
    elif "SYN" in flags:
        letter = "H"
    elif "RST" in flags:
        letter = "R"
    elif "FIN" in flags:
        letter = "F"
    elif len(pkt.payload) > 0:
        letter = "D"
    elif "ACK" in flags:
        letter = "A"
    else:
        return None
    if direction == RESP:
        letter = letter.lower()
    return None if letter in set(seen) else letter


class _Flow:
    __slots__ = (
        "key", "uid", "start_ts", "last_ts", "history", "seen",
        "orig_pkts", "resp_pkts", "orig_bytes", "resp_bytes",
        "fin_orig", "fin_resp", "icmp_type", "state",
    )

    def __init__(self, key: FlowKey, uid: str, ts: int, icmp_type: int | None):
        self.key = key
        self.uid = uid
        self.start_ts = ts
        self.last_ts = ts
        self.history: list[str] = []
        self.seen: set[str] = set()
        self.orig_pkts = 0
        self.resp_pkts = 0
        self.orig_bytes = 0
        self.resp_bytes = 0
        self.fin_orig = False
        self.fin_resp = False
        self.icmp_type = icmp_type
        self.state = STATE_OPEN

    def record(self, state: str) -> ConnRecord:
        return ConnRecord(
            uid=self.uid,
            key=self.key,
            start_ts_us=self.start_ts,
            last_ts_us=self.last_ts,
            history="".join(self.history),
            orig_pkts=self.orig_pkts,
            resp_pkts=self.resp_pkts,
            orig_bytes=self.orig_bytes,
            resp_bytes=self.resp_bytes,
            state=state,
            icmp_type=self.icmp_type,
        )


def _echo_id(pkt: DecodedPacket) -> object:
    # echo request/reply carry their identifier in the first two body bytes;
    # other ICMP messages are bucketed by (type, code)
    if pkt.icmp_type in (0, 8) and len(pkt.payload) >= 2:
        return int.from_bytes(pkt.payload[0:2], "big")
    return (pkt.icmp_type, pkt.icmp_code)


class FlowTracker:
    """Single-writer flow state machine.

    Feed packets in timestamp order; each call may emit zero or more
    completed records. Emitted records are immutable and safe to share.
    """

    def __init__(self, cfg: TrackerConfig | None = None):
        self.cfg = cfg or TrackerConfig()
        self._live: dict[tuple, _Flow] = {}

    def _lookup_key(self, pkt: DecodedPacket) -> tuple:
        if pkt.ip_proto == "icmp":
            a, b = sorted((pkt.src_ip, pkt.dst_ip))
            return ("icmp", a, b, _echo_id(pkt))
        a = (pkt.src_ip, pkt.src_port)
        b = (pkt.dst_ip, pkt.dst_port)
        lo, hi = (a, b) if a <= b else (b, a)
        return (pkt.ip_proto, lo, hi)

    def _evict_idle(self, now_us: int) -> list[ConnRecord]:
        horizon = now_us - int(self.cfg.idle_timeout_s * 1_000_000)
        out = []
        while self._live:
            k = next(iter(self._live))
            flow = self._live[k]
            if flow.last_ts > horizon:
                break
            del self._live[k]
            out.append(flow.record(STATE_TIMED_OUT))
        return out

    def feed(self, pkt: DecodedPacket) -> list[ConnRecord]:
        emitted = self._evict_idle(pkt.ts_us)
        k = self._lookup_key(pkt)
        flow = self._live.pop(k, None)
        if flow is None:
            key = FlowKey(pkt.src_ip, pkt.dst_ip, pkt.src_port, pkt.dst_port, pkt.ip_proto)
            icmp_type = pkt.icmp_type if pkt.ip_proto == "icmp" else None
            flow = _Flow(key, "C" + uuid.uuid4().hex[:16], pkt.ts_us, icmp_type)
        direction = (
            ORIG
            if (pkt.src_ip, pkt.src_port) == (flow.key.orig_ip, flow.key.orig_port)
            else RESP
        )
        flow.last_ts = pkt.ts_us
        if direction == ORIG:
            flow.orig_pkts += 1
            flow.orig_bytes += len(pkt.payload)
        else:
            flow.resp_pkts += 1
            flow.resp_bytes += len(pkt.payload)

        letter = history_letter(pkt, direction, flow.seen)
        if letter is not None and len(flow.history) < self.cfg.max_history:
            flow.history.append(letter)
            flow.seen.add(letter)

        closed = False
        if pkt.ip_proto == "tcp":
            if "RST" in pkt.tcp_flags:
                closed = True
            elif "FIN" in pkt.tcp_flags:
                if direction == ORIG:
                    flow.fin_orig = True
                else:
                    flow.fin_resp = True
                closed = flow.fin_orig and flow.fin_resp
        elif pkt.ip_proto == "icmp":
            # an echo flow completes when the reply arrives; the record keeps
            # the request's type
            if pkt.icmp_type == 0 and direction == RESP:
                closed = True

        if closed:
            emitted.append(flow.record(STATE_CLOSED))
        else:
            self._live[k] = flow  # re-insert to refresh LRU position
        return emitted

    def flush(self) -> list[ConnRecord]:
        """Emit every still-open flow; flows that never closed time out."""
        flows = sorted(
            self._live.values(),
            key=lambda f: (f.last_ts, f.start_ts, f.key.orig_ip, f.key.orig_port,
                           f.key.resp_ip, f.key.resp_port, f.key.proto),
        )
        self._live.clear()
        return [f.record(STATE_TIMED_OUT) for f in flows]


def track(packets: Iterable[DecodedPacket], cfg: TrackerConfig | None = None) -> list[ConnRecord]:
    """Run a full packet sequence through a fresh tracker and flush."""
    tracker = FlowTracker(cfg)
    out: list[ConnRecord] = []
    for pkt in packets:
        out.extend(tracker.feed(pkt))
    out.extend(tracker.flush())
    return out


def parse_networks(cidrs: Iterable[str | ipaddress.IPv4Network]) -> list[ipaddress.IPv4Network]:
    nets = []
    for c in cidrs:
        if isinstance(c, ipaddress.IPv4Network):
            nets.append(c)
        else:
            nets.append(ipaddress.IPv4Network(str(c), strict=False))
    return nets


def network_direction(src_ip: str, dst_ip: str, home_nets: list[ipaddress.IPv4Network]) -> str:
    src_home = any(ipaddress.IPv4Address(src_ip) in n for n in home_nets)
    dst_home = any(ipaddress.IPv4Address(dst_ip) in n for n in home_nets)
    if src_home and dst_home:
        return "internal"
    if src_home:
        return "outbound"
    if dst_home:
        return "inbound"
    return "external"


def conn_to_event(rec: ConnRecord, home_nets: Iterable[str | ipaddress.IPv4Network]) -> dict:
    """Flatten a connection record into a dotted-path event document."""
    nets = parse_networks(home_nets)
    doc = {
        "@timestamp": rec.start_ts_us,
        "event.kind": "event",
        "event.module": "zeek",
        "source.ip": rec.key.orig_ip,
        "source.port": rec.key.orig_port,
        "destination.ip": rec.key.resp_ip,
        "destination.port": rec.key.resp_port,
        "network.transport": rec.key.proto,
        "network.direction": network_direction(rec.key.orig_ip, rec.key.resp_ip, nets),
        "zeek.connection.state": rec.state,
    }
    if rec.history:
        doc["zeek.connection.history"] = rec.history
    if rec.key.proto == "icmp" and rec.icmp_type is not None:
        doc["zeek.connection.icmp.type"] = str(rec.icmp_type)
    return doc
