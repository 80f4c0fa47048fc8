"""Rule-driven packet alerting: a small signature DSL and match engine.

Rules follow the familiar one-line IDS shape::

    alert tcp any any -> 192.168.0.0/16 80 (msg:"..."; flags:S; sid:1; ...)

Options are restricted to msg, flags, content, http.user_agent, threshold,
classtype, sid and severity. Flag matching is exact-set over SYN/ACK/FIN/RST,
content is a byte substring of the payload, and http.user_agent a
case-sensitive substring of the parsed request's user agent. A threshold
`count N,seconds S` damps a rule to fire on every Nth match of the same
(sid, src, dst) within a sliding S-second window.
"""

from __future__ import annotations

import ipaddress
import re
from collections import deque
from dataclasses import dataclass
from importlib import resources
from typing import Iterable

from .pcapio import DecodedPacket, HttpRequestInfo, parse_http_request

CATEGORY_BY_CLASSTYPE = {
    "attempted-recon": "Attempted Information Leak",
    "web-application-attack": "Web Application Attack",
    "denial-of-service": "Attempted Denial of Service",
    "icmp-event": "Generic ICMP event",
    "misc-activity": "Misc activity",
}

_FLAG_LETTERS = {"S": "SYN", "A": "ACK", "F": "FIN", "R": "RST"}
FLAG_NAMES = frozenset(_FLAG_LETTERS.values())

_OPTION_KEYS = {"msg", "flags", "content", "http.user_agent", "threshold", "classtype", "sid", "severity"}


class RuleParseError(ValueError):
    """A ruleset line could not be parsed; carries line number and reason."""

    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


@dataclass(frozen=True)
class Threshold:
    count: int
    seconds: float


@dataclass(frozen=True)
class SigRule:
    sid: int
    proto: str | None  # None means any
    src: ipaddress.IPv4Network | None
    src_ports: frozenset[int] | None
    dst: ipaddress.IPv4Network | None
    dst_ports: frozenset[int] | None
    msg: str
    classtype: str
    severity: int
    flags_required: frozenset[str] | None = None
    content: bytes | None = None
    http_user_agent: str | None = None
    threshold: Threshold | None = None

    @property
    def category(self) -> str:
        return CATEGORY_BY_CLASSTYPE[self.classtype]


@dataclass(frozen=True)
class SigAlert:
    ts_us: int
    sid: int
    msg: str
    category: str
    severity: int
    src_ip: str
    src_port: int
    dst_ip: str
    dst_port: int
    proto: str


# --- ruleset parsing ---------------------------------------------------

_HEAD_RE = re.compile(
    r"^alert\s+(\S+)\s+(\S+)\s+(\S+)\s+->\s+(\S+)\s+(\S+)\s*\((.*)\)\s*$"
)
_THRESHOLD_RE = re.compile(r"^count\s+(\d+)\s*,\s*seconds\s+(\d+(?:\.\d+)?)$")


def _parse_net(token: str, line_no: int) -> ipaddress.IPv4Network | None:
    if token == "any":
        return None
    try:
        return ipaddress.IPv4Network(token, strict=False)
    except ValueError as exc:
        raise RuleParseError(line_no, f"bad address spec {token!r}: {exc}") from exc


def _parse_ports(token: str, line_no: int) -> frozenset[int] | None:
    if token == "any":
        return None
    ports: set[int] = set()
    for part in token.split(","):
        if ":" in part:
            lo_s, hi_s = part.split(":", 1)
            if not (lo_s.isdigit() and hi_s.isdigit()):
                raise RuleParseError(line_no, f"malformed port range {part!r}")
            lo, hi = int(lo_s), int(hi_s)
            if lo > hi:
                raise RuleParseError(line_no, f"malformed port range {part!r}")
            ports.update(range(lo, hi + 1))
        elif part.isdigit():
            ports.add(int(part))
        else:
            raise RuleParseError(line_no, f"malformed port range {part!r}")
    if not ports or max(ports) > 65535:
        raise RuleParseError(line_no, f"malformed port range {token!r}")
    return frozenset(ports)


def _split_options(blob: str, line_no: int) -> list[tuple[str, str]]:
    # split on ';' outside quotes, then on the first ':' of each option
    parts: list[str] = []
    buf: list[str] = []
    in_quotes = False
    i = 0
    while i < len(blob):
        c = blob[i]
        if c == '"' and (i == 0 or blob[i - 1] != "\\"):
            in_quotes = not in_quotes
        if c == ";" and not in_quotes:
            parts.append("".join(buf))
            buf = []
        else:
            buf.append(c)
        i += 1
    if in_quotes:
        raise RuleParseError(line_no, "unterminated quote in options")
    if "".join(buf).strip():
        parts.append("".join(buf))
    out = []
    for part in parts:
        part = part.strip()
        if not part:
            continue
        if ":" not in part:
            raise RuleParseError(line_no, f"option without value: {part!r}")
        key, value = part.split(":", 1)
        out.append((key.strip(), value.strip()))
    return out


def _unquote(value: str, line_no: int) -> str:
    if len(value) < 2 or value[0] != '"' or value[-1] != '"':
        raise RuleParseError(line_no, f"expected quoted value, got {value!r}")
    return value[1:-1].replace('\\"', '"').replace("\\\\", "\\")


def _parse_rule_line(line: str, line_no: int) -> SigRule:
    m = _HEAD_RE.match(line)
    if not m:
        raise RuleParseError(line_no, "expected: alert <proto> <src> <sports> -> <dst> <dports> (...)")
    proto_tok, src_tok, sports_tok, dst_tok, dports_tok, options_blob = m.groups()
    if proto_tok not in ("tcp", "udp", "icmp", "any"):
        raise RuleParseError(line_no, f"unknown protocol {proto_tok!r}")
    proto = None if proto_tok == "any" else proto_tok

    fields = {
        "sid": None,
        "msg": "",
        "classtype": "misc-activity",
        "severity": 3,
        "flags_required": None,
        "content": None,
        "http_user_agent": None,
        "threshold": None,
    }
    for key, value in _split_options(options_blob, line_no):
        if key not in _OPTION_KEYS:
            raise RuleParseError(line_no, f"unknown option key {key!r}")
        if key == "msg":
            fields["msg"] = _unquote(value, line_no)
        elif key == "content":
            fields["content"] = _unquote(value, line_no).encode("latin-1")
        elif key == "http.user_agent":
            fields["http_user_agent"] = _unquote(value, line_no)
        elif key == "flags":
            letters = set(value)
            if not letters or not letters <= set(_FLAG_LETTERS):
                raise RuleParseError(line_no, f"bad flags {value!r} (use letters SAFR)")
            fields["flags_required"] = frozenset(_FLAG_LETTERS[c] for c in letters)
        elif key == "threshold":
            tm = _THRESHOLD_RE.match(value)
            if not tm:
                raise RuleParseError(line_no, f"bad threshold {value!r} (use: count N,seconds S)")
            count, seconds = int(tm.group(1)), float(tm.group(2))
            if count < 1 or seconds <= 0:
                raise RuleParseError(line_no, f"bad threshold {value!r}")
            fields["threshold"] = Threshold(count, seconds)
        elif key == "classtype":
            if value not in CATEGORY_BY_CLASSTYPE:
                raise RuleParseError(line_no, f"unknown classtype {value!r}")
            fields["classtype"] = value
        elif key == "sid":
            if not value.isdigit():
                raise RuleParseError(line_no, f"bad sid {value!r}")
            fields["sid"] = int(value)
        elif key == "severity":
            if not value.isdigit() or not 1 <= int(value) <= 4:
                raise RuleParseError(line_no, f"severity must be 1-4, got {value!r}")
            fields["severity"] = int(value)
    if fields["sid"] is None:
        raise RuleParseError(line_no, "rule has no sid")
    return SigRule(
        sid=fields["sid"],
        proto=proto,
        src=_parse_net(src_tok, line_no),
        src_ports=_parse_ports(sports_tok, line_no),
        dst=_parse_net(dst_tok, line_no),
        dst_ports=_parse_ports(dports_tok, line_no),
        msg=fields["msg"],
        classtype=fields["classtype"],
        severity=fields["severity"],
        flags_required=fields["flags_required"],
        content=fields["content"],
        http_user_agent=fields["http_user_agent"],
        threshold=fields["threshold"],
    )


def parse_ruleset(text: str) -> list[SigRule]:
    """Parse rule lines; '#' comments and blank lines are ignored."""
    rules: list[SigRule] = []
    seen_sids: set[int] = set()
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        rule = _parse_rule_line(line, line_no)
        if rule.sid in seen_sids:
            raise RuleParseError(line_no, f"duplicate sid {rule.sid}")
        seen_sids.add(rule.sid)
        rules.append(rule)
    return rules


def default_ruleset() -> list[SigRule]:
    text = resources.files("eds.data").joinpath("default.rules").read_text(encoding="utf-8")
    return parse_ruleset(text)


# --- matching ----------------------------------------------------------


def match_packet(rule: SigRule, pkt: DecodedPacket, http: HttpRequestInfo | None = None) -> bool:
    """Does this packet satisfy every constraint of the rule?"""
    if rule.proto is not None and pkt.ip_proto != rule.proto:
        return False
    if rule.src is not None and ipaddress.IPv4Address(pkt.src_ip) not in rule.src:
        return False
    if rule.dst is not None and ipaddress.IPv4Address(pkt.dst_ip) not in rule.dst:
        return False
    if rule.src_ports is not None and pkt.src_port not in rule.src_ports:
        return False
    if rule.dst_ports is not None and pkt.dst_port not in rule.dst_ports:
        return False
    if rule.flags_required is not None:
        if pkt.ip_proto != "tcp" or (pkt.tcp_flags & FLAG_NAMES) != rule.flags_required:
            return False
    if rule.content is not None and rule.content not in pkt.payload:
        return False
    if rule.http_user_agent is not None:
        if http is None or http.user_agent is None or rule.http_user_agent not in http.user_agent:
            return False
    return True


class ThresholdTracker:
    """Sliding-window damping state, keyed by (sid, src_ip, dst_ip)."""

    def __init__(self) -> None:
        self._windows: dict[tuple, deque] = {}

    def apply_threshold(self, rule: SigRule, key: tuple[str, str], ts_us: int) -> str:
        """Outcome for one matching packet: "fire" or "suppress"."""
        if rule.threshold is None:
            return "fire"
        window = self._windows.setdefault((rule.sid, *key), deque())
        horizon = ts_us - int(rule.threshold.seconds * 1_000_000)
        while window and window[0] <= horizon:
            window.popleft()
        window.append(ts_us)
        if len(window) >= rule.threshold.count:
            window.clear()  # the next fire needs a fresh run of matches
            return "fire"
        return "suppress"


def alert_to_event(alert: SigAlert) -> dict:
    return {
        "@timestamp": alert.ts_us,
        "event.kind": "alert",
        "event.module": "suricata",
        "alert.signature": alert.msg,
        "alert.category": alert.category,
        "alert.severity": alert.severity,
        "alert.sid": alert.sid,
        "source.ip": alert.src_ip,
        "source.port": alert.src_port,
        "destination.ip": alert.dst_ip,
        "destination.port": alert.dst_port,
        "network.transport": alert.proto,
    }


class SignatureEngine:
    """Stream packets through a ruleset, producing damped alerts."""

    def __init__(self, rules: list[SigRule]):
        self.rules = list(rules)
        self._thresholds = ThresholdTracker()

    def feed(self, pkt: DecodedPacket, http: HttpRequestInfo | None = None) -> list[SigAlert]:
        alerts = []
        for rule in self.rules:
            if not match_packet(rule, pkt, http):
                continue
            outcome = self._thresholds.apply_threshold(rule, (pkt.src_ip, pkt.dst_ip), pkt.ts_us)
            if outcome == "fire":
                alerts.append(
                    SigAlert(
                        ts_us=pkt.ts_us,
                        sid=rule.sid,
                        msg=rule.msg,
                        category=rule.category,
                        severity=rule.severity,
                        src_ip=pkt.src_ip,
                        src_port=pkt.src_port,
                        dst_ip=pkt.dst_ip,
                        dst_port=pkt.dst_port,
                        proto=pkt.ip_proto,
                    )
                )
        return alerts


def run(rules: list[SigRule], packets: Iterable[DecodedPacket]) -> list[SigAlert]:
    """One-shot engine pass; HTTP requests are parsed from TCP payloads."""
    engine = SignatureEngine(rules)
    alerts: list[SigAlert] = []
    for pkt in packets:
        http = parse_http_request(pkt.payload) if pkt.ip_proto == "tcp" and pkt.payload else None
        alerts.extend(engine.feed(pkt, http))
    return alerts
