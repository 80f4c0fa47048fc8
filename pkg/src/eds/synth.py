"""Deterministic generation of labeled attack and background traffic.

Each scenario step plays one traffic tool: a SYN scanner sweeping a port
range, an echo ping train, a web scanner walking a path wordlist, a SYN
flood with spoofed sources, a SQL injection crawl, or benign client flows.
Steps are seeded individually from the scenario seed, so composing the same
scenario twice yields byte-identical pcap and label files. The label
sidecar (NDJSON, one record per packet, index-aligned) is the ground truth
that detection tests are scored against.
"""

from __future__ import annotations

import ipaddress
import json
import random
import struct
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .pcapio import IPPROTO_ICMP, IPPROTO_TCP, IPPROTO_UDP, RawPacket, TCP_FLAG_BITS, write_pcap

LABELS = ("benign", "scan", "ping", "probe", "dos", "sqli")

STEP_KINDS = {
    "syn_scan": "scan",
    "ping": "ping",
    "web_probe": "probe",
    "flood": "dos",
    "sqlmap": "sqli",
    "benign": "benign",
}

ETHERTYPE_IPV4 = 0x0800


# --- frame crafting ----------------------------------------------------


def checksum16(data: bytes) -> int:
    """RFC 1071 ones' complement sum over 16-bit words."""
    if len(data) % 2:
        data += b"\x00"
    total = sum(struct.unpack(f"!{len(data) // 2}H", data))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


def _mac(ip: str) -> bytes:
    # stable fake MAC derived from the address so frames diff cleanly
    return b"\x02\x00" + ipaddress.IPv4Address(ip).packed


def _ipv4_header(src: str, dst: str, proto: int, payload_len: int, ident: int, ttl: int) -> bytes:
    head = struct.pack(
        "!BBHHHBBH4s4s",
        0x45,
        0,
        20 + payload_len,
        ident & 0xFFFF,
        0,
        ttl,
        proto,
        0,
        ipaddress.IPv4Address(src).packed,
        ipaddress.IPv4Address(dst).packed,
    )
    return head[:10] + struct.pack("!H", checksum16(head)) + head[12:]


def _frame(ts_us: int, src: str, dst: str, proto: int, body: bytes, ident: int, ttl: int) -> RawPacket:
    ip = _ipv4_header(src, dst, proto, len(body), ident, ttl) + body
    eth = _mac(dst) + _mac(src) + struct.pack("!H", ETHERTYPE_IPV4) + ip
    return RawPacket(ts_us=ts_us, captured_len=len(eth), original_len=len(eth), data=eth)


def craft_tcp(
    ts_us: int,
    src: str,
    dst: str,
    sport: int,
    dport: int,
    flags: tuple[str, ...],
    seq: int = 0,
    ack: int = 0,
    window: int = 64240,
    payload: bytes = b"",
    ident: int = 0,
    ttl: int = 64,
) -> RawPacket:
    flag_bits = 0
    for name in flags:
        flag_bits |= TCP_FLAG_BITS[name]
    seg = struct.pack(
        "!HHIIBBHHH",
        sport,
        dport,
        seq & 0xFFFFFFFF,
        ack & 0xFFFFFFFF,
        5 << 4,
        flag_bits,
        window & 0xFFFF,
        0,
        0,
    ) + payload
    pseudo = ipaddress.IPv4Address(src).packed + ipaddress.IPv4Address(dst).packed
    pseudo += struct.pack("!BBH", 0, IPPROTO_TCP, len(seg))
    seg = seg[:16] + struct.pack("!H", checksum16(pseudo + seg)) + seg[18:]
    return _frame(ts_us, src, dst, IPPROTO_TCP, seg, ident, ttl)


def craft_udp(
    ts_us: int,
    src: str,
    dst: str,
    sport: int,
    dport: int,
    payload: bytes = b"",
    ident: int = 0,
    ttl: int = 64,
) -> RawPacket:
    dgram = struct.pack("!HHHH", sport, dport, 8 + len(payload), 0) + payload
    return _frame(ts_us, src, dst, IPPROTO_UDP, dgram, ident, ttl)


def craft_icmp(
    ts_us: int,
    src: str,
    dst: str,
    icmp_type: int,
    code: int = 0,
    ident: int = 0,
    seq: int = 0,
    payload: bytes = b"",
    ttl: int = 64,
) -> RawPacket:
    body = struct.pack("!HH", ident & 0xFFFF, seq & 0xFFFF) + payload
    head = struct.pack("!BBH", icmp_type, code, 0)
    csum = checksum16(head + body)
    msg = struct.pack("!BBH", icmp_type, code, csum) + body
    return _frame(ts_us, src, dst, IPPROTO_ICMP, msg, ident, ttl)


# --- HTTP payload helpers ----------------------------------------------


def _http_get(path: str, host: str, user_agent: str) -> bytes:
    lines = (
        f"GET {path} HTTP/1.1\r\n"
        f"Host: {host}\r\n"
        f"User-Agent: {user_agent}\r\n"
        "Accept: */*\r\n"
        "Connection: close\r\n"
        "\r\n"
    )
    return lines.encode("latin-1")


def _http_response(status: str, body: bytes) -> bytes:
    head = (
        f"HTTP/1.1 {status}\r\n"
        "Server: httpd\r\n"
        f"Content-Length: {len(body)}\r\n"
        "Connection: close\r\n"
        "\r\n"
    )
    return head.encode("latin-1") + body


def _tcp_exchange(
    rng: random.Random,
    ts_us: int,
    client: str,
    server: str,
    dport: int,
    request: bytes,
    response: bytes,
) -> list[RawPacket]:
    """A complete seven-packet flow: handshake, one exchange, FIN close."""
    sport = rng.randint(32768, 60999)
    cseq = rng.getrandbits(32)
    sseq = rng.getrandbits(32)
    step = lambda: rng.randint(150, 450)  # noqa: E731 - per-packet microsecond gap
    pkts = []
    t = ts_us
    pkts.append(craft_tcp(t, client, server, sport, dport, ("SYN",), seq=cseq))
    t += step()
    pkts.append(craft_tcp(t, server, client, dport, sport, ("SYN", "ACK"), seq=sseq, ack=cseq + 1))
    t += step()
    pkts.append(craft_tcp(t, client, server, sport, dport, ("ACK",), seq=cseq + 1, ack=sseq + 1))
    t += step()
    pkts.append(
        craft_tcp(t, client, server, sport, dport, ("ACK", "PSH"), seq=cseq + 1, ack=sseq + 1, payload=request)
    )
    t += step()
    pkts.append(
        craft_tcp(t, server, client, dport, sport, ("ACK", "PSH"), seq=sseq + 1, ack=cseq + 1 + len(request), payload=response)
    )
    t += step()
    pkts.append(
        craft_tcp(t, client, server, sport, dport, ("FIN", "ACK"), seq=cseq + 1 + len(request), ack=sseq + 1 + len(response))
    )
    t += step()
    pkts.append(
        craft_tcp(t, server, client, dport, sport, ("FIN", "ACK"), seq=sseq + 1 + len(response), ack=cseq + 2 + len(request))
    )
    return pkts


# --- step generators ---------------------------------------------------


def synth_syn_scan(
    rng: random.Random,
    start_ts_us: int,
    attacker: str,
    target: str,
    ports,
    open_ports: set[int] = frozenset(),
) -> list[RawPacket]:
    """Half-open sweep: closed ports answer RST, open ports get RST back."""
    pkts = []
    t = start_ts_us
    for port in ports:
        sport = rng.randint(32768, 60999)
        seq = rng.getrandbits(32)
        pkts.append(craft_tcp(t, attacker, target, sport, port, ("SYN",), seq=seq))
        reply_t = t + rng.randint(100, 300)
        if port in open_ports:
            sseq = rng.getrandbits(32)
            pkts.append(craft_tcp(reply_t, target, attacker, port, sport, ("SYN", "ACK"), seq=sseq, ack=seq + 1))
            pkts.append(craft_tcp(reply_t + rng.randint(100, 300), attacker, target, sport, port, ("RST",), seq=seq + 1))
        else:
            pkts.append(craft_tcp(reply_t, target, attacker, port, sport, ("RST", "ACK"), ack=seq + 1))
        t += rng.randint(800, 1200)
    return pkts


def synth_ping(rng: random.Random, start_ts_us: int, attacker: str, target: str, count: int) -> list[RawPacket]:
    """Echo request/reply pairs, shared identifier, one second apart."""
    ident = rng.randint(0x1000, 0xFFFF)
    filler = bytes(range(0x10, 0x38))
    pkts = []
    for seq in range(1, count + 1):
        t = start_ts_us + (seq - 1) * 1_000_000
        pkts.append(craft_icmp(t, attacker, target, 8, ident=ident, seq=seq, payload=filler))
        pkts.append(craft_icmp(t + rng.randint(200, 500), target, attacker, 0, ident=ident, seq=seq, payload=filler))
    return pkts


_PROBE_WORDLIST = [
    "/", "/admin/", "/administrator/", "/backup/", "/backup.tar.gz", "/cgi-bin/",
    "/cgi-bin/test.cgi", "/config.php", "/console/", "/crossdomain.xml", "/db/",
    "/debug/", "/docs/", "/etc/passwd", "/favicon.ico", "/forum/", "/icons/",
    "/include/", "/index.php", "/info.php", "/install/", "/js/", "/log/",
    "/login/", "/mail/", "/manager/html", "/old/", "/phpinfo.php", "/phpmyadmin/",
    "/private/", "/robots.txt", "/secret/", "/server-status", "/setup/",
    "/shell.php", "/sitemap.xml", "/sql/", "/stats/", "/temp/", "/test/",
    "/test.cgi", "/tmp/", "/tools/", "/upload/", "/uploads/", "/user/",
    "/webadmin/", "/webmail/", "/wp-admin/", "/wp-login.php", "/xmlrpc.php",
    "/.git/HEAD", "/.env", "/.htaccess", "/api/", "/api/v1/", "/auth/",
    "/cfg/", "/data/", "/dev/",
]

PROBE_USER_AGENT = "Mozilla/5.00 (Nikto/2.1.6) (Evasions:None) (Test:Port Check)"


def synth_web_probe(rng: random.Random, start_ts_us: int, attacker: str, target: str, n_paths: int) -> list[RawPacket]:
    """Scanner-style GETs over distinct wordlist paths, full flows."""
    pkts = []
    t = start_ts_us
    for i in range(n_paths):
        base = _PROBE_WORDLIST[i % len(_PROBE_WORDLIST)]
        path = base if i < len(_PROBE_WORDLIST) else f"{base}?r={i}"
        request = _http_get(path, target, PROBE_USER_AGENT)
        response = _http_response("404 Not Found", b"<html>not here</html>")
        pkts.extend(_tcp_exchange(rng, t, attacker, target, 80, request, response))
        t += rng.randint(40_000, 90_000)
    return pkts


def synth_flood(
    rng: random.Random,
    start_ts_us: int,
    target: str,
    port: int,
    count: int,
    home_net: str | None = None,
) -> list[RawPacket]:
    """SYN flood: spoofed public sources, 120-byte payload, window 64."""
    avoid = ipaddress.IPv4Network(home_net, strict=False) if home_net else None
    payload = b"X" * 120
    pkts = []
    for i in range(count):
        while True:
            addr = ipaddress.IPv4Address(rng.randint(0x01000000, 0xDFFFFFFF))
            if addr.is_loopback or (avoid is not None and addr in avoid):
                continue
            break
        pkts.append(
            craft_tcp(
                start_ts_us + i * 100,
                str(addr),
                target,
                rng.randint(1024, 65535),
                port,
                ("SYN",),
                seq=rng.getrandbits(32),
                window=64,
                payload=payload,
                ident=rng.getrandbits(16),
            )
        )
    return pkts


SQLMAP_USER_AGENT = "sqlmap/1.7.2#stable (https://sqlmap.org)"

_SQLI_PROBES = [
    "1%27%20AND%201%3D1--",          # 1' AND 1=1--
    "1%27%20AND%201%3D2--",          # 1' AND 1=2--
    "1%27%20OR%20%271%27%3D%271",    # 1' OR '1'='1
    "1%20AND%20SLEEP%285%29",        # 1 AND SLEEP(5)
    "1%27%20UNION%20SELECT%20NULL--",
    "1%27%3B%20DROP%20TABLE%20users--",
]


def synth_sqlmap(rng: random.Random, start_ts_us: int, attacker: str, target: str, n_requests: int) -> list[RawPacket]:
    """Injection crawl: GETs with tamper payloads and a sqlmap user agent."""
    pkts = []
    t = start_ts_us
    for i in range(n_requests):
        probe = _SQLI_PROBES[i % len(_SQLI_PROBES)]
        path = f"/login.php?id={probe}&n={i}"
        request = _http_get(path, target, SQLMAP_USER_AGENT)
        response = _http_response("200 OK", b"<html>welcome</html>")
        pkts.extend(_tcp_exchange(rng, t, attacker, target, 80, request, response))
        t += rng.randint(60_000, 140_000)
    return pkts


BENIGN_USER_AGENT = "Mozilla/5.0 (X11; Linux x86_64; rv:115.0) Gecko/20100101 Firefox/115.0"

_BENIGN_PATHS = ["/", "/index.html", "/news", "/about", "/api/status", "/img/logo.png"]


def synth_benign(
    rng: random.Random,
    start_ts_us: int,
    clients: list[str],
    servers: list[str],
    n_flows: int,
) -> list[RawPacket]:
    """Ordinary outbound browsing: HTTP, TLS-shaped 443, DNS lookups."""
    pkts = []
    t = start_ts_us
    for _ in range(n_flows):
        client = rng.choice(clients)
        server = rng.choice(servers)
        service = rng.choice([80, 80, 443, 53])
        if service == 53:
            sport = rng.randint(32768, 60999)
            query = rng.randbytes(rng.randint(24, 40))
            answer = rng.randbytes(rng.randint(40, 80))
            pkts.append(craft_udp(t, client, server, sport, 53, query))
            pkts.append(craft_udp(t + rng.randint(300, 900), server, client, 53, sport, answer))
        elif service == 443:
            hello = b"\x16\x03\x01" + rng.randbytes(rng.randint(60, 120))
            reply = b"\x16\x03\x03" + rng.randbytes(rng.randint(80, 160))
            pkts.extend(_tcp_exchange(rng, t, client, server, 443, hello, reply))
        else:
            request = _http_get(rng.choice(_BENIGN_PATHS), f"www.example-{server.replace('.', '-')}.net", BENIGN_USER_AGENT)
            response = _http_response("200 OK", b"<html><body>ok</body></html>")
            pkts.extend(_tcp_exchange(rng, t, client, server, 80, request, response))
        t += int(rng.uniform(0.2, 0.6) * 1_000_000)
    return pkts


# --- scenario composition ----------------------------------------------


class BadScenario(ValueError):
    """Scenario definition is malformed or out of documented ranges."""


@dataclass(frozen=True)
class ScenarioSpec:
    seed: int
    start_ts_us: int
    home_net: str
    steps: tuple[dict, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.start_ts_us <= 0:
            raise BadScenario("start_ts_us must be positive microseconds")
        ipaddress.IPv4Network(self.home_net, strict=False)
        for step in self.steps:
            if step.get("kind") not in STEP_KINDS:
                raise BadScenario(f"unknown step kind: {step.get('kind')!r}")


@dataclass(frozen=True)
class LabeledPcap:
    pcap_path: Path
    labels_path: Path
    labels: list[dict]


def _step_packets(spec: ScenarioSpec, index: int, step: dict) -> list[RawPacket]:
    rng = random.Random(f"{spec.seed}:{index}")
    t0 = spec.start_ts_us + int(float(step.get("start_offset_s", 0.0)) * 1_000_000)
    kind = step["kind"]
    if kind == "syn_scan":
        lo, hi = step["ports"]
        return synth_syn_scan(
            rng, t0, step["attacker"], step["target"], range(lo, hi + 1), set(step.get("open_ports", []))
        )
    if kind == "ping":
        return synth_ping(rng, t0, step["attacker"], step["target"], step["count"])
    if kind == "web_probe":
        return synth_web_probe(rng, t0, step["attacker"], step["target"], step["n_paths"])
    if kind == "flood":
        return synth_flood(rng, t0, step["target"], step["port"], step["count"], spec.home_net)
    if kind == "sqlmap":
        return synth_sqlmap(rng, t0, step["attacker"], step["target"], step["n_requests"])
    return synth_benign(rng, t0, list(step["clients"]), list(step["servers"]), step["n_flows"])


def compose(spec: ScenarioSpec, pcap_path: str | Path) -> LabeledPcap:
    """Render a scenario to a pcap plus its label sidecar.

    Steps are generated independently from per-step seeds and merged by
    timestamp, so output bytes depend only on the spec.
    """
    pcap_path = Path(pcap_path)
    tagged: list[tuple[RawPacket, str, str]] = []
    for index, step in enumerate(spec.steps):
        step_id = step.get("id") or f"{index:02d}-{step['kind']}"
        label = STEP_KINDS[step["kind"]]
        for pkt in _step_packets(spec, index, step):
            tagged.append((pkt, label, step_id))
    tagged.sort(key=lambda row: row[0].ts_us)
    write_pcap(pcap_path, [pkt for pkt, _, _ in tagged])
    labels = [
        {"index": i, "label": label, "step_id": step_id}
        for i, (_, label, step_id) in enumerate(tagged)
    ]
    labels_path = pcap_path.with_name(pcap_path.name + ".labels.ndjson")
    with labels_path.open("w", encoding="utf-8") as fh:
        for rec in labels:
            fh.write(json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n")
    return LabeledPcap(pcap_path=pcap_path, labels_path=labels_path, labels=labels)


def read_labels(path: str | Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        labels = [json.loads(line) for line in fh if line.strip()]
    for i, rec in enumerate(labels):
        if rec.get("index") != i or rec.get("label") not in LABELS:
            raise BadScenario(f"label sidecar broken at line {i + 1}")
    return labels


def spec_from_dict(raw: dict) -> ScenarioSpec:
    try:
        return ScenarioSpec(
            seed=int(raw["seed"]),
            start_ts_us=int(raw["start_ts_us"]),
            home_net=str(raw["home_net"]),
            steps=tuple(dict(s) for s in raw.get("steps", [])),
        )
    except KeyError as exc:
        raise BadScenario(f"scenario is missing {exc.args[0]!r}") from exc


def load_scenario(path: str | Path) -> ScenarioSpec:
    with open(path, encoding="utf-8") as fh:
        return spec_from_dict(json.load(fh))


def builtin_scenario(name: str = "full-campaign") -> ScenarioSpec:
    """A scenario shipped with the package, by name."""
    fname = name.replace("-", "_") + ".json"
    ref = resources.files("eds.data").joinpath(fname)
    if not ref.is_file():
        raise BadScenario(f"no builtin scenario named {name!r}")
    return spec_from_dict(json.loads(ref.read_text(encoding="utf-8")))
