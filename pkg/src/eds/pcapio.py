"""Classic pcap reading/writing and Ethernet/IPv4 frame decoding.

Supports the classic pcap container only (both byte orders, microsecond
timestamps, Ethernet link type) plus a minimal HTTP/1.x request parser used
for user-agent extraction. Decoding never raises on malformed frames: every
frame either becomes a :class:`DecodedPacket` or a :class:`Skipped` with a
machine-readable reason.
"""

from __future__ import annotations

import re
import socket
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

LINKTYPE_ETHERNET = 1

PCAP_MAGIC_BE = b"\xa1\xb2\xc3\xd4"
PCAP_MAGIC_LE = b"\xd4\xc3\xb2\xa1"
# nanosecond-resolution magics are deliberately unsupported
_PCAP_MAGIC_NS = (b"\xa1\xb2\x3c\x4d", b"\x4d\x3c\xb2\xa1")

_GLOBAL_HEADER = "IHHiIII"  # magic, major, minor, tz, sigfigs, snaplen, network
_RECORD_HEADER = "IIII"  # ts_sec, ts_usec, incl_len, orig_len

ETHERTYPE_IPV4 = 0x0800

IPPROTO_ICMP = 1
IPPROTO_TCP = 6
IPPROTO_UDP = 17

TCP_FLAG_BITS = {
    "FIN": 0x01,
    "SYN": 0x02,
    "RST": 0x04,
    "PSH": 0x08,
    "ACK": 0x10,
    "URG": 0x20,
}


class BadMagic(ValueError):
    """File does not start with a recognized classic pcap magic."""


class Truncated(ValueError):
    """File ends inside a record header or record body."""


@dataclass(frozen=True)
class RawPacket:
    """One undecoded capture record."""

    ts_us: int
    captured_len: int
    original_len: int
    data: bytes


@dataclass(frozen=True)
class DecodedPacket:
    """A parsed IPv4 packet with its transport-layer details."""

    ts_us: int
    src_ip: str
    dst_ip: str
    ip_proto: str  # "tcp" | "udp" | "icmp"
    src_port: int
    dst_port: int
    tcp_flags: frozenset[str]
    payload: bytes
    ip_total_len: int
    icmp_type: int | None = None
    icmp_code: int | None = None

    def has_flags(self, *names: str) -> bool:
        return all(n in self.tcp_flags for n in names)


@dataclass(frozen=True)
class Skipped:
    """Marker for a frame the decoder cannot or will not interpret."""

    reason: str


@dataclass(frozen=True)
class HttpRequestInfo:
    """Fields pulled from an HTTP/1.x request found in a TCP payload."""

    method: str
    uri: str
    version: str
    host: str | None = None
    user_agent: str | None = None


def _read_exact(fh, n: int, what: str) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise Truncated(f"file ends inside {what} ({len(buf)}/{n} bytes)")
    return buf


def _byte_order(magic: bytes) -> str:
    if magic == PCAP_MAGIC_BE:
        return ">"
    if magic == PCAP_MAGIC_LE:
        return "<"
    if magic in _PCAP_MAGIC_NS:
        raise BadMagic("nanosecond-resolution pcap is not supported")
    raise BadMagic(f"unrecognized pcap magic {magic.hex()}")


def pcap_link_type(path: str | Path) -> int:
    """Return the link type declared in the file's global header."""
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "global header")
        order = _byte_order(magic)
        rest = _read_exact(fh, 20, "global header")
        _, _, _, _, _, network = struct.unpack(order + _GLOBAL_HEADER[1:], rest)
    return network


def read_pcap(path: str | Path) -> Iterator[RawPacket]:
    """Yield every record from a classic pcap file in file order.

    Timestamps are converted to integer microseconds; the header magic
    determines byte order. Raises :class:`BadMagic` for unrecognized headers
    and :class:`Truncated` if the file ends mid-record.
    """
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "global header")
        order = _byte_order(magic)
        _read_exact(fh, 20, "global header")
        rec = struct.Struct(order + _RECORD_HEADER)
        while True:
            head = fh.read(rec.size)
            if not head:
                return
            if len(head) < rec.size:
                raise Truncated("file ends inside a record header")
            ts_sec, ts_usec, incl_len, orig_len = rec.unpack(head)
            data = fh.read(incl_len)
            if len(data) < incl_len:
                raise Truncated(
                    f"record declares {incl_len} bytes, only {len(data)} present"
                )
            yield RawPacket(
                ts_us=ts_sec * 1_000_000 + ts_usec,
                captured_len=incl_len,
                original_len=orig_len,
                data=data,
            )


def write_pcap(
    path: str | Path,
    packets: list[RawPacket],
    byte_order: str = "<",
    snaplen: int = 65535,
    link_type: int = LINKTYPE_ETHERNET,
) -> None:
    """Write records as a classic pcap file in the given byte order."""
    if byte_order not in ("<", ">"):
        raise ValueError("byte_order must be '<' or '>'")
    magic = PCAP_MAGIC_LE if byte_order == "<" else PCAP_MAGIC_BE
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(struct.pack(byte_order + _GLOBAL_HEADER[1:], 2, 4, 0, 0, snaplen, link_type))
        rec = struct.Struct(byte_order + _RECORD_HEADER)
        for pkt in packets:
            fh.write(
                rec.pack(
                    pkt.ts_us // 1_000_000,
                    pkt.ts_us % 1_000_000,
                    len(pkt.data),
                    pkt.original_len,
                )
            )
            fh.write(pkt.data)


def decode_packet(pkt: RawPacket, link_type: int = LINKTYPE_ETHERNET) -> DecodedPacket | Skipped:
    """Decode an Ethernet/IPv4 frame down to its transport layer.

    Total over arbitrary bytes: anything that is not a well-formed IPv4
    TCP/UDP/ICMP frame comes back as :class:`Skipped` instead of raising.
    """
    if link_type != LINKTYPE_ETHERNET:
        return Skipped("link-type")
    frame = pkt.data
    if len(frame) < 14:
        return Skipped("header-too-short")
    ethertype = int.from_bytes(frame[12:14], "big")
    if ethertype != ETHERTYPE_IPV4:
        return Skipped("non-ipv4")
    ip = frame[14:]
    if len(ip) < 20:
        return Skipped("header-too-short")
    ver_ihl = ip[0]
    if ver_ihl >> 4 != 4:
        return Skipped("non-ipv4")
    ihl = (ver_ihl & 0x0F) * 4
    if ihl < 20 or len(ip) < ihl:
        return Skipped("header-too-short")
    total_len = int.from_bytes(ip[2:4], "big")
    if total_len < ihl:
        return Skipped("header-too-short")
    flags_frag = int.from_bytes(ip[6:8], "big")
    if flags_frag & 0x2000 or flags_frag & 0x1FFF:
        return Skipped("ip-fragment")
    proto = ip[9]
    src_ip = socket.inet_ntoa(ip[12:16])
    dst_ip = socket.inet_ntoa(ip[16:20])
    # trim Ethernet padding: only total_len bytes of the IP packet are real
    body = ip[ihl : min(len(ip), total_len)]

    if proto == IPPROTO_TCP:
        if len(body) < 20:
            return Skipped("header-too-short")
        sport = int.from_bytes(body[0:2], "big")
        dport = int.from_bytes(body[2:4], "big")
        data_off = (body[12] >> 4) * 4
        if data_off < 20 or len(body) < data_off:
            return Skipped("header-too-short")
        flag_bits = body[13]
        flags = frozenset(n for n, b in TCP_FLAG_BITS.items() if flag_bits & b)
        return DecodedPacket(
            ts_us=pkt.ts_us,
            src_ip=src_ip,
            dst_ip=dst_ip,
            ip_proto="tcp",
            src_port=sport,
            dst_port=dport,
            tcp_flags=flags,
            payload=bytes(body[data_off:]),
            ip_total_len=total_len,
        )
    if proto == IPPROTO_UDP:
        if len(body) < 8:
            return Skipped("header-too-short")
        sport = int.from_bytes(body[0:2], "big")
        dport = int.from_bytes(body[2:4], "big")
        udp_len = int.from_bytes(body[4:6], "big")
        end = min(len(body), udp_len) if udp_len >= 8 else len(body)
        return DecodedPacket(
            ts_us=pkt.ts_us,
            src_ip=src_ip,
            dst_ip=dst_ip,
            ip_proto="udp",
            src_port=sport,
            dst_port=dport,
            tcp_flags=frozenset(),
            payload=bytes(body[8:end]),
            ip_total_len=total_len,
        )
    if proto == IPPROTO_ICMP:
        if len(body) < 4:
            return Skipped("header-too-short")
        return DecodedPacket(
            ts_us=pkt.ts_us,
            src_ip=src_ip,
            dst_ip=dst_ip,
            ip_proto="icmp",
            src_port=0,
            dst_port=0,
            tcp_flags=frozenset(),
            payload=bytes(body[4:]),
            ip_total_len=total_len,
            icmp_type=body[0],
            icmp_code=body[1],
        )
    return Skipped("unsupported-transport")


_REQUEST_METHODS = {
    "GET", "HEAD", "POST", "PUT", "DELETE", "OPTIONS", "TRACE", "CONNECT", "PATCH",
}

_REQUEST_LINE = re.compile(r"^([A-Z]+) (\S+) (HTTP/1\.[01])\r\n")
_HEADER_LINE = re.compile(r"^([!#$%&'*+.^_`|~0-9A-Za-z-]+):[ \t]*(.*?)[ \t]*$")


def parse_http_request(payload: bytes) -> HttpRequestInfo | None:
    """Extract request line, Host and User-Agent from an HTTP/1.x request.

    Returns None for anything that does not begin with a valid request line
    (responses, partial lines, binary payloads). Header names are matched
    case-insensitively; values are returned without trailing CR/LF. Bytes
    after the header block never influence the result.
    """
    if not payload:
        return None
    text = payload.decode("latin-1")
    m = _REQUEST_LINE.match(text)
    if not m or m.group(1) not in _REQUEST_METHODS:
        return None
    host = None
    user_agent = None
    for line in text[m.end():].split("\r\n"):
        if line == "":
            break  # end of header block
        hm = _HEADER_LINE.match(line)
        if not hm:
            break
        name = hm.group(1).lower()
        if name == "host" and host is None:
            host = hm.group(2)
        elif name == "user-agent" and user_agent is None:
            user_agent = hm.group(2)
    return HttpRequestInfo(
        method=m.group(1),
        uri=m.group(2),
        version=m.group(3),
        host=host,
        user_agent=user_agent,
    )
