"""Canned analyst queries exposed by the CLI, the API, and the console."""

from __future__ import annotations

# Inbound or lateral flows that never completed a handshake (history does
# not start "Sh" and never saw FIN or data), plus inbound echo requests:
# the classic port-scan / ping-sweep picture.
PORT_SCAN_QUERY = (
    'not (network.direction: "outbound") and '
    '((not (network.transport: "icmp") and not(zeek.connection.history:/Sh*|F*|D*/)) '
    'or (network.transport: "icmp" and zeek.connection.icmp.type: "8"))'
)

# Everything that is not outbound; split by destination port to show where
# flood pressure lands.
DOS_QUERY = 'not (network.direction: "outbound")'

# Requests whose user agent identifies the sqlmap injection tool.
SQLI_QUERY = "user_agent.original: sqlmap*"

ALERTS_QUERY = 'event.kind: "alert"'

PRESETS: list[dict] = [
    {
        "id": "port-scan",
        "title": "Port scans and ping sweeps",
        "query_string": PORT_SCAN_QUERY,
        "kind": "event",
        "default_bucket_s": 5,
        "panels": [
            {"type": "histogram"},
            {
                "type": "table",
                "columns": [
                    "@timestamp",
                    "source.ip",
                    "destination.ip",
                    "destination.port",
                    "zeek.connection.history",
                    "network.transport",
                ],
            },
        ],
    },
    {
        "id": "dos",
        "title": "Inbound traffic by destination port",
        "query_string": DOS_QUERY,
        "kind": "event",
        "default_bucket_s": 1,
        "split_by": "destination.port",
        "panels": [
            {"type": "histogram"},
            {
                "type": "table",
                "columns": [
                    "@timestamp",
                    "source.ip",
                    "destination.ip",
                    "destination.port",
                    "network.transport",
                ],
            },
        ],
    },
    {
        "id": "sqli",
        "title": "SQL injection user agents",
        "query_string": SQLI_QUERY,
        "kind": "event",
        "default_bucket_s": 5,
        "panels": [
            {"type": "histogram"},
            {
                "type": "table",
                "columns": [
                    "@timestamp",
                    "source.ip",
                    "url.domain",
                    "url.original",
                    "user_agent.original",
                ],
            },
        ],
    },
    {
        "id": "alerts",
        "title": "Alerts by category",
        "query_string": ALERTS_QUERY,
        "kind": "alert",
        "default_bucket_s": 5,
        "split_by": "alert.category",
        "panels": [
            {"type": "histogram"},
            {
                "type": "table",
                "columns": [
                    "@timestamp",
                    "alert.category",
                    "alert.signature",
                    "alert.severity",
                    "source.ip",
                    "destination.ip",
                ],
            },
        ],
    },
]


def preset(preset_id: str) -> dict:
    for p in PRESETS:
        if p["id"] == preset_id:
            return p
    raise KeyError(f"no preset named {preset_id!r}")
