"""Anomaly engine: detector thresholds, window semantics, evidence."""

import random

import pytest

from eds.anomaly import AnomalyAlert, AnomalyConfig, AnomalyEngine, alert_to_event
from eds.flows import ConnRecord, FlowKey, FlowTracker
from eds.pcapio import decode_packet
from eds.synth import craft_icmp, craft_tcp, synth_benign

SEC = 1_000_000


def conn(src, dst, port, history, ts_us, proto="tcp"):
    key = FlowKey(src, dst, 40000, port, proto)
    return ConnRecord("C0", key, ts_us, ts_us, history, 2, 1, 0, 0, "closed")


def syn(ts_us, src, dst, dport):
    return decode_packet(craft_tcp(ts_us, src, dst, 40000, dport, ("SYN",)))


def echo(ts_us, src, dst, icmp_type=8):
    return decode_packet(craft_icmp(ts_us, src, dst, icmp_type))


def run_engine(events, cfg=None):
    engine = AnomalyEngine(cfg)
    alerts = []
    for ev in events:
        alerts.extend(engine.observe(ev))
    alerts.extend(engine.flush())
    return alerts


# --- config ------------------------------------------------------------


@pytest.mark.parametrize(
    "kwargs",
    [
        {"window_s": 0},
        {"flood_window_s": -1},
        {"scan_distinct_ports": 0},
        {"sweep_echo_count": 0},
        {"flood_syn_count": 0},
        {"spoof_distinct_srcs": 0},
    ],
)
def test_config_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        AnomalyConfig(**kwargs)


def test_alert_rejects_bad_confidence():
    with pytest.raises(ValueError):
        AnomalyAlert(1, "port_scan", "reconnaissance scanning", 1.5, {})


# --- port scan ---------------------------------------------------------


def scan_records(n_ports, start_us=10 * SEC, gap_us=1000, history="S"):
    return [
        conn("203.0.113.66", "192.168.1.10", 1 + i, history, start_us + i * gap_us)
        for i in range(n_ports)
    ]


def test_scan_below_threshold_is_silent():
    assert run_engine(scan_records(19)) == []


def test_scan_at_threshold_fires_once():
    (alert,) = run_engine(scan_records(20))
    assert alert.detector == "port_scan"
    assert alert.category == "reconnaissance scanning"
    assert alert.confidence == pytest.approx(0.2)
    assert alert.evidence == {"distinct_ports": 20}
    assert alert.src_ip == "203.0.113.66"
    assert alert.dst_ip == "192.168.1.10"


def test_scan_confidence_saturates():
    (alert,) = run_engine(scan_records(999))
    assert alert.confidence == 1.0
    assert alert.evidence == {"distinct_ports": 999}


def test_scan_counts_distinct_not_total():
    # the same 10 ports probed repeatedly never reach 20 distinct
    records = []
    for rep in range(5):
        records.extend(scan_records(10, start_us=10 * SEC + rep * 100_000))
    assert run_engine(records) == []


@pytest.mark.parametrize("history", ["ShADdFf", "ShR", "ShAF"])
def test_scan_ignores_answered_flows(history):
    assert run_engine(scan_records(50, history=history)) == []


def test_scan_mixed_histories_counts_only_failed():
    records = scan_records(15, history="S") + [
        conn("203.0.113.66", "192.168.1.10", 100 + i, "ShR", 11 * SEC + i * 1000) for i in range(15)
    ] + [
        conn("203.0.113.66", "192.168.1.10", 200 + i, "Sr", 12 * SEC + i * 1000) for i in range(10)
    ]
    (alert,) = run_engine(records)
    assert alert.evidence == {"distinct_ports": 25}


def test_scan_ignores_non_tcp_conns():
    records = [conn("1.1.1.1", "2.2.2.2", p, "S", 10 * SEC + p, proto="udp") for p in range(1, 60)]
    assert run_engine(records) == []


def test_scan_keys_by_source_destination_pair():
    records = scan_records(15) + [
        conn("203.0.113.67", "192.168.1.10", 1 + i, "S", 10 * SEC + i * 1000) for i in range(15)
    ]
    assert run_engine(records) == []


def test_scan_window_eviction_forgets_old_ports():
    # 15 ports, a 2 minute pause, then 15 more: never 20 in one window
    records = scan_records(15) + scan_records(15, start_us=140 * SEC)
    assert run_engine(records) == []


def test_scan_two_bursts_two_alerts():
    records = scan_records(30) + scan_records(30, start_us=300 * SEC)
    alerts = run_engine(records)
    assert [a.detector for a in alerts] == ["port_scan", "port_scan"]
    assert [a.evidence["distinct_ports"] for a in alerts] == [30, 30]


def test_pending_alert_absorbs_growth_within_window():
    # crossing happens at 20 ports, but the emitted alert reflects the peak
    alerts = run_engine(scan_records(60))
    assert len(alerts) == 1
    assert alerts[0].evidence == {"distinct_ports": 60}
    assert alerts[0].confidence == pytest.approx(0.6)


def test_pending_emitted_when_window_passes():
    engine = AnomalyEngine()
    emitted = []
    for rec in scan_records(25):
        emitted.extend(engine.observe(rec))
    assert emitted == []  # still pending
    emitted.extend(engine.observe(conn("9.9.9.9", "8.8.8.8", 1, "S", 200 * SEC)))
    assert len(emitted) == 1 and emitted[0].detector == "port_scan"
    assert engine.flush() == []


# --- icmp sweep --------------------------------------------------------


def test_sweep_below_threshold_is_silent():
    pkts = [echo(10 * SEC + i * SEC, "203.0.113.66", "192.168.1.10") for i in range(7)]
    assert run_engine(pkts) == []


def test_sweep_at_threshold():
    pkts = [echo(10 * SEC + i * SEC, "203.0.113.66", "192.168.1.10") for i in range(10)]
    (alert,) = run_engine(pkts)
    assert alert.detector == "icmp_sweep"
    assert alert.category == "reconnaissance scanning"
    assert alert.confidence == pytest.approx(0.5)
    assert alert.evidence == {"echo_requests": 10}
    assert alert.src_ip == "203.0.113.66"


def test_sweep_ignores_replies():
    pkts = [echo(10 * SEC + i * SEC, "192.168.1.10", "203.0.113.66", icmp_type=0) for i in range(20)]
    assert run_engine(pkts) == []


def test_sweep_window_eviction():
    # 6 requests, a long pause, 6 more: never 8 inside 60s
    pkts = [echo(10 * SEC + i * SEC, "1.1.1.1", "2.2.2.2") for i in range(6)]
    pkts += [echo(200 * SEC + i * SEC, "1.1.1.1", "2.2.2.2") for i in range(6)]
    assert run_engine(pkts) == []


# --- syn flood ---------------------------------------------------------


def flood_packets(n, start_us=10 * SEC, gap_us=100, src="203.0.113.66", dst="192.168.1.10", port=80, sources=None):
    out = []
    for i in range(n):
        s = sources[i % len(sources)] if sources else src
        out.append(syn(start_us + i * gap_us, s, dst, port))
    return out


def test_flood_below_threshold_is_silent():
    assert run_engine(flood_packets(499)) == []


def test_flood_single_source_not_spoofed():
    (alert,) = run_engine(flood_packets(500))
    assert alert.detector == "syn_flood"
    assert alert.category == "Attempted Denial of Service"
    assert alert.dst_port == 80
    assert alert.confidence == pytest.approx(0.5)
    assert alert.evidence["syn_count"] == 500
    assert alert.evidence["distinct_sources"] == 1
    assert alert.evidence["spoofed_source"] is False


def test_flood_many_sources_flagged_spoofed():
    sources = [f"198.51.{i // 250}.{i % 250 + 1}" for i in range(150)]
    (alert,) = run_engine(flood_packets(600, sources=sources))
    assert alert.evidence["spoofed_source"] is True
    assert alert.evidence["distinct_sources"] == 150


def test_flood_keys_by_destination_port():
    pkts = flood_packets(400, port=80) + flood_packets(400, start_us=11 * SEC, port=443)
    assert run_engine(pkts) == []
    pkts = flood_packets(500, port=80) + flood_packets(500, start_us=11 * SEC, port=443)
    alerts = run_engine(pkts)
    assert sorted(a.dst_port for a in alerts) == [80, 443]


def test_flood_ignores_syn_ack():
    pkts = [
        decode_packet(craft_tcp(10 * SEC + i * 100, "1.1.1.1", "2.2.2.2", 40000, 80, ("SYN", "ACK")))
        for i in range(800)
    ]
    assert run_engine(pkts) == []


def test_flood_window_eviction():
    # 300 SYNs, 30s pause, 300 more: never 500 inside the 10s window
    pkts = flood_packets(300) + flood_packets(300, start_us=45 * SEC)
    assert run_engine(pkts) == []


# --- brute force oracle ------------------------------------------------


def brute_force_fired_keys(events, cfg):
    """Recompute every firing decision from scratch at each observation."""
    window = int(cfg.window_s * SEC)
    flood_window = int(cfg.flood_window_s * SEC)
    conns = [e for e in events if isinstance(e, ConnRecord)]
    pkts = [e for e in events if not isinstance(e, ConnRecord)]
    fired = set()
    for i, rec in enumerate(conns):
        if rec.key.proto != "tcp":
            continue
        now = rec.last_ts_us
        ports = {
            r.key.resp_port
            for r in conns[: i + 1]
            if r.key.proto == "tcp"
            and (r.key.orig_ip, r.key.resp_ip) == (rec.key.orig_ip, rec.key.resp_ip)
            and (r.history == "S" or r.history.startswith("Sr"))
            and r.last_ts_us > now - window
        }
        if (rec.history == "S" or rec.history.startswith("Sr")) and len(ports) >= cfg.scan_distinct_ports:
            fired.add(("port_scan", rec.key.orig_ip, rec.key.resp_ip))
    for i, pkt in enumerate(pkts):
        now = pkt.ts_us
        if pkt.ip_proto == "icmp" and pkt.icmp_type == 8:
            count = sum(
                1
                for p in pkts[: i + 1]
                if p.ip_proto == "icmp" and p.icmp_type == 8 and p.src_ip == pkt.src_ip and p.ts_us > now - window
            )
            if count >= cfg.sweep_echo_count:
                fired.add(("icmp_sweep", pkt.src_ip))
        elif pkt.ip_proto == "tcp" and pkt.tcp_flags == frozenset({"SYN"}):
            count = sum(
                1
                for p in pkts[: i + 1]
                if p.ip_proto == "tcp"
                and p.tcp_flags == frozenset({"SYN"})
                and (p.dst_ip, p.dst_port) == (pkt.dst_ip, pkt.dst_port)
                and p.ts_us > now - flood_window
            )
            if count >= cfg.flood_syn_count:
                fired.add(("syn_flood", pkt.dst_ip, pkt.dst_port))
    return fired


def alert_key(alert):
    if alert.detector == "port_scan":
        return ("port_scan", alert.src_ip, alert.dst_ip)
    if alert.detector == "icmp_sweep":
        return ("icmp_sweep", alert.src_ip)
    return ("syn_flood", alert.dst_ip, alert.dst_port)


@pytest.mark.parametrize("seed", range(10))
def test_firing_decisions_match_brute_force(seed):
    rng = random.Random(seed)
    cfg = AnomalyConfig(
        window_s=2.0,
        scan_distinct_ports=4,
        sweep_echo_count=3,
        flood_syn_count=5,
        flood_window_s=1.0,
        spoof_distinct_srcs=3,
    )
    srcs = ["10.0.0.1", "10.0.0.2"]
    dsts = ["10.0.1.1", "10.0.1.2"]
    events = []
    t = SEC
    for _ in range(250):
        t += rng.randint(10_000, 700_000)
        kind = rng.random()
        if kind < 0.4:
            events.append(
                conn(rng.choice(srcs), rng.choice(dsts), rng.randint(1, 12),
                     rng.choice(["S", "Sr", "ShADdFf"]), t)
            )
        elif kind < 0.6:
            events.append(echo(t, rng.choice(srcs), rng.choice(dsts), icmp_type=rng.choice([0, 8])))
        else:
            events.append(syn(t, rng.choice(srcs), rng.choice(dsts), rng.choice([80, 443])))
    expected = brute_force_fired_keys(events, cfg)
    got = {alert_key(a) for a in run_engine(events, cfg)}
    assert got == expected


# --- monotonicity ------------------------------------------------------


def mixed_scenario():
    events = list(scan_records(40))
    events += [echo(10 * SEC + i * SEC, "203.0.113.66", "192.168.1.10") for i in range(12)]
    events += flood_packets(700, start_us=30 * SEC)
    events.sort(key=lambda e: e.last_ts_us if isinstance(e, ConnRecord) else e.ts_us)
    return events


@pytest.mark.parametrize(
    "param,values",
    [
        ("scan_distinct_ports", [10, 20, 41, 100]),
        ("sweep_echo_count", [4, 8, 13, 50]),
        ("flood_syn_count", [100, 500, 701, 2000]),
    ],
)
def test_alert_count_monotone_in_thresholds(param, values):
    events = mixed_scenario()
    counts = [len(run_engine(events, AnomalyConfig(**{param: v}))) for v in values]
    assert counts == sorted(counts, reverse=True)
    assert counts[-1] < counts[0]  # the largest threshold actually silences something


# --- benign traffic ----------------------------------------------------


def test_benign_traffic_is_silent():
    pkts = [
        decode_packet(raw)
        for raw in synth_benign(
            random.Random(11),
            10**12,
            ["192.168.1.20", "192.168.1.21"],
            ["198.51.100.7", "203.0.113.50"],
            200,
        )
    ]
    engine = AnomalyEngine()
    tracker = FlowTracker()
    alerts = []
    for pkt in pkts:
        alerts.extend(engine.observe(pkt))
        for rec in tracker.feed(pkt):
            alerts.extend(engine.observe(rec))
    for rec in tracker.flush():
        alerts.extend(engine.observe(rec))
    alerts.extend(engine.flush())
    assert alerts == []


# --- event documents ---------------------------------------------------


def test_alert_event_documents():
    (scan,) = run_engine(scan_records(30))
    doc = alert_to_event(scan)
    assert doc["event.kind"] == "alert"
    assert doc["event.module"] == "slips"
    assert doc["alert.category"] == "reconnaissance scanning"
    assert doc["slips.detector"] == "port_scan"
    assert doc["slips.confidence"] == pytest.approx(0.3)
    assert doc["slips.evidence.distinct_ports"] == 30
    assert doc["source.ip"] == "203.0.113.66"
    assert doc["@timestamp"] == scan.ts_us

    (flood,) = run_engine(flood_packets(500))
    fdoc = alert_to_event(flood)
    assert fdoc["alert.category"] == "Attempted Denial of Service"
    assert fdoc["slips.spoofed_source"] is False
    assert fdoc["destination.port"] == 80
