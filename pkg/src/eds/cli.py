"""Command-line entry points: synth, run, ship, query, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import BadCidr, UnwritableLogDir, load_config
from .kql import QuerySyntaxError
from .pipeline import run_pipeline, ship_logs
from .signatures import RuleParseError
from .store import CorruptSegment, EventStore
from .synth import BadScenario, builtin_scenario, compose, load_scenario

QUERY_GRAMMAR_HELP = """query grammar:
  expr    := or
  or      := and ("or" and)*
  and     := unary ("and" unary)*
  unary   := "not" unary | "(" expr ")" | term
  term    := field.path ":" value
  value   := "quoted exact" | bare-glob-with-* | /alt1|alt2/
"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> _Parser:
    parser = _Parser(prog="eds", description="Ensemble defense system toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="Synthesize a labeled attack pcap.")
    p_synth.add_argument("--spec", required=True, help="Builtin scenario name or a JSON scenario file.")
    p_synth.add_argument("--out", required=True, help="Output pcap path; labels go to <out>.labels.ndjson.")

    p_run = sub.add_parser("run", help="Replay a pcap through all detectors.")
    p_run.add_argument("pcap")
    p_run.add_argument("--log-dir")
    p_run.add_argument("--ruleset")
    p_run.add_argument("--home-net", action="append", dest="home_nets", metavar="CIDR")

    p_ship = sub.add_parser("ship", help="Ingest detector logs into the store.")
    p_ship.add_argument("--log-dir")
    p_ship.add_argument("--store-dir")

    p_query = sub.add_parser("query", help="Search the store; prints NDJSON docs.")
    p_query.add_argument("query")
    p_query.add_argument("--from", dest="from_ts", type=int)
    p_query.add_argument("--to", dest="to_ts", type=int)
    p_query.add_argument("--limit", type=int)
    p_query.add_argument("--count-only", action="store_true")
    p_query.add_argument("--store-dir")

    p_serve = sub.add_parser("serve", help="Serve the HTTP API and console.")
    p_serve.add_argument("--port", type=int)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--store-dir")
    p_serve.add_argument("--log-dir")
    p_serve.add_argument("--credentials", metavar="USER:PASSWORD")
    p_serve.add_argument("--static-dir")
    return parser


def _cmd_synth(args) -> int:
    spec_arg = args.spec
    if Path(spec_arg).is_file():
        spec = load_scenario(spec_arg)
    else:
        spec = builtin_scenario(spec_arg)
    result = compose(spec, args.out)
    print(f"wrote {result.pcap_path} ({len(result.labels)} packets)")
    print(f"labels: {result.labels_path}")
    return 0


def _cmd_run(args) -> int:
    if not Path(args.pcap).is_file():
        raise UsageError(f"no such pcap: {args.pcap}")
    cfg = load_config(log_dir=args.log_dir, ruleset_path=args.ruleset, home_nets=args.home_nets)
    stats = run_pipeline(args.pcap, cfg)
    print(
        f"packets={stats.packets_read} skipped={stats.packets_skipped} "
        f"conn={stats.conn_records} http={stats.http_events} "
        f"sig_alerts={stats.sig_alerts} anomaly_alerts={stats.anomaly_alerts} "
        f"docs={stats.docs_ingested} wall={stats.wall_time:.2f}s"
    )
    return 0


def _cmd_ship(args) -> int:
    cfg = load_config(log_dir=args.log_dir, store_dir=args.store_dir, check_log_dir=False)
    if not Path(cfg.log_dir).is_dir():
        raise UsageError(f"no such log dir: {cfg.log_dir}")
    with EventStore(cfg.store_dir) as store:
        stats = ship_logs(cfg.log_dir, store)
    print(f"ingested={stats.ingested} already_present={stats.already_present} corrupt={len(stats.corrupt)}")
    for bad in stats.corrupt:
        print(f"corrupt line: {bad.path}:{bad.line_no}: {bad.reason}", file=sys.stderr)
    return 0


def _cmd_query(args) -> int:
    cfg = load_config(store_dir=args.store_dir, check_log_dir=False)
    with EventStore(cfg.store_dir) as store:
        result = store.search(args.query, start_ts=args.from_ts, end_ts=args.to_ts, limit=args.limit)
    if args.count_only:
        print(result.total)
    else:
        for doc in result.docs:
            print(json.dumps(doc, sort_keys=True, separators=(",", ":")))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app

    cfg = load_config(
        log_dir=args.log_dir,
        store_dir=args.store_dir,
        credentials=args.credentials,
        http_port=args.port,
        check_log_dir=False,
    )
    store = EventStore(cfg.store_dir)
    static_dir = args.static_dir or "frontend/dist"
    app = create_app(store, cfg, static_dir=static_dir)
    uvicorn.run(app, host=args.host, port=cfg.http_port)
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "run": _cmd_run,
    "ship": _cmd_ship,
    "query": _cmd_query,
    "serve": _cmd_serve,
}

# user mistakes: bad input files, bad queries, bad flags
_USER_ERRORS = (
    UsageError,
    QuerySyntaxError,
    RuleParseError,
    BadScenario,
    BadCidr,
    UnwritableLogDir,
    CorruptSegment,
    FileNotFoundError,
    KeyError,
    ValueError,
)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as err:
        print(str(err), file=sys.stderr)
        print(QUERY_GRAMMAR_HELP, file=sys.stderr)
        return 1
    except QuerySyntaxError as err:
        print(f"bad query: {err}", file=sys.stderr)
        print(QUERY_GRAMMAR_HELP, file=sys.stderr)
        return 1
    except _USER_ERRORS as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except Exception as err:  # noqa: BLE001 - last-resort boundary
        print(f"internal error: {type(err).__name__}: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
