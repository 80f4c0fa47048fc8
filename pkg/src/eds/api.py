"""HTTP/JSON query API plus static hosting for the analyst console."""

from __future__ import annotations

import base64
import json
import secrets
from pathlib import Path

from fastapi import Depends, FastAPI, HTTPException, Query, Request
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from .config import EdsConfig
from .kql import And, Exact, MatchAll, QueryNode, QuerySyntaxError, Term, parse_kql
from .presets import PRESETS
from .store import EventStore

FALLBACK_PAGE = """<!doctype html>
<html><head><title>EDS</title></head>
<body><h1>EDS service</h1>
<p>The analyst console is not built. The JSON API lives under /api/.</p>
</body></html>
"""


def _parse_q(q: str) -> QueryNode:
    try:
        return parse_kql(q)
    except QuerySyntaxError as err:
        raise HTTPException(
            status_code=400,
            detail={"error": str(err), "position": err.position, "expected": err.expected},
        ) from None


def _restrict(query: QueryNode, kind: str | None) -> QueryNode:
    if kind is None:
        return query
    if kind not in ("event", "alert"):
        raise HTTPException(status_code=400, detail={"error": f"unknown kind {kind!r}"})
    term = Term("event.kind", Exact(kind))
    if isinstance(query, MatchAll):
        return term
    return And((query, term))


def create_app(store: EventStore, cfg: EdsConfig, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="eds", docs_url=None, redoc_url=None)

    def check_auth(request: Request) -> None:
        if cfg.credentials is None:
            return
        user, _, password = cfg.credentials.partition(":")
        header = request.headers.get("authorization", "")
        scheme, _, blob = header.partition(" ")
        if scheme.lower() == "basic":
            try:
                decoded = base64.b64decode(blob).decode("utf-8")
            except Exception:
                decoded = ""
            got_user, _, got_password = decoded.partition(":")
            if secrets.compare_digest(got_user, user) and secrets.compare_digest(got_password, password):
                return
        raise HTTPException(status_code=401, detail="unauthorized", headers={"WWW-Authenticate": "Basic"})

    @app.get("/api/search", dependencies=[Depends(check_auth)])
    def search(
        q: str = "",
        from_ts: int | None = Query(default=None, alias="from"),
        to_ts: int | None = Query(default=None, alias="to"),
        limit: int = Query(default=100, ge=0),
        kind: str | None = None,
    ):
        query = _restrict(_parse_q(q), kind)
        try:
            result = store.search(query, start_ts=from_ts, end_ts=to_ts, limit=limit)
        except ValueError as err:
            raise HTTPException(status_code=400, detail={"error": str(err)}) from None
        return {"total": result.total, "docs": result.docs}

    @app.get("/api/histogram", dependencies=[Depends(check_auth)])
    def histogram(
        q: str = "",
        from_ts: int | None = Query(default=None, alias="from"),
        to_ts: int | None = Query(default=None, alias="to"),
        bucket: float = Query(default=5.0, gt=0),
        split: str | None = None,
        kind: str | None = None,
    ):
        query = _restrict(_parse_q(q), kind)
        try:
            hist = store.histogram(
                query, bucket_width_s=bucket, start_ts=from_ts, end_ts=to_ts, split_by=split
            )
        except ValueError as err:
            raise HTTPException(status_code=400, detail={"error": str(err)}) from None
        payload = {
            "bucket_width_s": hist.bucket_width_s,
            "buckets": [{"start": start, "count": count} for start, count in hist.buckets],
            "total": hist.total,
        }
        if hist.series is not None:
            payload["series"] = hist.series
        return payload

    @app.get("/api/stats", dependencies=[Depends(check_auth)])
    def stats():
        modules: dict[str, int] = {}
        kinds = {"event": 0, "alert": 0}
        docs = store.search(MatchAll()).docs
        for doc in docs:
            kinds[doc["event.kind"]] += 1
            modules[doc["event.module"]] = modules.get(doc["event.module"], 0) + 1
        return {"docs": len(docs), "kinds": kinds, "modules": modules}

    @app.get("/api/presets", dependencies=[Depends(check_auth)])
    def presets():
        return {"presets": PRESETS}

    @app.post("/api/ingest", dependencies=[Depends(check_auth)])
    async def ingest(request: Request):
        body = (await request.body()).decode("utf-8")
        ingested = 0
        for line_no, line in enumerate(body.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
                if not isinstance(doc, dict):
                    raise ValueError("not a JSON object")
                store.ingest(doc)
            except ValueError as err:
                return JSONResponse(
                    status_code=400,
                    content={"error": str(err), "line": line_no, "ingested": ingested},
                )
            ingested += 1
        return {"ingested": ingested}

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="console")
    else:

        @app.get("/", response_class=HTMLResponse)
        def index():
            return FALLBACK_PAGE

    return app
