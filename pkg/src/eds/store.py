"""Append-only event store with search and time-bucket histograms.

Documents are flat maps from dotted field paths to scalars. The store keeps
everything in memory and optionally mirrors ingests to NDJSON segment files
in a directory, from which an identical store (same doc ids, same query
results) can be rebuilt. Scale target is desk-sized corpora (around a
million documents), so there is no on-disk index, just the segments.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .kql import QueryNode, canonical_value, eval_query, parse_kql

EVENT_KINDS = {"event", "alert"}
EVENT_MODULES = {"zeek", "suricata", "slips", "synth"}

_SEGMENT_GLOB = "events-*.ndjson"


class MissingTimestamp(ValueError):
    """Document has no usable @timestamp (positive integer microseconds)."""


class BadFieldPath(ValueError):
    """A field path or value violates the document invariants."""


class CorruptSegment(ValueError):
    """A segment file line could not be decoded as a valid document."""

    def __init__(self, path: Path, line_no: int, reason: str):
        self.path = Path(path)
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"{self.path}:{line_no}: {reason}")


def _validate(doc: dict) -> None:
    ts = doc.get("@timestamp")
    if not isinstance(ts, int) or isinstance(ts, bool) or ts <= 0:
        raise MissingTimestamp(f"@timestamp missing or not positive microseconds: {ts!r}")
    for path, value in doc.items():
        if not isinstance(path, str) or not path or not all(path.split(".")):
            raise BadFieldPath(f"bad field path: {path!r}")
        if not isinstance(value, (str, int, float, bool)):
            raise BadFieldPath(f"{path}: non-scalar value {value!r}")
    kind = doc.get("event.kind")
    if kind not in EVENT_KINDS:
        raise BadFieldPath(f"event.kind must be one of {sorted(EVENT_KINDS)}, got {kind!r}")
    module = doc.get("event.module")
    if module not in EVENT_MODULES:
        raise BadFieldPath(f"event.module must be one of {sorted(EVENT_MODULES)}, got {module!r}")


def _dump_line(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


@dataclass(frozen=True)
class SearchResult:
    docs: list[dict]
    total: int


@dataclass(frozen=True)
class Histogram:
    bucket_width_s: float
    # (bucket start in epoch microseconds, document count) per bucket;
    # contiguous from first to last non-empty bucket.
    buckets: list[tuple[int, int]]
    # split-by mode: field value -> per-bucket counts aligned with buckets
    series: dict[str, list[int]] | None = None

    @property
    def total(self) -> int:
        return sum(count for _, count in self.buckets)


class EventStore:
    """In-memory document index, optionally backed by segment files.

    When constructed with a directory the existing segments are loaded and
    every ingest is appended to a fresh segment in that directory, so the
    store is durable as it goes. A detached store lives purely in memory
    until persist() points it at a directory.
    """

    def __init__(self, dir: str | Path | None = None, recover: bool = False):
        self._docs: list[dict] = []
        self._sorted: list[tuple[int, int, dict]] | None = None
        self._dir: Path | None = None
        self._segment_file = None
        self._segment_count = 0
        self.recovered: list[tuple[Path, int]] = []
        if dir is not None:
            self._attach(Path(dir), recover)

    # --- lifecycle -----------------------------------------------------

    @classmethod
    def load(cls, dir: str | Path, recover: bool = False) -> "EventStore":
        return cls(dir=dir, recover=recover)

    def _attach(self, dir: Path, recover: bool) -> None:
        dir.mkdir(parents=True, exist_ok=True)
        segments = sorted(dir.glob(_SEGMENT_GLOB))
        for idx, seg in enumerate(segments):
            self._load_segment(seg, is_last=idx == len(segments) - 1, recover=recover)
        self._dir = dir
        self._segment_count = len(segments)
        self._sorted = None

    def _load_segment(self, seg: Path, is_last: bool, recover: bool) -> None:
        lines = seg.read_text(encoding="utf-8").split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        good: list[dict] = []
        for line_no, line in enumerate(lines, start=1):
            try:
                doc = json.loads(line)
                if not isinstance(doc, dict):
                    raise ValueError("not a JSON object")
                _validate(doc)
            except (ValueError, MissingTimestamp, BadFieldPath) as exc:
                tail = is_last and line_no == len(lines)
                if tail and recover:
                    self.recovered.append((seg, line_no))
                    # drop the torn tail from disk so later loads are clean
                    tmp = seg.with_suffix(".tmp")
                    tmp.write_text("".join(_dump_line(d) for d in good), encoding="utf-8")
                    tmp.replace(seg)
                    break
                raise CorruptSegment(seg, line_no, str(exc)) from exc
            good.append(doc)
        self._docs.extend(good)

    def persist(self, dir: str | Path | None = None) -> None:
        """Flush to disk.

        A detached store is written to dir and attached there; an attached
        store flushes in place, or snapshots its contents into a different
        empty directory when one is given.
        """
        if self._dir is not None and (dir is None or Path(dir) == self._dir):
            if self._segment_file is not None:
                self._segment_file.flush()
            return
        if dir is None:
            raise ValueError("detached store needs a directory to persist to")
        target = Path(dir)
        target.mkdir(parents=True, exist_ok=True)
        if any(target.glob(_SEGMENT_GLOB)):
            raise ValueError(f"{target} already contains segments")
        if self._docs:
            seg = target / "events-00001.ndjson"
            seg.write_text("".join(_dump_line(d) for d in self._docs), encoding="utf-8")
        if self._dir is None:
            self._dir = target
            self._segment_count = 1 if self._docs else 0

    def close(self) -> None:
        if self._segment_file is not None:
            self._segment_file.close()
            self._segment_file = None

    def __enter__(self) -> "EventStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # --- ingest --------------------------------------------------------

    def ingest(self, doc: dict) -> int:
        """Validate and append one document, returning its id (1-based)."""
        _validate(doc)
        if self._dir is not None:
            if self._segment_file is None:
                self._segment_count += 1
                path = self._dir / f"events-{self._segment_count:05d}.ndjson"
                self._segment_file = path.open("a", encoding="utf-8")
            self._segment_file.write(_dump_line(doc))
            self._segment_file.flush()
        self._docs.append(doc)
        self._sorted = None
        return len(self._docs)

    def ingest_many(self, docs: Iterable[dict]) -> list[int]:
        return [self.ingest(doc) for doc in docs]

    def __len__(self) -> int:
        return len(self._docs)

    # --- query ---------------------------------------------------------

    def _ordered(self) -> list[tuple[int, int, dict]]:
        if self._sorted is None:
            rows = [(doc["@timestamp"], doc_id, doc) for doc_id, doc in enumerate(self._docs, start=1)]
            rows.sort(key=lambda row: (row[0], row[1]))
            self._sorted = rows
        return self._sorted

    def _matching(self, q: QueryNode, start_ts: int | None, end_ts: int | None) -> Iterator[tuple[int, int, dict]]:
        if start_ts is not None and end_ts is not None and start_ts > end_ts:
            raise ValueError("start_ts must not exceed end_ts")
        for ts, doc_id, doc in self._ordered():
            if start_ts is not None and ts < start_ts:
                continue
            if end_ts is not None and ts > end_ts:
                continue
            if eval_query(q, doc):
                yield ts, doc_id, doc

    @staticmethod
    def _as_query(q: QueryNode | str) -> QueryNode:
        return parse_kql(q) if isinstance(q, str) else q

    def search(
        self,
        q: QueryNode | str,
        start_ts: int | None = None,
        end_ts: int | None = None,
        limit: int | None = None,
    ) -> SearchResult:
        """Matching docs ascending by (timestamp, doc id), truncated to limit."""
        q = self._as_query(q)
        docs = []
        total = 0
        for _, _, doc in self._matching(q, start_ts, end_ts):
            total += 1
            if limit is None or len(docs) < limit:
                docs.append(doc)
        return SearchResult(docs=docs, total=total)

    def histogram(
        self,
        q: QueryNode | str,
        bucket_width_s: float,
        start_ts: int | None = None,
        end_ts: int | None = None,
        split_by: str | None = None,
    ) -> Histogram:
        """Epoch-aligned time buckets of matching docs, optionally split by a field."""
        if bucket_width_s <= 0:
            raise ValueError("bucket_width_s must be positive")
        q = self._as_query(q)
        width_us = max(1, int(round(bucket_width_s * 1_000_000)))
        counts: dict[int, int] = {}
        split_counts: dict[int, dict[str, int]] = {}
        for ts, _, doc in self._matching(q, start_ts, end_ts):
            bucket = (ts // width_us) * width_us
            counts[bucket] = counts.get(bucket, 0) + 1
            if split_by is not None and split_by in doc:
                per = split_counts.setdefault(bucket, {})
                value = canonical_value(doc[split_by])
                per[value] = per.get(value, 0) + 1
        if not counts:
            return Histogram(bucket_width_s, [], {} if split_by is not None else None)
        starts = range(min(counts), max(counts) + width_us, width_us)
        buckets = [(start, counts.get(start, 0)) for start in starts]
        series: dict[str, list[int]] | None = None
        if split_by is not None:
            values = sorted({v for per in split_counts.values() for v in per})
            series = {
                value: [split_counts.get(start, {}).get(value, 0) for start in starts]
                for value in values
            }
        return Histogram(bucket_width_s, buckets, series)
