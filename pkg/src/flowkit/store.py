"""Session persistence and analytics.

Turn records and session metadata are appended to per-day newline-delimited
JSON files (one object per line) and indexed in memory; restarting a service
rebuilds the index by rescanning the data directory.  Everything also works
fully in memory when no directory is configured, which is what the test
suite and the interactive CLI use.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field, asdict
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Dict, List, Optional, Tuple

METRICS = ("sessions", "turns", "ood_rate")
GROUP_KEYS = ("client", "application", "none")
GRANULARITIES = ("hour", "day", "week")

UNGROUPED_KEY = "total"


class StoreError(Exception):
    pass


class UnknownSessionError(StoreError):
    pass


class DuplicateTurnError(StoreError):
    pass


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class SessionMeta:
    session_id: str
    app_id: str
    user_id: str
    community: str
    client: str
    seed: int
    started_at: str

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "SessionMeta":
        return cls(**obj)


@dataclass
class TurnRecord:
    """Everything one turn did, from raw utterance to emitted responses."""

    session_id: str
    turn_index: int
    at: str
    raw_utterance: str
    entities: list = field(default_factory=list)  # span dicts
    masked_utterance: str = ""
    routing: Optional[dict] = None  # RoutingDecision.to_dict() or None
    skimmer_writes: list = field(default_factory=list)  # {"attribute", "value"}
    traversed_nodes: list = field(default_factory=list)  # "dialogue/node" strings
    responses: list = field(default_factory=list)
    attribute_diff: list = field(default_factory=list)  # {"scope","name","old","new"}
    nrg_used: Optional[dict] = None  # {"act", "fallback"}
    duration_ms: float = 0.0
    error: Optional[str] = None
    asr_hypotheses: list = field(default_factory=list)  # reserved; voice is out of scope

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "TurnRecord":
        return cls(**obj)


@dataclass
class MetricQuery:
    metric: str
    group_by: str = "none"
    granularity: str = "day"
    time_from: Optional[datetime] = None
    time_to: Optional[datetime] = None
    user: Optional[str] = None
    application: Optional[str] = None

    def validate(self) -> None:
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.group_by not in GROUP_KEYS:
            raise ValueError(f"unknown groupBy {self.group_by!r}")
        if self.granularity not in GRANULARITIES:
            raise ValueError(f"unknown granularity {self.granularity!r}")
        if self.time_from and self.time_to and self.time_from > self.time_to:
            raise ValueError("time range is inverted")


@dataclass
class MetricSeries:
    buckets: List[Tuple[str, str, float]]  # (bucket_start ISO, group key, value)

    def to_dict(self) -> dict:
        return {
            "buckets": [
                {"bucketStart": b, "groupKey": g, "value": v} for b, g, v in self.buckets
            ]
        }


def _parse_ts(value: str) -> datetime:
    dt = datetime.fromisoformat(value)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt


def _floor(dt: datetime, granularity: str) -> datetime:
    dt = dt.astimezone(timezone.utc)
    if granularity == "hour":
        return dt.replace(minute=0, second=0, microsecond=0)
    day = dt.replace(hour=0, minute=0, second=0, microsecond=0)
    if granularity == "day":
        return day
    return day - timedelta(days=day.weekday())


class DataStore:
    """Append-only record store with an in-memory index.

    With ``root`` set, records land in ``sessions-YYYY-MM-DD.ndjson`` and
    ``turns-YYYY-MM-DD.ndjson`` and user/community attribute values in
    ``attributes.json``; without it everything stays in memory.
    """

    def __init__(self, root: Optional[str] = None):
        self.root = Path(root) if root else None
        self._lock = threading.Lock()
        self.sessions: Dict[str, SessionMeta] = {}
        self.turns: Dict[str, List[TurnRecord]] = {}
        self.attributes: Dict[str, Dict[str, dict]] = {"user": {}, "community": {}}
        if self.root:
            self.root.mkdir(parents=True, exist_ok=True)
            self._load()

    def _load(self) -> None:
        for path in sorted(self.root.glob("sessions-*.ndjson")):
            for line in path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    meta = SessionMeta.from_dict(json.loads(line))
                    self.sessions[meta.session_id] = meta
                    self.turns.setdefault(meta.session_id, [])
        for path in sorted(self.root.glob("turns-*.ndjson")):
            for line in path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    record = TurnRecord.from_dict(json.loads(line))
                    self.turns.setdefault(record.session_id, []).append(record)
        for records in self.turns.values():
            records.sort(key=lambda r: r.turn_index)
        attrs = self.root / "attributes.json"
        if attrs.exists():
            self.attributes = json.loads(attrs.read_text(encoding="utf-8"))

    def _append_line(self, prefix: str, at_iso: str, obj: dict) -> None:
        if not self.root:
            return
        day = _parse_ts(at_iso).strftime("%Y-%m-%d")
        path = self.root / f"{prefix}-{day}.ndjson"
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")

    def record_session(self, meta: SessionMeta) -> None:
        with self._lock:
            self.sessions[meta.session_id] = meta
            self.turns.setdefault(meta.session_id, [])
            self._append_line("sessions", meta.started_at, meta.to_dict())

    def append_turn(self, record: TurnRecord) -> None:
        with self._lock:
            if record.session_id not in self.sessions:
                raise UnknownSessionError(record.session_id)
            records = self.turns.setdefault(record.session_id, [])
            if any(r.turn_index == record.turn_index for r in records):
                raise DuplicateTurnError(
                    f"turn {record.turn_index} already stored for session {record.session_id}"
                )
            records.append(record)
            records.sort(key=lambda r: r.turn_index)
            self._append_line("turns", record.at, record.to_dict())

    def get_transcript(self, session_id: str) -> List[TurnRecord]:
        if session_id not in self.sessions:
            raise UnknownSessionError(session_id)
        return list(self.turns.get(session_id, []))

    def get_session(self, session_id: str) -> SessionMeta:
        if session_id not in self.sessions:
            raise UnknownSessionError(session_id)
        return self.sessions[session_id]

    # -- attribute tables ---------------------------------------------------

    def set_attribute(self, scope: str, key: str, name: str, value) -> None:
        if scope not in ("user", "community"):
            raise ValueError(f"no attribute table for scope {scope!r}")
        with self._lock:
            self.attributes.setdefault(scope, {}).setdefault(key, {})[name] = value
            if self.root:
                path = self.root / "attributes.json"
                tmp = path.with_suffix(".json.tmp")
                tmp.write_text(
                    json.dumps(self.attributes, ensure_ascii=False, sort_keys=True, indent=1),
                    encoding="utf-8",
                )
                os.replace(tmp, path)

    def list_attributes(self, scope: str, key: str) -> List[Tuple[str, object]]:
        if scope not in ("user", "community"):
            raise ValueError(f"no attribute table for scope {scope!r}")
        table = self.attributes.get(scope, {}).get(key, {})
        return sorted(table.items())

    # -- metrics ------------------------------------------------------------

    def _session_passes(self, meta: SessionMeta, q: MetricQuery) -> bool:
        if q.user and meta.user_id != q.user:
            return False
        if q.application and meta.app_id != q.application:
            return False
        return True

    def _in_range(self, dt: datetime, q: MetricQuery) -> bool:
        if q.time_from and dt < q.time_from:
            return False
        if q.time_to and dt >= q.time_to:
            return False
        return True

    def _group_key(self, meta: SessionMeta, q: MetricQuery) -> str:
        if q.group_by == "client":
            return meta.client
        if q.group_by == "application":
            return meta.app_id
        return UNGROUPED_KEY

    def query_metrics(self, q: MetricQuery) -> MetricSeries:
        """Exact counts over stored data; a pure function of store contents."""
        q.validate()
        counts: Dict[Tuple[str, str], float] = {}
        ood: Dict[Tuple[str, str], float] = {}

        if q.metric == "sessions":
            for meta in self.sessions.values():
                dt = _parse_ts(meta.started_at)
                if not self._in_range(dt, q) or not self._session_passes(meta, q):
                    continue
                bucket = (_floor(dt, q.granularity).isoformat(), self._group_key(meta, q))
                counts[bucket] = counts.get(bucket, 0) + 1
        else:
            for session_id, records in self.turns.items():
                meta = self.sessions.get(session_id)
                if meta is None or not self._session_passes(meta, q):
                    continue
                for record in records:
                    dt = _parse_ts(record.at)
                    if not self._in_range(dt, q):
                        continue
                    bucket = (_floor(dt, q.granularity).isoformat(), self._group_key(meta, q))
                    counts[bucket] = counts.get(bucket, 0) + 1
                    if record.routing and record.routing.get("scope") == "OutOfDomain":
                        ood[bucket] = ood.get(bucket, 0) + 1

        buckets = []
        for key in sorted(counts):
            if q.metric == "ood_rate":
                value = ood.get(key, 0.0) / counts[key]
            else:
                value = counts[key]
            buckets.append((key[0], key[1], value))
        return MetricSeries(buckets)
