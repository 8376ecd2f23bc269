"""Trace replay and recording.

A trace file is JSONL; each line is ``{"endpoint", "request_hash", "response"}``.
Entries sharing an (endpoint, hash) key are served in file order.
"""

from __future__ import annotations

import json
import threading
from collections import defaultdict, deque
from pathlib import Path
from typing import Any, Callable, Iterable

from ..errors import BackendError, TraceExhausted
from . import wire
from .base import Backend, WireBackend, localize_wire_request


class TraceStore:
    def __init__(self, entries: Iterable[dict]):
        self._queues: dict[tuple[str, str], deque] = defaultdict(deque)
        self._lock = threading.Lock()
        for e in entries:
            self._queues[(e["endpoint"], e["request_hash"])].append(e["response"])

    @classmethod
    def load(cls, path) -> "TraceStore":
        entries = []
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise BackendError("malformed", f"{path}:{lineno}: {exc}") from exc
            if not isinstance(obj, dict) or not {"endpoint", "request_hash", "response"} <= obj.keys():
                raise BackendError("malformed", f"{path}:{lineno}: trace entry needs endpoint, request_hash, response")
            entries.append(obj)
        return cls(entries)

    def pop(self, endpoint: str, request_hash: str):
        with self._lock:
            queue = self._queues.get((endpoint, request_hash))
            if not queue:
                raise TraceExhausted(f"no recorded /{endpoint} response for request {request_hash[:12]}")
            return queue.popleft()


class TraceBackend(WireBackend):
    def __init__(self, store: TraceStore):
        self.store = store

    def _exchange(self, endpoint: str, request: dict, decode: Callable[[Any], Any]):
        return decode(self.store.pop(endpoint, wire.request_hash(request)))


class RecordingBackend(Backend):
    """Wraps a backend and appends a trace entry for every successful call."""

    def __init__(self, inner: Backend, sink: list):
        self.inner = inner
        self.sink = sink

    def _record(self, endpoint: str, request: dict, response: dict) -> None:
        self.sink.append({"endpoint": endpoint, "request_hash": wire.request_hash(request),
                          "response": response})

    def reason(self, request):
        out = self.inner.reason(request)
        self._record("reason", wire.reason_request(request), wire.encode_reason(out))
        return out

    def segment(self, request):
        out = self.inner.segment(request)
        self._record("segment", wire.segment_request(request), wire.encode_segment(out))
        return out

    def propagate(self, request):
        out = self.inner.propagate(request)
        self._record("propagate", wire.propagate_request(request), wire.encode_propagate(out))
        return out

    def localize_temporal(self, video_ref, query, segment, granularity):
        out = self.inner.localize_temporal(video_ref, query, segment, granularity)
        self._record("localize", localize_wire_request(video_ref, query, segment, granularity),
                     wire.encode_localize(out))
        return out

    def score_difficulty(self, prompt, query_id=""):
        out = self.inner.score_difficulty(prompt, query_id)
        self._record("score", wire.score_request(query_id, prompt), wire.encode_score(out))
        return out


class ScriptedLocalizer(Backend):
    """Localizer that plays back a hand-written script.

    The script is ``{"intervals": [[s, e], ...], "percents": [p, ...]}``. Each
    list is served in order and its last element repeats once it runs out, so
    a one-element script describes a localizer that always says the same thing.
    Intervals are clipped to the queried segment.
    """

    def __init__(self, intervals, percents):
        if not intervals or not percents:
            raise BackendError("malformed", "script needs non-empty 'intervals' and 'percents'")
        self._intervals = [tuple(int(v) for v in iv) for iv in intervals]
        self._percents = [float(p) for p in percents]
        self._pos = {"interval": 0, "percent": 0}
        self._lock = threading.Lock()

    @classmethod
    def load(cls, path) -> "ScriptedLocalizer":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
            return cls(doc["intervals"], doc["percents"])
        except (ValueError, KeyError, TypeError) as exc:
            raise BackendError("malformed", f"{path}: not a localizer script ({exc})") from exc

    def localize_temporal(self, video_ref, query, segment, granularity):
        items = self._intervals if granularity == "interval" else self._percents
        with self._lock:
            i = self._pos[granularity]
            self._pos[granularity] = i + 1
        value = items[min(i, len(items) - 1)]
        if granularity == "interval":
            value = (max(value[0], segment.start), min(value[1], segment.end))
        return wire.decode_localize(wire.encode_localize(value), segment, granularity)


def write_trace(path, entries: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in entries:
            fh.write(json.dumps(e, sort_keys=True, separators=(",", ":")) + "\n")
