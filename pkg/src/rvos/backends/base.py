"""Backend interface, endpoint configuration and the wire-speaking base class."""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

from ..answer import RolloutText
from ..errors import BackendError, ConfigError
from ..geometry import BinaryMask
from ..sampler import KeySegment, render_localization_prompt
from . import wire
from .wire import PropagateRequest, QueryRef, ReasonRequest, SegmentRequest

ROLES = ("reasoner", "segmenter", "propagator", "localizer", "scorer")


class Mode(str, enum.Enum):
    LIVE = "live"
    TRACE = "trace"
    ORACLE = "oracle"
    # propagator-only smoke-test baseline that copies the seed mask to every frame
    STATIC = "static"


@dataclass(frozen=True)
class BackendEndpoint:
    mode: Mode = Mode.ORACLE
    base_url: str | None = None
    trace_path: str | None = None
    timeout: float = 30.0
    retries: int = 2
    max_in_flight: int = 4
    token: str | None = None
    options: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        mode = Mode(self.mode)
        object.__setattr__(self, "mode", mode)
        base_url = self.base_url
        if mode is Mode.LIVE and not base_url:
            base_url = os.environ.get("RVOS_BACKEND_URL")
            object.__setattr__(self, "base_url", base_url)
        if mode is Mode.LIVE and (not base_url or self.trace_path):
            raise ConfigError("live mode needs base_url (or RVOS_BACKEND_URL) and no trace_path")
        if mode is Mode.TRACE and (not self.trace_path or self.base_url):
            raise ConfigError("trace mode needs trace_path and no base_url")
        if self.timeout <= 0 or self.retries < 0 or self.max_in_flight < 1:
            raise ConfigError("timeout must be > 0, retries >= 0, max_in_flight >= 1")


def as_query_ref(query) -> QueryRef:
    if isinstance(query, QueryRef):
        return query
    if isinstance(query, str):
        return QueryRef("", "", query)
    # dataset.Query
    return QueryRef(query.query_id, query.video_id, query.expression)


def localize_wire_request(video_ref: str, query, segment: KeySegment, granularity: str) -> dict:
    q = as_query_ref(query)
    if video_ref and not q.video_id:
        q = QueryRef(q.query_id, video_ref, q.text, q.num_frames)
    prompt = render_localization_prompt(granularity, q.text, segment, q.num_frames or segment.end + 1)
    return wire.localize_request(q, segment, granularity, prompt)


class Backend:
    """Every role-facing method; concrete backends implement what they serve."""

    def reason(self, request: ReasonRequest) -> RolloutText:
        raise BackendError("unsupported", f"{type(self).__name__} does not serve /reason")

    def segment(self, request: SegmentRequest) -> BinaryMask:
        raise BackendError("unsupported", f"{type(self).__name__} does not serve /segment")

    def propagate(self, request: PropagateRequest) -> list[BinaryMask]:
        raise BackendError("unsupported", f"{type(self).__name__} does not serve /propagate")

    def localize_temporal(self, video_ref: str, query, segment: KeySegment, granularity: str):
        raise BackendError("unsupported", f"{type(self).__name__} does not serve /localize")

    def score_difficulty(self, prompt: str, query_id: str = "") -> str:
        raise BackendError("unsupported", f"{type(self).__name__} does not serve /score")


class WireBackend(Backend):
    """Backend whose responses arrive as wire JSON via :meth:`_exchange`."""

    def _exchange(self, endpoint: str, request: dict, decode: Callable[[Any], Any]):
        raise NotImplementedError

    def reason(self, request: ReasonRequest) -> RolloutText:
        return self._exchange("reason", wire.reason_request(request), wire.decode_reason)

    def segment(self, request: SegmentRequest) -> BinaryMask:
        return self._exchange("segment", wire.segment_request(request),
                              lambda obj: wire.decode_segment(obj, request.frame_shape))

    def propagate(self, request: PropagateRequest) -> list[BinaryMask]:
        shape = request.seed_mask.shape
        return self._exchange("propagate", wire.propagate_request(request),
                              lambda obj: wire.decode_propagate(obj, request.num_frames, shape))

    def localize_temporal(self, video_ref: str, query, segment: KeySegment, granularity: str):
        return self._exchange("localize", localize_wire_request(video_ref, query, segment, granularity),
                              lambda obj: wire.decode_localize(obj, segment, granularity))

    def score_difficulty(self, prompt: str, query_id: str = "") -> str:
        return self._exchange("score", wire.score_request(query_id, prompt), wire.decode_score)
