"""Pluggable model boundary: live HTTP services, recorded traces, or oracles."""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Mapping

from ..errors import ConfigError
from .base import ROLES, Backend, BackendEndpoint, Mode, WireBackend, as_query_ref
from .live import LiveBackend
from .oracle import OracleBackend, StaticCopyPropagator, negative_point
from .trace import RecordingBackend, ScriptedLocalizer, TraceBackend, TraceStore, write_trace
from .wire import PropagateRequest, QueryRef, ReasonRequest, SegmentRequest, request_hash

__all__ = [
    "Backend",
    "BackendEndpoint",
    "Backends",
    "LiveBackend",
    "Mode",
    "OracleBackend",
    "PropagateRequest",
    "QueryRef",
    "ReasonRequest",
    "RecordingBackend",
    "ROLES",
    "ScriptedLocalizer",
    "SegmentRequest",
    "StaticCopyPropagator",
    "TraceBackend",
    "TraceStore",
    "WireBackend",
    "as_query_ref",
    "build_backends",
    "negative_point",
    "request_hash",
    "write_trace",
]


@dataclass(frozen=True)
class Backends:
    reasoner: Backend
    segmenter: Backend
    propagator: Backend
    localizer: Backend
    scorer: Backend

    def recording(self, sink: list) -> "Backends":
        return Backends(**{f.name: RecordingBackend(getattr(self, f.name), sink) for f in fields(self)})


def build_backends(endpoints: Mapping[str, BackendEndpoint], gt=None, seed: int = 0) -> Backends:
    """Instantiate one backend per role. Oracle roles need ``gt`` (a Dataset)."""
    stores: dict[str, TraceStore] = {}
    oracles: dict[tuple, OracleBackend] = {}
    built = {}
    for role in ROLES:
        ep = endpoints.get(role, BackendEndpoint())
        if ep.mode is Mode.LIVE:
            built[role] = LiveBackend(ep)
        elif ep.mode is Mode.TRACE:
            if ep.trace_path not in stores:
                stores[ep.trace_path] = TraceStore.load(ep.trace_path)
            built[role] = TraceBackend(stores[ep.trace_path])
        elif ep.mode is Mode.STATIC:
            if role != "propagator":
                raise ConfigError(f"static mode only applies to the propagator, not {role}")
            built[role] = StaticCopyPropagator()
        else:
            if gt is None:
                raise ConfigError(f"oracle {role} needs ground truth")
            opts = dict(ep.options)
            key = (opts.get("window", 10), opts.get("jitter", 0), opts.get("seed", seed))
            if key not in oracles:
                oracles[key] = OracleBackend(gt, window=key[0], jitter=key[1], seed=key[2])
            built[role] = oracles[key]
    return Backends(**built)
