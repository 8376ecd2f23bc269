"""Request builders and response codecs for the five backend endpoints.

Live HTTP clients, trace replay and trace recording all go through these
functions, so a recorded response decodes exactly as a live one would.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Any, Sequence

from ..answer import ObjectPrediction, RolloutText
from ..errors import BackendError, MaskFormatError, OutOfRange
from ..geometry import BinaryMask
from ..sampler import KeySegment

ENDPOINTS = ("reason", "segment", "propagate", "localize", "score")


@dataclass(frozen=True)
class QueryRef:
    """What a backend is told about the query it serves."""

    query_id: str
    video_id: str
    text: str
    num_frames: int = 0


@dataclass(frozen=True)
class ReasonRequest:
    query: QueryRef
    key_frames: tuple[int, ...]
    target_frame: int
    reference_frames: tuple[int, ...]
    prompt: str = ""


@dataclass(frozen=True)
class SegmentRequest:
    query: QueryRef
    frame: int
    prompts: ObjectPrediction
    # checked against the decoded mask, never sent
    frame_shape: tuple[int, int] | None = None


@dataclass(frozen=True)
class PropagateRequest:
    query: QueryRef
    seed_mask: BinaryMask
    seed_frame: int
    num_frames: int


def request_hash(request: dict) -> str:
    canonical = json.dumps(request, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canonical.encode("ascii")).hexdigest()


def _query_json(q: QueryRef) -> dict:
    return {"query_id": q.query_id, "video_id": q.video_id, "query": q.text, "num_frames": q.num_frames}


# --- request builders --------------------------------------------------------

def reason_request(r: ReasonRequest) -> dict:
    return {**_query_json(r.query), "key_frames": list(r.key_frames), "target_frame": r.target_frame,
            "reference_frames": list(r.reference_frames), "prompt": r.prompt}


def segment_request(r: SegmentRequest) -> dict:
    p = r.prompts
    return {**_query_json(r.query), "frame": r.frame, "bbox": p.bbox.as_list(),
            "point_pos": p.point_pos.as_list(), "point_neg": p.point_neg.as_list()}


def propagate_request(r: PropagateRequest) -> dict:
    return {**_query_json(r.query), "seed_frame": r.seed_frame, "num_frames": r.num_frames,
            "seed_mask": r.seed_mask.to_json()}


def localize_request(q: QueryRef, segment: KeySegment, granularity: str, prompt: str = "") -> dict:
    if granularity not in ("interval", "percent"):
        raise ValueError(f"unknown granularity {granularity!r}")
    return {**_query_json(q), "segment": [segment.start, segment.end], "granularity": granularity,
            "prompt": prompt}


def score_request(query_id: str, prompt: str) -> dict:
    return {"query_id": query_id, "prompt": prompt}


# --- response encoders (used by recording) -----------------------------------

def encode_reason(rollout: RolloutText) -> dict:
    return {"text": rollout.raw}


def encode_segment(mask: BinaryMask) -> dict:
    return {"mask": mask.to_json()}


def encode_propagate(masks: Sequence[BinaryMask]) -> dict:
    return {"masks": [m.to_json() for m in masks]}


def encode_localize(value) -> dict:
    if isinstance(value, tuple):
        return {"interval": list(value)}
    return {"percent": value}


def encode_score(text: str) -> dict:
    return {"text": text}


# --- response decoders (schema validation) ----------------------------------

def _malformed(endpoint: str, why: str) -> BackendError:
    return BackendError("malformed", f"/{endpoint}: {why}")


def _require(obj: Any, key: str, endpoint: str):
    if not isinstance(obj, dict) or key not in obj:
        raise _malformed(endpoint, f"response lacks {key!r}")
    return obj[key]


def decode_reason(obj) -> RolloutText:
    text = _require(obj, "text", "reason")
    if not isinstance(text, str):
        raise _malformed("reason", "text must be a string")
    return RolloutText.from_raw(text)


def _decode_mask(obj, endpoint: str, shape: tuple[int, int] | None) -> BinaryMask:
    try:
        m = BinaryMask.from_json(obj)
    except MaskFormatError as exc:
        raise _malformed(endpoint, str(exc)) from exc
    if shape is not None and m.shape != tuple(shape):
        raise _malformed(endpoint, f"mask is {m.shape}, expected {tuple(shape)}")
    return m


def decode_segment(obj, shape: tuple[int, int] | None = None) -> BinaryMask:
    return _decode_mask(_require(obj, "mask", "segment"), "segment", shape)


def decode_propagate(obj, num_frames: int, shape: tuple[int, int] | None = None) -> list[BinaryMask]:
    masks = _require(obj, "masks", "propagate")
    if not isinstance(masks, list) or len(masks) != num_frames:
        raise _malformed("propagate", f"expected a list of {num_frames} masks")
    return [_decode_mask(m, "propagate", shape) for m in masks]


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def decode_localize(obj, segment: KeySegment, granularity: str):
    """Validate a localizer reply against the queried segment.

    Shape problems are ``malformed``; well-formed values outside the segment
    raise :class:`OutOfRange`, which live clients retry.
    """
    if granularity == "interval":
        value = _require(obj, "interval", "localize")
        if not isinstance(value, list) or len(value) != 2 or not all(_is_int(v) for v in value):
            raise _malformed("localize", "interval must be two integers")
        s, e = value
        if not (segment.start <= s <= e <= segment.end):
            raise OutOfRange(f"interval ({s}, {e}) outside segment ({segment.start}, {segment.end})")
        return (s, e)
    value = _require(obj, "percent", "localize")
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise _malformed("localize", "percent must be a number")
    if not 0.0 <= value <= 1.0:
        raise OutOfRange(f"percent {value} outside [0, 1]")
    return float(value)


def decode_score(obj) -> str:
    text = _require(obj, "text", "score")
    if not isinstance(text, str):
        raise _malformed("score", "text must be a string")
    return text
