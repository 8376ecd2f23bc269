"""Deterministic stand-ins for the neural backends, computed from ground truth."""

from __future__ import annotations

import threading
import zlib
from typing import Protocol

import numpy as np

from .. import _kernels
from ..answer import ObjectPrediction, RolloutText, format_rollout
from ..difficulty import render_scores
from ..errors import BackendError, NoCandidate
from ..geometry import (
    BinaryMask,
    LabeledPoint,
    bbox_iou,
    mask_centroid,
    mask_iou,
    mask_to_bbox,
    mask_union,
)
from ..sampler import KeySegment, VideoMeta
from .base import Backend, as_query_ref
from .wire import PropagateRequest, ReasonRequest, SegmentRequest

NEG_POINT_DISTANCE = 20


class GroundTruthSource(Protocol):
    def query(self, query_id: str): ...
    def video_meta(self, video_id: str) -> VideoMeta: ...
    def objects_at(self, video_id: str, frame: int) -> list[tuple[str, BinaryMask]]: ...
    def object_mask(self, video_id: str, object_id: str, frame: int) -> BinaryMask: ...
    def object_sequence(self, video_id: str, object_id: str) -> list[BinaryMask]: ...
    def target_frame(self, query) -> int: ...


def negative_point(target: BinaryMask, anchor: LabeledPoint, distance: int = NEG_POINT_DISTANCE) -> LabeledPoint:
    """Background pixel at Manhattan ``distance`` from ``target`` closest to ``anchor``.

    Falls back to the pixel whose distance is nearest ``distance`` when no
    pixel sits exactly that far (small frames).
    """
    dist = _kernels.l1_distance_transform(target.bits)
    ys, xs = np.nonzero(dist > 0)
    if ys.size == 0:
        return LabeledPoint(anchor.x, anchor.y, 0)
    d = dist[ys, xs]
    off = np.abs(d - distance)
    near = np.abs(xs - anchor.x) + np.abs(ys - anchor.y)
    # lexsort: last key is primary; nonzero order already row-major for ties
    k = np.lexsort((near, off))[0]
    return LabeledPoint(int(xs[k]), int(ys[k]), 0)


class OracleBackend(Backend):
    """Serves every endpoint from annotations.

    ``window`` is the half-width of oracle intervals around the target frame;
    ``jitter`` adds deterministic integer noise in ``[-jitter, jitter]`` drawn
    from ``seed``, the query id and a per-query call counter.
    """

    def __init__(self, gt: GroundTruthSource, window: int = 10, jitter: int = 0, seed: int = 0):
        self.gt = gt
        self.window = int(window)
        self.jitter = int(jitter)
        self.seed = int(seed)
        self._counters: dict[str, int] = {}
        self._lock = threading.Lock()

    # -- reasoning ---------------------------------------------------------

    def predictions_at(self, query, frame: int) -> list[ObjectPrediction]:
        masks = [self.gt.object_mask(query.video_id, oid, frame) for oid in query.gt_object_ids]
        masks = [m for m in masks if not m.is_empty()]
        if not masks:
            return []
        union = mask_union(masks)
        preds = []
        for m in masks:
            center = mask_centroid(m)
            preds.append(ObjectPrediction(mask_to_bbox(m), center, negative_point(union, center)))
        return preds

    def reason(self, request: ReasonRequest) -> RolloutText:
        query = self.gt.query(request.query.query_id)
        preds = self.predictions_at(query, request.target_frame)
        lines = [f"The query asks for {query.expression.strip() or 'the target'}.",
                 f"On frame {request.target_frame} I identify {len(preds)} matching object(s)."]
        for i, p in enumerate(preds, 1):
            b = p.bbox
            lines.append(f"Object {i} spans columns {b.x1} to {b.x2} and rows {b.y1} to {b.y2}.")
        return RolloutText.from_raw(format_rollout(" ".join(lines), preds))

    # -- segmentation and propagation -------------------------------------

    def segment(self, request: SegmentRequest) -> BinaryMask:
        candidates = self.gt.objects_at(request.query.video_id, request.frame)
        if not candidates:
            raise NoCandidate(f"no object on frame {request.frame} of {request.query.video_id!r}")
        box = request.prompts.bbox
        scores = [bbox_iou(box, mask_to_bbox(m)) for _, m in candidates]
        return candidates[int(np.argmax(scores))][1]

    def propagate(self, request: PropagateRequest) -> list[BinaryMask]:
        video_id = request.query.video_id
        candidates = self.gt.objects_at(video_id, request.seed_frame)
        if not candidates:
            raise NoCandidate(f"no object on frame {request.seed_frame} of {video_id!r}")
        exact = [oid for oid, m in candidates if m == request.seed_mask]
        if exact:
            oid = exact[0]
        else:
            scores = [mask_iou(m, request.seed_mask) for _, m in candidates]
            oid = candidates[int(np.argmax(scores))][0]
        seq = self.gt.object_sequence(video_id, oid)
        if len(seq) != request.num_frames:
            raise BackendError("malformed", f"object {oid!r} has {len(seq)} frames, expected {request.num_frames}")
        return seq

    # -- temporal localization ------------------------------------------

    def _noise(self, query_id: str) -> int:
        if self.jitter <= 0:
            return 0
        with self._lock:
            n = self._counters.get(query_id, 0)
            self._counters[query_id] = n + 1
        rng = np.random.default_rng([self.seed, zlib.crc32(query_id.encode()), n])
        return int(rng.integers(-self.jitter, self.jitter + 1))

    def localize_temporal(self, video_ref: str, query, segment: KeySegment, granularity: str):
        ref = as_query_ref(query)
        tgt = self.gt.target_frame(self.gt.query(ref.query_id))
        center = min(max(tgt + self._noise(ref.query_id), segment.start), segment.end)
        if granularity == "interval":
            return (max(segment.start, center - self.window), min(segment.end, center + self.window))
        if granularity == "percent":
            return (center - segment.start) / segment.length
        raise ValueError(f"unknown granularity {granularity!r}")

    # -- difficulty -------------------------------------------------------

    def score_difficulty(self, prompt: str, query_id: str = "") -> str:
        scores = getattr(self.gt, "difficulty", {}).get(query_id)
        if scores is None:
            raise BackendError("no_annotation", f"no difficulty annotation for query {query_id!r}")
        return f"Ratings follow.\n{render_scores(scores)}"


class StaticCopyPropagator(Backend):
    """Baseline tracker: the seed mask, unchanged, on every frame."""

    def propagate(self, request: PropagateRequest) -> list[BinaryMask]:
        return [request.seed_mask] * request.num_frames
