"""Video (J, F, J&F) and image (gIoU, cIoU) segmentation measures."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from . import _kernels
from .errors import DimensionMismatch, EmptyList, LengthMismatch
from .geometry import BinaryMask, intersection_union, mask_iou

__all__ = [
    "FrameScore",
    "EvalReport",
    "region_similarity",
    "contour_accuracy",
    "boundary_f_measure",
    "boundary_radius",
    "g_iou",
    "c_iou",
    "jf_scores",
]

DEFAULT_TOLERANCE_FRAC = 0.008


@dataclass(frozen=True)
class FrameScore:
    j: float
    f: float


@dataclass
class EvalReport:
    videos: dict[str, dict[str, float]] = field(default_factory=dict)
    images: dict[str, dict[str, float]] = field(default_factory=dict)
    aggregate: dict[str, float] = field(default_factory=dict)
    tokens: dict[str, float] = field(default_factory=dict)
    errors: dict[str, str] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "videos": {k: self.videos[k] for k in sorted(self.videos)},
            "images": {k: self.images[k] for k in sorted(self.images)},
            "aggregate": self.aggregate,
            "tokens": self.tokens,
            "errors": {k: self.errors[k] for k in sorted(self.errors)},
        }


def _check_sequences(pred_seq: Sequence[BinaryMask], gt_seq: Sequence[BinaryMask]) -> None:
    if len(pred_seq) != len(gt_seq):
        raise LengthMismatch(f"{len(pred_seq)} predicted frames vs {len(gt_seq)} ground-truth frames")
    for t, (p, g) in enumerate(zip(pred_seq, gt_seq)):
        if p.shape != g.shape:
            raise DimensionMismatch(f"frame {t}: {p.shape} vs {g.shape}")


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values) if values else 1.0


def region_similarity(pred_seq: Sequence[BinaryMask], gt_seq: Sequence[BinaryMask]) -> float:
    _check_sequences(pred_seq, gt_seq)
    return _mean([mask_iou(p, g) for p, g in zip(pred_seq, gt_seq)])


def boundary_radius(height: int, width: int, tolerance_frac: float = DEFAULT_TOLERANCE_FRAC) -> int:
    return max(1, math.ceil(tolerance_frac * math.hypot(height, width)))


def boundary_f_measure(pred: BinaryMask, gt: BinaryMask,
                       tolerance_frac: float = DEFAULT_TOLERANCE_FRAC) -> float:
    if pred.shape != gt.shape:
        raise DimensionMismatch(f"{pred.shape} vs {gt.shape}")
    pb = _kernels.boundary_map(pred.bits)
    gb = _kernels.boundary_map(gt.bits)
    n_pred = int(pb.sum())
    n_gt = int(gb.sum())
    if n_pred == 0 and n_gt == 0:
        return 1.0
    if n_pred == 0 or n_gt == 0:
        return 0.0
    r = boundary_radius(*pred.shape, tolerance_frac)
    precision = _kernels.boundary_hits(pb, gb, r) / n_pred
    recall = _kernels.boundary_hits(gb, pb, r) / n_gt
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def contour_accuracy(pred_seq: Sequence[BinaryMask], gt_seq: Sequence[BinaryMask],
                     tolerance_frac: float = DEFAULT_TOLERANCE_FRAC) -> float:
    _check_sequences(pred_seq, gt_seq)
    return _mean([boundary_f_measure(p, g, tolerance_frac) for p, g in zip(pred_seq, gt_seq)])


def jf_scores(pred_seq: Sequence[BinaryMask], gt_seq: Sequence[BinaryMask],
              tolerance_frac: float = DEFAULT_TOLERANCE_FRAC) -> dict[str, float]:
    j = region_similarity(pred_seq, gt_seq)
    f = contour_accuracy(pred_seq, gt_seq, tolerance_frac)
    return {"J": j, "F": f, "JF": (j + f) / 2}


def g_iou(per_image_ious: Sequence[float]) -> float:
    if not per_image_ious:
        raise EmptyList("gIoU needs at least one image")
    return math.fsum(per_image_ious) / len(per_image_ious)


def c_iou(pairs: Sequence[tuple[BinaryMask, BinaryMask]]) -> float:
    if not pairs:
        raise EmptyList("cIoU needs at least one image")
    inter = union = 0
    for pred, gt in pairs:
        i, u = intersection_union(pred, gt)
        inter += i
        union += u
    return 1.0 if union == 0 else inter / union


def token_stats(counts: Sequence[int]) -> dict[str, float]:
    if not counts:
        return {"count": 0, "mean": 0.0, "median": 0.0}
    return {"count": len(counts), "mean": math.fsum(counts) / len(counts),
            "median": float(statistics.median(counts))}


def aggregate_scores(videos: Mapping[str, Mapping[str, float]], image_pairs: Sequence[tuple],
                     image_ious: Sequence[float]) -> dict[str, float]:
    out: dict[str, float] = {}
    if videos:
        j = math.fsum(v["J"] for v in videos.values()) / len(videos)
        f = math.fsum(v["F"] for v in videos.values()) / len(videos)
        out.update(J=j, F=f, JF=(j + f) / 2)
    if image_pairs:
        out.update(gIoU=g_iou(image_ious), cIoU=c_iou(image_pairs))
    return out
