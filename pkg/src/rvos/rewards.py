"""Rollout reward suite: format, non-repetition, matched accuracy, negative
points, and the difficulty-aware soft length penalty."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Sequence

from .answer import (
    FormatFlags,
    ObjectPrediction,
    RolloutText,
    parse_answer,
    split_sentences,
    validate_format,
    whitespace_tokens,
)
from .errors import BoxError, EmptyMask, LabelError, OutOfBounds, ParseError, DimensionMismatch
from .geometry import BinaryMask, LabeledPoint, bbox_iou, bbox_l1, point_l1, signed_distance_to_masks
from .matching import CostKind, GroundTruthObject, match_objects

logger = logging.getLogger(__name__)

COMPONENTS = (
    "r_think_format",
    "r_answer_format",
    "r_non_repeat",
    "r_bbox_iou",
    "r_bbox_l1",
    "r_point_l1",
    "r_neg_point",
)


@dataclass(frozen=True)
class RewardConfig:
    iou_match_threshold: float = 0.5
    bbox_l1_threshold: float = 10.0
    point_l1_threshold: float = 30.0
    tau_neg: float = 40.0
    beta: float = 2e-3
    clamp_penalty_at_zero: bool = True
    non_repeat_empty: float = 1.0
    weights: Mapping[str, float] = field(default_factory=lambda: {c: 1.0 for c in COMPONENTS})

    def __post_init__(self):
        for name in ("iou_match_threshold", "bbox_l1_threshold", "point_l1_threshold", "tau_neg"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        unknown = set(self.weights) - set(COMPONENTS)
        if unknown:
            raise ValueError(f"unknown reward components in weights: {sorted(unknown)}")
        object.__setattr__(self, "weights", {c: float(self.weights.get(c, 1.0)) for c in COMPONENTS})


@dataclass(frozen=True)
class RewardBreakdown:
    r_think_format: float
    r_answer_format: float
    r_non_repeat: float
    r_bbox_iou: float
    r_bbox_l1: float
    r_point_l1: float
    r_neg_point: float
    r_original: float
    penalty_s: float
    r_final: float
    l_used: int
    l_budget: int
    extra: Mapping[str, float] = field(default_factory=dict)

    def to_json(self) -> dict:
        out = asdict(self)
        out["extra"] = dict(self.extra)
        return out


# --- threshold predicates -------------------------------------------------

def iou_hit(iou: float, cfg: RewardConfig) -> bool:
    return iou > cfg.iou_match_threshold


def bbox_l1_hit(dist: float, cfg: RewardConfig) -> bool:
    return dist < cfg.bbox_l1_threshold


def point_l1_hit(dist: float, cfg: RewardConfig) -> bool:
    return dist < cfg.point_l1_threshold


def neg_point_hit(dist: float, cfg: RewardConfig) -> bool:
    return 0 < dist <= cfg.tau_neg


# --- components -------------------------------------------------------------

def reward_thinking_format(flags: FormatFlags) -> float:
    return 1.0 if flags.think_ok else 0.0


def reward_answer_format(flags: FormatFlags) -> float:
    return 1.0 if flags.answer_ok else 0.0


def reward_non_repeat(sentences: Sequence[str], empty_value: float = 1.0) -> float:
    if not sentences:
        return empty_value
    return len(set(sentences)) / len(sentences)


def _matched_fraction(preds, gts, kind: CostKind, measure, hit) -> float:
    if not preds and not gts:
        return 1.0
    if not preds or not gts:
        return 0.0
    assignment = match_objects(preds, gts, kind)
    hits = sum(1 for i, j in assignment.pairs if hit(measure(preds[i], gts[j])))
    return hits / max(len(preds), len(gts))


def reward_bbox_iou(preds: Sequence[ObjectPrediction], gts: Sequence[GroundTruthObject],
                    cfg: RewardConfig = RewardConfig()) -> float:
    return _matched_fraction(preds, gts, CostKind.ONE_MINUS_BBOX_IOU,
                             lambda p, g: bbox_iou(p.bbox, g.bbox), lambda v: iou_hit(v, cfg))


def reward_bbox_l1(preds: Sequence[ObjectPrediction], gts: Sequence[GroundTruthObject],
                   cfg: RewardConfig = RewardConfig()) -> float:
    return _matched_fraction(preds, gts, CostKind.BBOX_L1,
                             lambda p, g: bbox_l1(p.bbox, g.bbox), lambda v: bbox_l1_hit(v, cfg))


def reward_point_l1(preds: Sequence[ObjectPrediction], gts: Sequence[GroundTruthObject],
                    cfg: RewardConfig = RewardConfig()) -> float:
    return _matched_fraction(preds, gts, CostKind.POINT_L1,
                             lambda p, g: point_l1(p.point_pos, g.center), lambda v: point_l1_hit(v, cfg))


def reward_negative_points(neg_points: Sequence[LabeledPoint], gt_masks: Sequence[BinaryMask],
                           cfg: RewardConfig = RewardConfig()) -> float:
    """Each negative point just outside the target region (0 < d <= tau_neg)
    earns 1/K, K being the number of negative points."""
    k = len(neg_points)
    if k == 0:
        return 0.0
    for p in neg_points:
        if p.label != 0:
            raise ValueError(f"negative point {p} must carry label 0")
    hits = sum(1 for p in neg_points if neg_point_hit(signed_distance_to_masks(p, gt_masks), cfg))
    return hits / k


def soft_length_penalty(l_used: int, l_budget: int, cfg: RewardConfig = RewardConfig()) -> float:
    if l_used < 0 or l_budget < 0:
        raise ValueError("token counts must be >= 0")
    if l_used <= l_budget:
        return 1.0
    s = 1.0 - cfg.beta * (l_used - l_budget)
    return max(s, 0.0) if cfg.clamp_penalty_at_zero else s


def _safe_negative_reward(preds, gts, cfg) -> float:
    masks = [g.mask for g in gts if g.mask is not None and not g.mask.is_empty()]
    points = [p.point_neg for p in preds]
    if not points or not masks:
        return 0.0
    hits = 0
    for p in points:
        try:
            d = signed_distance_to_masks(p, masks)
        except (OutOfBounds, EmptyMask, DimensionMismatch):
            continue
        hits += neg_point_hit(d, cfg)
    return hits / len(points)


def compute_reward(rollout: RolloutText | str, gts: Sequence[GroundTruthObject], difficulty_budget: int,
                   cfg: RewardConfig = RewardConfig(), extra: Mapping[str, float] | None = None) -> RewardBreakdown:
    """Score one rollout. Malformed answers zero the accuracy terms rather than raise.

    ``extra`` holds externally computed components (e.g. a mask IoU term); they
    are added to the original reward unweighted.
    """
    if isinstance(rollout, str):
        rollout = RolloutText.from_raw(rollout)
    flags = validate_format(rollout)
    think = rollout.think
    comps = {
        "r_think_format": reward_thinking_format(flags),
        "r_answer_format": reward_answer_format(flags),
        "r_non_repeat": reward_non_repeat(split_sentences(think or ""), cfg.non_repeat_empty),
        "r_bbox_iou": 0.0,
        "r_bbox_l1": 0.0,
        "r_point_l1": 0.0,
        "r_neg_point": 0.0,
    }
    preds = None
    if rollout.answer is not None:
        try:
            preds = parse_answer(rollout.answer)
        except (ParseError, LabelError, BoxError) as exc:
            logger.debug("answer rejected: %s", exc)
    if preds is not None:
        gts = list(gts)
        comps["r_bbox_iou"] = reward_bbox_iou(preds, gts, cfg)
        comps["r_bbox_l1"] = reward_bbox_l1(preds, gts, cfg)
        comps["r_point_l1"] = reward_point_l1(preds, gts, cfg)
        comps["r_neg_point"] = _safe_negative_reward(preds, gts, cfg)
    extra = dict(extra or {})
    r_original = sum(cfg.weights[c] * v for c, v in comps.items()) + sum(extra.values())
    l_used = whitespace_tokens(think)
    s = soft_length_penalty(l_used, difficulty_budget, cfg)
    return RewardBreakdown(**comps, r_original=r_original, penalty_s=s, r_final=r_original * s,
                           l_used=l_used, l_budget=int(difficulty_budget), extra=extra)


def compute_rewards(items: Iterable[tuple[RolloutText | str, Sequence[GroundTruthObject], int]],
                    cfg: RewardConfig = RewardConfig(), workers: int = 1) -> list[RewardBreakdown]:
    """Batch form of :func:`compute_reward`; output order follows input order."""
    items = list(items)
    if workers <= 1:
        return [compute_reward(r, g, b, cfg) for r, g, b in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda it: compute_reward(it[0], it[1], it[2], cfg), items))
