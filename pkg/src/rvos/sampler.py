"""Hierarchical text-guided frame sampler.

Coarse rounds shrink the key segment by averaging localizer intervals until
it spans at most ``delta * T`` frames; a fine round averages percentage
estimates to pick the target frame; reference frames are then drawn from
outside the key segment.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Protocol, Sequence

from .assets import load_template
from .errors import (
    BackendError,
    EmptyIntervalList,
    EmptyPercentages,
    InvalidInterval,
    PercentOutOfRange,
)

__all__ = [
    "VideoMeta",
    "KeySegment",
    "SamplingPlan",
    "SamplerConfig",
    "Strategy",
    "TemporalLocalizer",
    "aggregate_intervals",
    "refine_key_segment",
    "locate_target_frame",
    "sample_references",
    "plan_sampling",
    "render_localization_prompt",
    "seconds_to_frame",
]

# absorbs float error in T_key * p (e.g. 3 * (1/3) -> 0.9999...)
_FLOOR_EPS = 1e-9


@dataclass(frozen=True)
class VideoMeta:
    num_frames: int
    height: int = 0
    width: int = 0
    fps: float | None = None
    video_id: str = ""

    def __post_init__(self):
        if self.num_frames < 1:
            raise ValueError("a video needs at least one frame")


@dataclass(frozen=True)
class KeySegment:
    start: int
    end: int

    def __post_init__(self):
        if self.start < 0 or self.end < self.start:
            raise InvalidInterval(f"invalid segment ({self.start}, {self.end})")

    @property
    def length(self) -> int:
        return self.end - self.start + 1

    def __contains__(self, frame: int) -> bool:
        return self.start <= frame <= self.end

    def frames(self) -> list[int]:
        return list(range(self.start, self.end + 1))


@dataclass(frozen=True)
class SamplingPlan:
    key_segment: KeySegment
    target_frame: int
    reference_frames: tuple[int, ...]
    rounds_used: int

    def to_json(self) -> dict:
        return {
            "key_segment": [self.key_segment.start, self.key_segment.end],
            "target_frame": self.target_frame,
            "reference_frames": list(self.reference_frames),
            "rounds_used": self.rounds_used,
        }


class Strategy(str, enum.Enum):
    GLOBAL = "global"
    LOCAL = "local"
    ADAPTIVE = "adaptive"


@dataclass(frozen=True)
class SamplerConfig:
    delta: float = 0.3
    k_interval_samples: int = 5
    m_percent_samples: int = 5
    t_ref: int = 12
    strategy: Strategy = Strategy.ADAPTIVE
    max_rounds: int = 8

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.k_interval_samples < 1 or self.m_percent_samples < 1 or self.max_rounds < 1:
            raise ValueError("sample counts and max_rounds must be >= 1")
        if self.t_ref < 0:
            raise ValueError("t_ref must be >= 0")
        object.__setattr__(self, "strategy", Strategy(self.strategy))

    @property
    def delta_exact(self) -> Fraction:
        return Fraction(self.delta).limit_denominator(10**6)


class TemporalLocalizer(Protocol):
    def localize_temporal(self, video_ref: str, query: str, segment: KeySegment,
                          granularity: str): ...


def _round_half_up(q: Fraction) -> int:
    return math.floor(q + Fraction(1, 2))


def aggregate_intervals(intervals: Sequence[tuple[int, int]], num_frames: int) -> KeySegment:
    if not intervals:
        raise EmptyIntervalList("no intervals to aggregate")
    for s, e in intervals:
        if not (0 <= s <= e < num_frames):
            raise InvalidInterval(f"interval ({s}, {e}) invalid for {num_frames} frames")
    n = len(intervals)
    start = _round_half_up(Fraction(sum(s for s, _ in intervals), n))
    end = _round_half_up(Fraction(sum(e for _, e in intervals), n))
    start = min(max(start, 0), num_frames - 1)
    end = min(max(end, start), num_frames - 1)
    return KeySegment(start, end)


def _center_crop(seg: KeySegment, length: int) -> KeySegment:
    length = max(1, min(length, seg.length))
    start = seg.start + (seg.length - length) // 2
    return KeySegment(start, start + length - 1)


def refine_key_segment(meta: VideoMeta, localizer: TemporalLocalizer, query: str,
                       cfg: SamplerConfig = SamplerConfig()) -> tuple[KeySegment, int]:
    """Coarse localization rounds; returns the converged segment and rounds used."""
    limit = cfg.delta_exact * meta.num_frames
    crop_len = max(math.ceil(limit), 1)
    seg = KeySegment(0, meta.num_frames - 1)
    rounds = 0
    while seg.length > limit and seg.length > 1:
        if rounds >= cfg.max_rounds:
            seg = _center_crop(seg, crop_len)
            break
        intervals = []
        for _ in range(cfg.k_interval_samples):
            try:
                s, e = localizer.localize_temporal(meta.video_id, query, seg, "interval")
            except BackendError as exc:
                exc.round_index = rounds
                raise
            if not (seg.start <= s <= e <= seg.end):
                raise InvalidInterval(f"localizer returned ({s}, {e}) outside {seg}")
            intervals.append((int(s), int(e)))
        rounds += 1
        new = aggregate_intervals(intervals, meta.num_frames)
        if new.length >= seg.length:
            seg = _center_crop(seg, crop_len)
            break
        seg = new
    return seg, rounds


def locate_target_frame(seg: KeySegment, percentages: Sequence[float]) -> int:
    if not percentages:
        raise EmptyPercentages("no percentage estimates")
    for p in percentages:
        if not 0.0 <= p <= 1.0:
            raise PercentOutOfRange(f"percentage {p} outside [0, 1]")
    mean = math.fsum(percentages) / len(percentages)
    offset = math.floor(seg.length * mean + _FLOOR_EPS)
    return min(seg.start + offset, seg.end)


def _global_candidates(num_frames: int, seg: KeySegment) -> list[int]:
    return [t for t in range(num_frames) if t not in seg]


def _evenly_spaced(candidates: list[int], count: int) -> list[int]:
    n = len(candidates)
    count = min(count, n)
    if count <= 0:
        return []
    return [candidates[(i * n) // count] for i in range(count)]


def _local_candidates(num_frames: int, seg: KeySegment, reach: int = 3) -> list[int]:
    out = []
    for d in range(1, reach + 1):
        if seg.start - d >= 0:
            out.append(seg.start - d)
        if seg.end + d < num_frames:
            out.append(seg.end + d)
    return out


def sample_references(meta: VideoMeta, seg: KeySegment, cfg: SamplerConfig = SamplerConfig()) -> list[int]:
    t_ref = cfg.t_ref
    if t_ref <= 0:
        return []
    candidates = _global_candidates(meta.num_frames, seg)
    if cfg.strategy is Strategy.GLOBAL:
        return _evenly_spaced(candidates, t_ref)
    local = _local_candidates(meta.num_frames, seg)
    if cfg.strategy is Strategy.LOCAL:
        return local[:t_ref]

    n_global = t_ref // 3
    merged: list[int] = []
    for t in _evenly_spaced(candidates, n_global) + local[:t_ref - n_global]:
        if t not in merged:
            merged.append(t)
    # pad from the global ordering when local frames run short
    for t in _evenly_spaced(candidates, t_ref) + candidates:
        if len(merged) >= t_ref:
            break
        if t not in merged:
            merged.append(t)
    return merged[:t_ref]


def plan_sampling(meta: VideoMeta, localizer: TemporalLocalizer, query: str,
                  cfg: SamplerConfig = SamplerConfig()) -> SamplingPlan:
    seg, rounds = refine_key_segment(meta, localizer, query, cfg)
    percentages = []
    for _ in range(cfg.m_percent_samples):
        try:
            percentages.append(float(localizer.localize_temporal(meta.video_id, query, seg, "percent")))
        except BackendError as exc:
            exc.round_index = rounds
            raise
    target = locate_target_frame(seg, percentages)
    refs = sample_references(meta, seg, cfg)
    return SamplingPlan(seg, target, tuple(refs), rounds)


def render_localization_prompt(granularity: str, query: str, segment: KeySegment, num_frames: int) -> str:
    name = "coarse_localization_prompt" if granularity == "interval" else "fine_localization_prompt"
    return load_template(name).format(query=query, segment_start=segment.start,
                                      segment_end=segment.end, num_frames=num_frames)


def seconds_to_frame(seconds: float, fps: float) -> int:
    return int(math.floor(seconds * fps))
