"""Masks, boxes, points and the pixel-space measures built on them.

Coordinates follow image convention: ``x`` is the column, ``y`` the row, the
origin is the top-left pixel and box corners are inclusive.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, EmptyMask, MaskFormatError, OutOfBounds

__all__ = [
    "BBox",
    "LabeledPoint",
    "BinaryMask",
    "bbox_iou",
    "bbox_l1",
    "point_l1",
    "mask_to_bbox",
    "mask_centroid",
    "signed_distance_to_masks",
    "mask_iou",
    "mask_union",
    "read_mask",
    "write_mask",
    "read_mask_archive",
    "write_mask_archive",
]


@dataclass(frozen=True, order=True)
class BBox:
    x1: int
    y1: int
    x2: int
    y2: int

    def __post_init__(self):
        for name in ("x1", "y1", "x2", "y2"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise TypeError(f"BBox.{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if min(self.x1, self.y1, self.x2, self.y2) < 0:
            raise ValueError(f"negative box coordinate in {self}")
        if self.x1 > self.x2 or self.y1 > self.y2:
            raise ValueError(f"inverted box {self}")

    @property
    def area(self) -> int:
        return (self.x2 - self.x1 + 1) * (self.y2 - self.y1 + 1)

    def as_list(self) -> list[int]:
        return [self.x1, self.y1, self.x2, self.y2]


@dataclass(frozen=True)
class LabeledPoint:
    x: int
    y: int
    label: int = 1

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"point label must be 0 or 1, got {self.label!r}")
        object.__setattr__(self, "x", int(self.x))
        object.__setattr__(self, "y", int(self.y))
        object.__setattr__(self, "label", int(self.label))

    def as_list(self) -> list[int]:
        return [self.x, self.y, self.label]


class BinaryMask:
    """Immutable H x W foreground bitmap.

    The canonical serialized form is a list of alternating background /
    foreground run lengths in row-major order, always starting with a
    (possibly empty) background run.
    """

    __slots__ = ("_bits", "__dict__")

    def __init__(self, bits):
        arr = np.array(bits, dtype=bool, copy=True)
        if arr.ndim != 2:
            raise ValueError(f"mask must be 2-D, got shape {arr.shape}")
        arr.setflags(write=False)
        self._bits = arr

    @classmethod
    def empty(cls, height: int, width: int) -> "BinaryMask":
        return cls(np.zeros((height, width), dtype=bool))

    @classmethod
    def from_runs(cls, height: int, width: int, runs: Sequence[int]) -> "BinaryMask":
        runs = [int(r) for r in runs]
        if height < 0 or width < 0:
            raise MaskFormatError(f"negative dimensions {height}x{width}")
        if not runs:
            raise MaskFormatError("runs must not be empty")
        if any(r < 0 for r in runs):
            raise MaskFormatError("negative run length")
        # zero runs are only legal in first and last position
        if any(r == 0 for r in runs[1:-1]):
            raise MaskFormatError("zero-length run in interior position")
        if sum(runs) != height * width:
            raise MaskFormatError(f"runs sum to {sum(runs)}, expected {height * width}")
        flat = _kernels.rle_decode(np.asarray(runs, dtype=np.int64), height * width)
        return cls(np.asarray(flat).reshape(height, width))

    @classmethod
    def from_json(cls, obj) -> "BinaryMask":
        if not isinstance(obj, dict) or not {"height", "width", "runs"} <= obj.keys():
            raise MaskFormatError("mask object needs height, width and runs")
        h, w, runs = obj["height"], obj["width"], obj["runs"]
        if not isinstance(h, int) or not isinstance(w, int) or not isinstance(runs, list):
            raise MaskFormatError("height/width must be integers and runs a list")
        if not all(isinstance(r, int) and not isinstance(r, bool) for r in runs):
            raise MaskFormatError("runs must be integers")
        return cls.from_runs(h, w, runs)

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    @property
    def height(self) -> int:
        return self._bits.shape[0]

    @property
    def width(self) -> int:
        return self._bits.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._bits.shape

    @cached_property
    def runs(self) -> tuple[int, ...]:
        return tuple(int(r) for r in _kernels.rle_encode(self._bits))

    @cached_property
    def area(self) -> int:
        return int(np.count_nonzero(self._bits))

    def is_empty(self) -> bool:
        return self.area == 0

    def contains(self, x: int, y: int) -> bool:
        return 0 <= y < self.height and 0 <= x < self.width and bool(self._bits[y, x])

    def to_json(self) -> dict:
        return {"height": self.height, "width": self.width, "runs": list(self.runs)}

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self._bits, other._bits)

    def __hash__(self):
        return hash((self.shape, self.runs))

    def __repr__(self):
        return f"BinaryMask({self.height}x{self.width}, area={self.area})"

    def __or__(self, other: "BinaryMask") -> "BinaryMask":
        _check_same_shape(self, other)
        return BinaryMask(self._bits | other._bits)


def _check_same_shape(a: BinaryMask, b: BinaryMask) -> None:
    if a.shape != b.shape:
        raise DimensionMismatch(f"mask shapes differ: {a.shape} vs {b.shape}")


def bbox_iou(a: BBox, b: BBox) -> float:
    ix = min(a.x2, b.x2) - max(a.x1, b.x1) + 1
    iy = min(a.y2, b.y2) - max(a.y1, b.y1) + 1
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def bbox_l1(a: BBox, b: BBox) -> float:
    """Mean absolute difference of the four corner coordinates."""
    return (abs(a.x1 - b.x1) + abs(a.y1 - b.y1) + abs(a.x2 - b.x2) + abs(a.y2 - b.y2)) / 4


def point_l1(p: LabeledPoint, q: LabeledPoint) -> int:
    return abs(p.x - q.x) + abs(p.y - q.y)


def _require_foreground(m: BinaryMask) -> None:
    if m.is_empty():
        raise EmptyMask(f"{m!r} has no foreground pixel")


def mask_to_bbox(m: BinaryMask) -> BBox:
    _require_foreground(m)
    rows = np.flatnonzero(m.bits.any(axis=1))
    cols = np.flatnonzero(m.bits.any(axis=0))
    return BBox(int(cols[0]), int(rows[0]), int(cols[-1]), int(rows[-1]))


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def mask_centroid(m: BinaryMask) -> LabeledPoint:
    """Mean foreground coordinate, snapped onto the mask when it falls outside.

    Snapping picks the Manhattan-nearest foreground pixel; ties go to the
    first such pixel in row-major order.
    """
    _require_foreground(m)
    ys, xs = np.nonzero(m.bits)
    cx = _round_half_up(float(xs.mean()))
    cy = _round_half_up(float(ys.mean()))
    if not m.contains(cx, cy):
        # np.nonzero is row-major, so argmin's first-hit rule is the tie-break
        k = int(np.argmin(np.abs(xs - cx) + np.abs(ys - cy)))
        cx, cy = int(xs[k]), int(ys[k])
    return LabeledPoint(cx, cy, 1)


def signed_distance_to_masks(p: LabeledPoint, masks: Sequence[BinaryMask]) -> int:
    """Manhattan distance from ``p`` to the nearest foreground pixel of any mask.

    Points on or inside a mask score 0; interior depth is not modelled.
    """
    if not masks:
        raise ValueError("masks must be a non-empty list")
    h, w = masks[0].shape
    for m in masks:
        _check_same_shape(masks[0], m)
        _require_foreground(m)
    if not (0 <= p.x < w and 0 <= p.y < h):
        raise OutOfBounds(f"point ({p.x}, {p.y}) outside {h}x{w} frame")
    return min(_kernels.min_l1_to_foreground(m.bits, p.y, p.x) for m in masks)


def mask_iou(a: BinaryMask, b: BinaryMask) -> float:
    _check_same_shape(a, b)
    inter, union = intersection_union(a, b)
    return 1.0 if union == 0 else inter / union


def intersection_union(a: BinaryMask, b: BinaryMask) -> tuple[int, int]:
    _check_same_shape(a, b)
    inter = int(np.count_nonzero(a.bits & b.bits))
    union = int(np.count_nonzero(a.bits | b.bits))
    return inter, union


def mask_union(masks: Iterable[BinaryMask], shape: tuple[int, int] | None = None) -> BinaryMask:
    masks = list(masks)
    if not masks:
        if shape is None:
            raise ValueError("need a shape to build the union of zero masks")
        return BinaryMask.empty(*shape)
    bits = np.zeros(masks[0].shape, dtype=bool)
    for m in masks:
        _check_same_shape(masks[0], m)
        bits |= m.bits
    return BinaryMask(bits)


# --- mask files -----------------------------------------------------------

_ARCHIVE_NAME = re.compile(r"^(\d{5})\.mask\.json$")


def read_mask(path) -> BinaryMask:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise
    except (OSError, json.JSONDecodeError) as exc:
        raise MaskFormatError(str(exc), str(path)) from exc
    try:
        return BinaryMask.from_json(obj)
    except MaskFormatError as exc:
        raise MaskFormatError(str(exc), str(path)) from exc


def write_mask(path, m: BinaryMask) -> None:
    Path(path).write_text(json.dumps(m.to_json(), separators=(",", ":")) + "\n", encoding="utf-8")


def mask_filename(frame: int) -> str:
    return f"{frame:05d}.mask.json"


def read_mask_archive(directory) -> dict[int, BinaryMask]:
    """Load every ``NNNNN.mask.json`` in ``directory`` keyed by frame index."""
    out = {}
    for entry in sorted(Path(directory).iterdir()):
        match = _ARCHIVE_NAME.match(entry.name)
        if match:
            out[int(match.group(1))] = read_mask(entry)
    return out


def write_mask_archive(directory, masks: dict[int, BinaryMask] | Sequence[BinaryMask]) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    items = masks.items() if isinstance(masks, dict) else enumerate(masks)
    for frame, m in items:
        write_mask(directory / mask_filename(frame), m)
