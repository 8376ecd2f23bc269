"""Optimal one-to-one assignment between predicted and ground-truth objects."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import NonFiniteCost
from .geometry import BBox, BinaryMask, LabeledPoint, bbox_iou, bbox_l1, point_l1

__all__ = ["Assignment", "CostKind", "GroundTruthObject", "hungarian", "match_objects", "cost_matrix"]


@dataclass(frozen=True)
class Assignment:
    pairs: tuple[tuple[int, int], ...]
    total_cost: float


@dataclass(frozen=True)
class GroundTruthObject:
    """One annotated object on the reasoning frame."""

    bbox: BBox
    center: LabeledPoint
    mask: BinaryMask | None = None

    @classmethod
    def from_mask(cls, mask: BinaryMask) -> "GroundTruthObject":
        from .geometry import mask_centroid, mask_to_bbox

        return cls(mask_to_bbox(mask), mask_centroid(mask), mask)


class CostKind(str, enum.Enum):
    ONE_MINUS_BBOX_IOU = "one_minus_bbox_iou"
    BBOX_L1 = "bbox_l1"
    POINT_L1 = "point_l1"


def _tight_edge_tolerance(c: np.ndarray) -> float:
    scale = max(1.0, float(np.max(np.abs(c)))) if c.size else 1.0
    return 64 * np.finfo(float).eps * scale * max(1, c.shape[0])


def _try_reassign(tight, col_of_row, row_of_col, row, target, fixed):
    """Move ``row`` onto column ``target`` while keeping a perfect matching.

    The row currently owning ``target`` must find a new column through an
    alternating path over tight edges among unfixed rows; the column freed
    by ``row`` is available to it.
    """
    n = tight.shape[0]
    owner = row_of_col[target]
    freed = col_of_row[row]
    # tentatively detach both rows
    row_of_col[target] = row
    col_of_row[row] = target
    row_of_col[freed] = -1
    col_of_row[owner] = -1
    seen = np.zeros(n, dtype=bool)
    seen[target] = True

    def augment(r):
        for c in np.flatnonzero(tight[r]):
            if seen[c]:
                continue
            seen[c] = True
            holder = row_of_col[c]
            if holder == -1 or (not fixed[holder] and augment(holder)):
                row_of_col[c] = r
                col_of_row[r] = c
                return True
        return False

    if augment(owner):
        return True
    # restore
    row_of_col[freed] = row
    col_of_row[row] = freed
    row_of_col[target] = owner
    col_of_row[owner] = target
    return False


def _lexicographic_refine(c: np.ndarray, col_of_row: np.ndarray, u: np.ndarray, v: np.ndarray,
                          real_rows: int, real_cols: int) -> np.ndarray:
    """Among optimal matchings (tight edges of the dual) pick the lexicographically
    smallest, scanning rows in order and preferring low real columns."""
    n = c.shape[0]
    tight = (c - u[:, None] - v[None, :]) <= _tight_edge_tolerance(c)
    col_of_row = col_of_row.copy()
    tight[np.arange(n), col_of_row] = True
    row_of_col = np.empty(n, dtype=np.int64)
    row_of_col[col_of_row] = np.arange(n)
    fixed = np.zeros(n, dtype=bool)
    for row in range(real_rows):
        fixed[row] = True
        current = col_of_row[row]
        for target in np.flatnonzero(tight[row]):
            if target >= real_cols:
                break
            if target >= current:
                break
            if fixed[row_of_col[target]]:
                continue
            if _try_reassign(tight, col_of_row, row_of_col, row, target, fixed):
                break
    return col_of_row


def hungarian(cost) -> Assignment:
    """Minimum-cost one-to-one assignment of rows (predictions) to columns (GTs).

    Rectangular inputs are padded to square; padded pairs are dropped, so
    ``len(pairs) == min(K, N)``. Ties resolve to the lexicographically
    smallest pair list.
    """
    c = np.asarray(cost, dtype=np.float64)
    if c.ndim != 2:
        if c.size == 0:
            c = c.reshape(0, 0)
        else:
            raise ValueError(f"cost matrix must be 2-D, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise NonFiniteCost("cost matrix contains NaN or infinite entries")
    k, n_gt = c.shape
    if k == 0 or n_gt == 0:
        return Assignment((), 0.0)
    n = max(k, n_gt)
    square = c
    if k != n_gt:
        pad = (abs(float(c.max())) + 1.0) * n
        square = np.full((n, n), pad)
        square[:k, :n_gt] = c
    col_of_row, u, v = _kernels.lsap(square)
    col_of_row = np.asarray(col_of_row, dtype=np.int64)
    base_pairs = _real_pairs(col_of_row, k, n_gt)
    base_cost = math.fsum(c[i, j] for i, j in base_pairs)

    refined = _lexicographic_refine(square, col_of_row, np.asarray(u), np.asarray(v), k, n_gt)
    pairs = _real_pairs(refined, k, n_gt)
    total = math.fsum(c[i, j] for i, j in pairs)
    if total > base_cost:
        # tolerance admitted a slightly worse matching; keep the exact optimum
        pairs, total = base_pairs, base_cost
    return Assignment(tuple(pairs), total)


def _real_pairs(col_of_row, k, n_gt):
    return [(i, int(col_of_row[i])) for i in range(k) if col_of_row[i] < n_gt]


def cost_matrix(preds: Sequence, gts: Sequence[GroundTruthObject], kind: CostKind | str) -> np.ndarray:
    kind = CostKind(kind)
    c = np.zeros((len(preds), len(gts)))
    for i, p in enumerate(preds):
        for j, g in enumerate(gts):
            if kind is CostKind.ONE_MINUS_BBOX_IOU:
                c[i, j] = 1.0 - bbox_iou(p.bbox, g.bbox)
            elif kind is CostKind.BBOX_L1:
                c[i, j] = bbox_l1(p.bbox, g.bbox)
            else:
                c[i, j] = point_l1(p.point_pos, g.center)
    return c


def match_objects(preds: Sequence, gts: Sequence[GroundTruthObject],
                  cost: CostKind | str = CostKind.ONE_MINUS_BBOX_IOU) -> Assignment:
    if not preds or not gts:
        return Assignment((), 0.0)
    return hungarian(cost_matrix(preds, gts, cost))
