"""Independent brute-force reference implementations.

Deliberately naive: plain Python loops over pixel sets and permutations, no
shared code with the package beyond the value types.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction


def pixels(bits) -> set[tuple[int, int]]:
    """Foreground as a set of (row, col)."""
    return {(r, c) for r, row in enumerate(bits.tolist()) for c, v in enumerate(row) if v}


def runs_of(flat: list[bool]) -> list[int]:
    runs, current, count = [], False, 0
    for v in flat:
        if v == current:
            count += 1
        else:
            runs.append(count)
            current, count = v, 1
    runs.append(count)
    return runs


def iou(a: set, b: set) -> float:
    union = len(a | b)
    return 1.0 if union == 0 else len(a & b) / union


def boundary(fg: set, h: int, w: int) -> set:
    out = set()
    for r, c in fg:
        for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            rr, cc = r + dr, c + dc
            if not (0 <= rr < h and 0 <= cc < w) or (rr, cc) not in fg:
                out.add((r, c))
                break
    return out


def f_measure(pred: set, gt: set, h: int, w: int, frac: float = 0.008) -> float:
    pb, gb = boundary(pred, h, w), boundary(gt, h, w)
    if not pb and not gb:
        return 1.0
    if not pb or not gb:
        return 0.0
    r = math.ceil(frac * math.sqrt(h * h + w * w))

    def near(p, pts):
        return any((p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2 <= r * r for q in pts)

    prec = sum(near(p, gb) for p in pb) / len(pb)
    rec = sum(near(g, pb) for g in gb) / len(gb)
    return 0.0 if prec + rec == 0 else 2 * prec * rec / (prec + rec)


def assignment_min(cost: list[list[float]]) -> tuple[float, list[tuple[int, int]]]:
    """Minimum total over all injections of the smaller side; lexicographically
    smallest pair list among optima (compared exactly via Fraction sums)."""
    k = len(cost)
    n = len(cost[0]) if k else 0
    if k == 0 or n == 0:
        return 0.0, []
    best = None
    if k <= n:
        for cols in itertools.permutations(range(n), k):
            pairs = [(i, cols[i]) for i in range(k)]
            total = sum(Fraction(cost[i][j]) for i, j in pairs)
            if best is None or (total, pairs) < best:
                best = (total, pairs)
    else:
        for rows in itertools.permutations(range(k), n):
            pairs = sorted((rows[j], j) for j in range(n))
            total = sum(Fraction(cost[i][j]) for i, j in pairs)
            if best is None or (total, pairs) < best:
                best = (total, pairs)
    return float(best[0]), best[1]


def min_manhattan(point: tuple[int, int], fg: set) -> int:
    x, y = point
    return min(abs(r - y) + abs(c - x) for r, c in fg)


def centroid(fg: set) -> tuple[int, int]:
    n = len(fg)
    mx = Fraction(sum(c for _, c in fg), n)
    my = Fraction(sum(r for r, _ in fg), n)
    cx, cy = math.floor(mx + Fraction(1, 2)), math.floor(my + Fraction(1, 2))
    if (cy, cx) in fg:
        return cx, cy
    best = min(sorted(fg), key=lambda p: abs(p[0] - cy) + abs(p[1] - cx))
    return best[1], best[0]
