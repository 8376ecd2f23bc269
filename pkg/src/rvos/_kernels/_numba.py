"""Loop kernels compiled with numba; twins of ``_numpy``."""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _rle_encode(flat):
    n = flat.size
    out = np.empty(n + 2, dtype=np.int64)
    k = 0
    if n == 0:
        out[0] = 0
        return out[:1]
    cur = False
    run = 0
    for i in range(n):
        b = flat[i] != 0
        if b != cur:
            out[k] = run
            k += 1
            run = 1
            cur = b
        else:
            run += 1
    out[k] = run
    k += 1
    return out[:k]


def rle_encode(flat):
    return _rle_encode(np.ascontiguousarray(flat, dtype=np.uint8).ravel())


@njit(cache=True)
def _rle_decode(runs, n):
    out = np.zeros(n, dtype=np.bool_)
    pos = 0
    for k in range(runs.size):
        r = runs[k]
        if pos + r > n:
            return out, -1
        if k % 2 == 1:
            for i in range(pos, pos + r):
                out[i] = True
        pos += r
    return out, pos


def rle_decode(runs, n):
    out, total = _rle_decode(np.ascontiguousarray(runs, dtype=np.int64), int(n))
    if total != n:
        raise ValueError(f"runs do not sum to {n}")
    return out


@njit(cache=True)
def _boundary_map(m):
    h, w = m.shape
    out = np.zeros((h, w), dtype=np.bool_)
    for y in range(h):
        for x in range(w):
            if not m[y, x]:
                continue
            if (y == 0 or x == 0 or y == h - 1 or x == w - 1
                    or not m[y - 1, x] or not m[y + 1, x]
                    or not m[y, x - 1] or not m[y, x + 1]):
                out[y, x] = True
    return out


def boundary_map(mask):
    return _boundary_map(np.ascontiguousarray(mask, dtype=np.bool_))


@njit(cache=True)
def _boundary_hits(src, dst, r):
    h, w = src.shape
    hits = 0
    for y in range(h):
        for x in range(w):
            if not src[y, x]:
                continue
            found = False
            for dy in range(-r, r + 1):
                yy = y + dy
                if yy < 0 or yy >= h:
                    continue
                for dx in range(-r, r + 1):
                    if dy * dy + dx * dx > r * r:
                        continue
                    xx = x + dx
                    if xx < 0 or xx >= w:
                        continue
                    if dst[yy, xx]:
                        found = True
                        break
                if found:
                    break
            if found:
                hits += 1
    return hits


def boundary_hits(src, dst, radius):
    return int(_boundary_hits(np.ascontiguousarray(src, dtype=np.bool_),
                              np.ascontiguousarray(dst, dtype=np.bool_), int(radius)))


@njit(cache=True)
def _l1_distance_transform(fg):
    h, w = fg.shape
    big = h + w + 2
    d = np.empty((h, w), dtype=np.int64)
    for y in range(h):
        for x in range(w):
            d[y, x] = 0 if fg[y, x] else big
    for y in range(h):
        for x in range(w):
            if y > 0 and d[y - 1, x] + 1 < d[y, x]:
                d[y, x] = d[y - 1, x] + 1
            if x > 0 and d[y, x - 1] + 1 < d[y, x]:
                d[y, x] = d[y, x - 1] + 1
    for y in range(h - 1, -1, -1):
        for x in range(w - 1, -1, -1):
            if y < h - 1 and d[y + 1, x] + 1 < d[y, x]:
                d[y, x] = d[y + 1, x] + 1
            if x < w - 1 and d[y, x + 1] + 1 < d[y, x]:
                d[y, x] = d[y, x + 1] + 1
    return d


def l1_distance_transform(fg):
    return _l1_distance_transform(np.ascontiguousarray(fg, dtype=np.bool_))


@njit(cache=True)
def _min_l1_to_foreground(fg, y0, x0):
    h, w = fg.shape
    best = -1
    for y in range(h):
        for x in range(w):
            if fg[y, x]:
                d = abs(y - y0) + abs(x - x0)
                if best < 0 or d < best:
                    best = d
                    if best == 0:
                        return 0
    return best


def min_l1_to_foreground(fg, y, x):
    return int(_min_l1_to_foreground(np.ascontiguousarray(fg, dtype=np.bool_), int(y), int(x)))


@njit(cache=True)
def _lsap(a):
    n = a.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)
    minv = np.empty(n + 1)
    used = np.empty(n + 1, dtype=np.bool_)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv[:] = np.inf
        used[:] = False
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = np.inf
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = a[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    col_of_row = np.zeros(n, dtype=np.int64)
    for j in range(1, n + 1):
        if p[j]:
            col_of_row[p[j] - 1] = j - 1
    return col_of_row, u[1:].copy(), v[1:].copy()


def lsap(cost):
    return _lsap(np.ascontiguousarray(cost, dtype=np.float64))
