"""Pure-numpy implementations of the hot kernels.

Every function here has a loop-based twin in ``_numba``; both must return
identical values for identical inputs.
"""

from __future__ import annotations

import numpy as np


def rle_encode(flat):
    flat = np.asarray(flat, dtype=bool).ravel()
    n = flat.size
    if n == 0:
        return np.zeros(1, dtype=np.int64)
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], change, [n]))
    runs = np.diff(bounds).astype(np.int64)
    if flat[0]:
        runs = np.concatenate((np.zeros(1, dtype=np.int64), runs))
    return runs


def rle_decode(runs, n):
    runs = np.asarray(runs, dtype=np.int64)
    values = (np.arange(runs.size) % 2).astype(bool)
    out = np.repeat(values, runs)
    if out.size != n:
        raise ValueError(f"runs sum to {out.size}, expected {n}")
    return out


def boundary_map(mask):
    m = np.asarray(mask, dtype=bool)
    p = np.pad(m, 1, constant_values=False)
    interior = p[:-2, 1:-1] & p[2:, 1:-1] & p[1:-1, :-2] & p[1:-1, 2:]
    return m & ~interior


def disk_offsets(radius):
    r = int(radius)
    dy, dx = np.mgrid[-r:r + 1, -r:r + 1]
    keep = dy * dy + dx * dx <= r * r
    return np.stack([dy[keep], dx[keep]], axis=1).astype(np.int64)


def boundary_hits(src, dst, radius):
    """Count ``src`` pixels lying within Euclidean ``radius`` of a ``dst`` pixel."""
    src = np.asarray(src, dtype=bool)
    dst = np.asarray(dst, dtype=bool)
    h, w = dst.shape
    r = int(radius)
    padded = np.pad(dst, r, constant_values=False)
    dilated = np.zeros_like(dst)
    for dy, dx in disk_offsets(r):
        dilated |= padded[r + dy:r + dy + h, r + dx:r + dx + w]
    return int(np.count_nonzero(src & dilated))


def _min_plus_abs(g, axis):
    # out[i] = min_j g[j] + |i - j| along ``axis``, via two running minima
    n = g.shape[axis]
    shape = [1] * g.ndim
    shape[axis] = n
    idx = np.arange(n, dtype=np.int64).reshape(shape)
    fwd = np.minimum.accumulate(g - idx, axis=axis) + idx
    rev = np.flip(g, axis=axis)
    bwd = np.flip(np.minimum.accumulate(rev - idx, axis=axis) + idx, axis=axis)
    return np.minimum(fwd, bwd)


def l1_distance_transform(fg):
    fg = np.asarray(fg, dtype=bool)
    h, w = fg.shape
    big = np.int64(h + w + 2)
    g = np.where(fg, np.int64(0), big)
    g = _min_plus_abs(g, axis=1)
    g = _min_plus_abs(g, axis=0)
    return np.minimum(g, big)


def min_l1_to_foreground(fg, y, x):
    ys, xs = np.nonzero(np.asarray(fg, dtype=bool))
    if ys.size == 0:
        return -1
    return int(np.min(np.abs(ys - y) + np.abs(xs - x)))


def lsap(cost):
    """Shortest augmenting path assignment on a square matrix.

    Returns ``(col_of_row, u, v)`` with ``cost[i, j] - u[i] - v[j] >= 0``
    everywhere and equality on the assigned cells.
    """
    a = np.asarray(cost, dtype=np.float64)
    n = a.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used[1:]
            cur = a[i0 - 1] - u[i0] - v[1:]
            upd = free & (cur < minv[1:])
            minv[1:][upd] = cur[upd]
            way[1:][upd] = j0
            masked = np.where(free, minv[1:], np.inf)
            j1 = int(np.argmin(masked)) + 1
            delta = masked[j1 - 1]
            u[p[used]] += delta
            v[used] -= delta
            minv[1:][free] -= delta
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
