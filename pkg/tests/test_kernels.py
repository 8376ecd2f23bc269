import math

import numpy as np
import pytest

from oracles import boundary, pixels, runs_of
from rvos import _kernels


def random_bits(rng, h, w, p=None):
    p = rng.uniform(0.05, 0.95) if p is None else p
    return rng.random((h, w)) < p


def test_backend_flag_reports_selected_impl():
    assert _kernels.BACKEND in ("numba", "numpy")
    expected = _kernels.numba_impl if _kernels.BACKEND == "numba" else _kernels.numpy_impl
    assert _kernels.rle_encode is expected.rle_encode


def test_disable_flag_selects_numpy(tmp_path):
    import subprocess
    import sys

    code = "from rvos import _kernels; print(_kernels.BACKEND, _kernels.numba_impl is None)"
    out = subprocess.run([sys.executable, "-c", code], env={"RVOS_DISABLE_NUMBA": "1", "PATH": ""},
                         capture_output=True, text=True, check=True).stdout.split()
    assert out == ["numpy", "True"]


@pytest.mark.parametrize("flat", [[], [0], [1], [1, 1, 0], [0, 0, 1, 1, 1, 0, 1]])
def test_rle_encode_small(impl, flat):
    expected = runs_of([bool(v) for v in flat]) if flat else [0]
    assert impl.rle_encode(np.array(flat, dtype=bool)).tolist() == expected


def test_rle_roundtrip_against_oracle(impl, rng):
    for _ in range(100):
        h, w = rng.integers(1, 40, size=2)
        bits = random_bits(rng, h, w)
        runs = impl.rle_encode(bits.ravel())
        assert runs.tolist() == runs_of(bits.ravel().tolist())
        assert np.array_equal(impl.rle_decode(runs, h * w), bits.ravel())


def test_rle_decode_rejects_wrong_total(impl):
    with pytest.raises(ValueError):
        impl.rle_decode(np.array([2, 3]), 6)
    with pytest.raises(ValueError):
        impl.rle_decode(np.array([4, 3]), 6)


def test_boundary_map_matches_oracle(impl, rng):
    for _ in range(40):
        h, w = rng.integers(1, 25, size=2)
        bits = random_bits(rng, h, w)
        got = impl.boundary_map(bits)
        assert pixels(got) == boundary(pixels(bits), h, w)


def test_boundary_hits_matches_oracle(impl, rng):
    for _ in range(30):
        h, w = rng.integers(2, 20, size=2)
        src, dst = random_bits(rng, h, w, 0.1), random_bits(rng, h, w, 0.1)
        r = int(rng.integers(0, 4))
        d = pixels(dst)
        expected = sum(any((p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2 <= r * r for q in d) for p in pixels(src))
        assert impl.boundary_hits(src, dst, r) == expected


def test_distance_transform_matches_oracle(impl, rng):
    for _ in range(30):
        h, w = rng.integers(1, 18, size=2)
        bits = random_bits(rng, h, w, 0.1)
        fg = pixels(bits)
        dt = impl.l1_distance_transform(bits)
        big = h + w + 2
        for r in range(h):
            for c in range(w):
                want = min((abs(r - y) + abs(c - x) for y, x in fg), default=big)
                assert dt[r, c] == want


def test_min_l1_to_foreground(impl, rng):
    bits = np.zeros((5, 9), dtype=bool)
    assert impl.min_l1_to_foreground(bits, 0, 0) == -1
    bits[0, 5] = True
    assert impl.min_l1_to_foreground(bits, 0, 0) == 5
    for _ in range(30):
        bits = random_bits(rng, 12, 12, 0.05)
        if not bits.any():
            continue
        y, x = rng.integers(0, 12, size=2)
        want = min(abs(r - y) + abs(c - x) for r, c in pixels(bits))
        assert impl.min_l1_to_foreground(bits, int(y), int(x)) == want


def test_lsap_dual_feasible_and_optimal(impl, rng):
    import itertools

    for _ in range(60):
        n = int(rng.integers(1, 6))
        c = rng.integers(0, 20, size=(n, n)).astype(float)
        col, u, v = impl.lsap(c)
        assert sorted(col.tolist()) == list(range(n))
        reduced = c - u[:, None] - v[None, :]
        assert reduced.min() >= -1e-9
        assert all(abs(reduced[i, col[i]]) < 1e-9 for i in range(n))
        best = min(sum(c[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n)))
        assert math.isclose(sum(c[i, col[i]] for i in range(n)), best)


def test_impls_agree(rng):
    if _kernels.numba_impl is None:
        pytest.skip("numba disabled")
    a, b = _kernels.numpy_impl, _kernels.numba_impl
    for _ in range(20):
        bits = random_bits(rng, 30, 17)
        assert np.array_equal(a.rle_encode(bits), b.rle_encode(bits))
        assert np.array_equal(a.boundary_map(bits), b.boundary_map(bits))
        assert np.array_equal(a.l1_distance_transform(bits), b.l1_distance_transform(bits))
        other = random_bits(rng, 30, 17)
        assert a.boundary_hits(bits, other, 2) == b.boundary_hits(bits, other, 2)
