"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each kernel runs once untimed (JIT warm-up), then ``--repeat`` times; the
best wall time per call is reported. Outputs are cross-checked before timing.
"""

from __future__ import annotations

import argparse
import json
import platform
import timeit

import numpy as np

from rvos._kernels import numba_impl, numpy_impl


def _masks(rng, h, w):
    yy, xx = np.mgrid[:h, :w]
    a = (yy - h / 2) ** 2 / (h / 3) ** 2 + (xx - w / 2) ** 2 / (w / 3) ** 2 <= 1
    b = np.roll(a, (3, -2), axis=(0, 1)) ^ (rng.random((h, w)) < 0.01)
    return a, b


def cases(rng):
    a, b = _masks(rng, 480, 854)
    flat = a.reshape(-1)
    runs = np.asarray(numpy_impl.rle_encode(flat), dtype=np.int64)
    ba, bb = numpy_impl.boundary_map(a), numpy_impl.boundary_map(b)
    small = np.zeros((120, 160), dtype=bool)
    small[40:70, 50:90] = True
    cost = rng.uniform(0, 100, size=(32, 32))
    return {
        "rle_encode 480x854": lambda k: k.rle_encode(flat),
        "rle_decode 480x854": lambda k: k.rle_decode(runs, flat.size),
        "boundary_map 480x854": lambda k: k.boundary_map(a),
        "boundary_hits r=8": lambda k: k.boundary_hits(ba, bb, 8),
        "l1_distance_transform 120x160": lambda k: k.l1_distance_transform(small),
        "lsap 32x32": lambda k: k.lsap(cost),
    }


def _same(x, y) -> bool:
    if isinstance(x, tuple):
        return all(_same(p, q) for p, q in zip(x, y))
    return np.array_equal(np.asarray(x), np.asarray(y))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write results here")
    args = ap.parse_args(argv)
    if numba_impl is None:
        print("numba kernels disabled (RVOS_DISABLE_NUMBA set or numba missing); nothing to compare")
        return 1

    rng = np.random.default_rng(0)
    rows = []
    print(f"python {platform.python_version()} numpy {np.__version__}")
    print(f"{'kernel':<32}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for name, fn in cases(rng).items():
        ref, jit = fn(numpy_impl), fn(numba_impl)
        if name.startswith("lsap"):
            ref, jit = ref[0], jit[0]
        if not _same(ref, jit):
            raise SystemExit(f"{name}: numba and numpy disagree")
        times = {}
        for label, impl in (("numpy", numpy_impl), ("numba", numba_impl)):
            number = 1
            timer = timeit.Timer(lambda: fn(impl))
            while timer.timeit(number) < 0.05 and number < 10_000:
                number *= 4
            times[label] = min(timer.repeat(args.repeat, number)) / number * 1e3
        speedup = times["numpy"] / times["numba"]
        rows.append({"kernel": name, "numpy_ms": times["numpy"], "numba_ms": times["numba"], "speedup": speedup})
        print(f"{name:<32}{times['numpy']:>12.3f}{times['numba']:>12.3f}{speedup:>9.1f}x")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
