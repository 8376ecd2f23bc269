"""Hot numeric kernels.

The numba path is used when numba imports cleanly and ``RVOS_DISABLE_NUMBA``
is unset (or ``0``). Setting ``RVOS_DISABLE_NUMBA=1`` selects the pure-numpy
path. Both modules stay importable for tests and benchmarks.
"""

from __future__ import annotations

import logging
import os

from . import _numpy as numpy_impl

logger = logging.getLogger(__name__)

__all__ = [
    "BACKEND",
    "boundary_hits",
    "boundary_map",
    "l1_distance_transform",
    "lsap",
    "min_l1_to_foreground",
    "numba_impl",
    "numpy_impl",
    "rle_decode",
    "rle_encode",
]


def _numba_disabled() -> bool:
    return os.environ.get("RVOS_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")


numba_impl = None
if not _numba_disabled():
    try:
        from . import _numba as numba_impl
    except ImportError:  # pragma: no cover - numba is a declared dependency
        logger.warning("numba unavailable; using numpy kernels")

_impl = numba_impl if numba_impl is not None else numpy_impl
BACKEND = "numba" if numba_impl is not None else "numpy"

rle_encode = _impl.rle_encode
rle_decode = _impl.rle_decode
boundary_map = _impl.boundary_map
boundary_hits = _impl.boundary_hits
l1_distance_transform = _impl.l1_distance_transform
min_l1_to_foreground = _impl.min_l1_to_foreground
lsap = _impl.lsap
