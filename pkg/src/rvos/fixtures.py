"""Small synthetic dataset used by the tests, the acceptance suite and the CLI demo.

Three videos:

* ``moving``: 12 frames of 48x48. Object ``1`` is a 10x10 square sliding
  right by 3 px per frame; object ``2`` is a static 8x8 square.
* ``static``: 8 frames of 32x40. Object ``1`` is a fixed L-shape; object ``2``
  is a bar that only appears from frame 2 on.
* ``image``: a single 24x24 frame with one rectangle.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import yaml

from .geometry import BinaryMask, mask_filename, write_mask

MOVING_STEP = 3


def moving_square(t: int) -> np.ndarray:
    bits = np.zeros((48, 48), dtype=bool)
    x0 = 4 + MOVING_STEP * t
    bits[18:28, x0:x0 + 10] = True
    return bits


def _static_square() -> np.ndarray:
    bits = np.zeros((48, 48), dtype=bool)
    bits[2:10, 30:38] = True
    return bits


def _l_shape() -> np.ndarray:
    bits = np.zeros((32, 40), dtype=bool)
    bits[4:20, 4:10] = True
    bits[14:20, 4:22] = True
    return bits


def _late_bar(t: int) -> np.ndarray:
    bits = np.zeros((32, 40), dtype=bool)
    if t >= 2:
        bits[24:29, 26:38] = True
    return bits


def _rectangle() -> np.ndarray:
    bits = np.zeros((24, 24), dtype=bool)
    bits[6:15, 5:19] = True
    return bits


def fixture_objects() -> dict[str, dict[str, list[np.ndarray]]]:
    """video id -> object id -> per-frame bitmaps."""
    return {
        "moving": {"1": [moving_square(t) for t in range(12)], "2": [_static_square()] * 12},
        "static": {"1": [_l_shape()] * 8, "2": [_late_bar(t) for t in range(8)]},
        "image": {"1": [_rectangle()]},
    }


QUERIES = [
    {"query_id": "q1", "video_id": "moving", "expression": "the square that keeps sliding to the right",
     "gt_object_ids": ["1"], "target_frame": 6},
    {"query_id": "q2", "video_id": "moving", "expression": "both squares", "gt_object_ids": ["1", "2"],
     "target_frame": 6},
    {"query_id": "q3", "video_id": "static", "expression": "the bent shape on the left",
     "gt_object_ids": ["1"], "target_frame": 4},
    {"query_id": "q4", "video_id": "static", "expression": "the bar that shows up late",
     "gt_object_ids": ["2"], "target_frame": 5},
    {"query_id": "q5", "video_id": "image", "expression": "the rectangle", "gt_object_ids": ["1"]},
]

DIFFICULTY = [
    {"query_id": "q1", "scores": {"scene": 2, "segmentation": 6, "temporal": 3,
                                  "motion": 4, "language": 2}},
    {"query_id": "q2", "scores": {"scene": 5, "segmentation": 6, "temporal": 4,
                                  "motion": 5, "language": 5}},
    {"query_id": "q3", "scores": {"scene": 2, "segmentation": 1, "temporal": 3,
                                  "motion": 2, "language": 3}},
    {"query_id": "q4", "scores": {"scene": 7, "segmentation": 8, "temporal": 6,
                                  "motion": 8, "language": 7}},
    {"query_id": "q5", "scores": {"scene": 1, "segmentation": 1, "temporal": 2,
                                  "motion": 1, "language": 1}},
]

# oracle intervals of +-1 frame around the annotated target
ORACLE_CONFIG = {"backends": {role: {"mode": "oracle", "options": {"window": 1}}
                              for role in ("reasoner", "segmenter", "propagator", "localizer", "scorer")},
                 "workers": 1, "seed": 0}


def static_config() -> dict:
    doc = json.loads(json.dumps(ORACLE_CONFIG))
    doc["backends"]["propagator"] = {"mode": "static"}
    return doc


def write_pgm(path: Path, gray: np.ndarray) -> None:
    h, w = gray.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(gray, dtype=np.uint8).tobytes())


def write_fixture_dataset(root) -> Path:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    manifest = {"videos": {}}
    for vid, objects in fixture_objects().items():
        first = next(iter(objects.values()))
        t_count, (h, w) = len(first), first[0].shape
        manifest["videos"][vid] = {"num_frames": t_count, "height": h, "width": w, "fps": 6.0,
                                   "objects": sorted(objects)}
        (root / vid / "frames").mkdir(parents=True, exist_ok=True)
        for t in range(t_count):
            # frames are rendered from the annotations so they stay consistent
            gray = np.full((h, w), 32, dtype=np.uint8)
            for k, oid in enumerate(sorted(objects), 1):
                gray[objects[oid][t]] = min(255, 96 + 64 * k)
            write_pgm(root / vid / "frames" / f"{t:05d}.pgm", gray)
        for oid, seq in objects.items():
            odir = root / vid / "masks" / oid
            odir.mkdir(parents=True, exist_ok=True)
            for t, bits in enumerate(seq):
                write_mask(odir / mask_filename(t), BinaryMask(bits))
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    with open(root / "queries.jsonl", "w", encoding="utf-8") as fh:
        for q in QUERIES:
            fh.write(json.dumps(q, sort_keys=True) + "\n")
    with open(root / "difficulty.jsonl", "w", encoding="utf-8") as fh:
        for d in DIFFICULTY:
            fh.write(json.dumps(d, sort_keys=True) + "\n")
    return root


def write_fixture_configs(directory) -> tuple[Path, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    oracle, static = directory / "oracle.yaml", directory / "static_propagator.yaml"
    oracle.write_text(yaml.safe_dump(ORACLE_CONFIG, sort_keys=True), encoding="utf-8")
    static.write_text(yaml.safe_dump(static_config(), sort_keys=True), encoding="utf-8")
    return oracle, static
