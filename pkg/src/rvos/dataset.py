"""On-disk dataset layout and ingestion.

::

    root/manifest.json
    root/queries.jsonl
    root/difficulty.jsonl                       (optional)
    root/<video_id>/frames/NNNNN.(png|pgm)
    root/<video_id>/masks/<object_id>/NNNNN.mask.json

``manifest.json`` maps each video id to ``num_frames``, ``height``, ``width``
(and optionally ``fps``) plus its object ids. Every object carries one mask
file per frame; frames where the object is absent hold an empty mask.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .difficulty import DIMENSIONS, DifficultyConfig, DifficultyProfile, aggregate_difficulty
from .errors import ManifestError, MaskFormatError, MissingFrame
from .geometry import BinaryMask, mask_filename, mask_union, read_mask
from .matching import GroundTruthObject
from .sampler import VideoMeta

__all__ = ["Query", "VideoEntry", "Dataset", "ingest_dataset"]


@dataclass(frozen=True)
class Query:
    query_id: str
    video_id: str
    expression: str
    gt_object_ids: tuple[str, ...]
    target_frame: int | None = None

    def to_json(self) -> dict:
        out = {"query_id": self.query_id, "video_id": self.video_id, "expression": self.expression,
               "gt_object_ids": list(self.gt_object_ids)}
        if self.target_frame is not None:
            out["target_frame"] = self.target_frame
        return out


@dataclass(frozen=True)
class VideoEntry:
    video_id: str
    frames_dir: Path
    num_frames: int
    height: int
    width: int
    object_ids: tuple[str, ...]
    fps: float | None = None

    @property
    def meta(self) -> VideoMeta:
        return VideoMeta(self.num_frames, self.height, self.width, self.fps, self.video_id)


@dataclass
class Dataset:
    root: Path
    videos: dict[str, VideoEntry]
    queries: list[Query]
    difficulty: dict[str, tuple[int, ...]] = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def query(self, query_id: str) -> Query:
        for q in self.queries:
            if q.query_id == query_id:
                return q
        raise KeyError(query_id)

    def video_meta(self, video_id: str) -> VideoMeta:
        return self.videos[video_id].meta

    def mask_path(self, video_id: str, object_id: str, frame: int) -> Path:
        return self.root / video_id / "masks" / object_id / mask_filename(frame)

    def object_mask(self, video_id: str, object_id: str, frame: int) -> BinaryMask:
        key = (video_id, object_id, frame)
        with self._lock:
            cached = self._cache.get(key)
        if cached is not None:
            return cached
        entry = self.videos[video_id]
        m = read_mask(self.mask_path(video_id, object_id, frame))
        if m.shape != (entry.height, entry.width):
            raise MaskFormatError(f"mask is {m.shape}, video is {(entry.height, entry.width)}",
                                  str(self.mask_path(video_id, object_id, frame)))
        with self._lock:
            self._cache[key] = m
        return m

    def object_sequence(self, video_id: str, object_id: str) -> list[BinaryMask]:
        return [self.object_mask(video_id, object_id, t) for t in range(self.videos[video_id].num_frames)]

    def objects_at(self, video_id: str, frame: int) -> list[tuple[str, BinaryMask]]:
        out = []
        for oid in self.videos[video_id].object_ids:
            m = self.object_mask(video_id, oid, frame)
            if not m.is_empty():
                out.append((oid, m))
        return out

    def gt_sequence(self, query: Query) -> list[BinaryMask]:
        entry = self.videos[query.video_id]
        return [mask_union([self.object_mask(query.video_id, o, t) for o in query.gt_object_ids],
                           (entry.height, entry.width)) for t in range(entry.num_frames)]

    def gt_objects(self, query: Query, frame: int) -> list[GroundTruthObject]:
        out = []
        for oid in query.gt_object_ids:
            m = self.object_mask(query.video_id, oid, frame)
            if not m.is_empty():
                out.append(GroundTruthObject.from_mask(m))
        return out

    def target_frame(self, query: Query) -> int:
        """Annotated target frame, else the frame where the target is largest."""
        if query.target_frame is not None:
            return query.target_frame
        areas = [m.area for m in self.gt_sequence(query)]
        return int(np.argmax(areas))

    def difficulty_profile(self, query_id: str, cfg: DifficultyConfig = DifficultyConfig()) -> DifficultyProfile | None:
        scores = self.difficulty.get(query_id)
        return None if scores is None else aggregate_difficulty(scores, cfg)


def _read_jsonl(path: Path) -> list[dict]:
    rows = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"line {lineno}: {exc}", str(path)) from exc
        if not isinstance(obj, dict):
            raise ManifestError(f"line {lineno}: expected an object", str(path))
        rows.append(obj)
    return rows


def _frame_exists(frames_dir: Path, t: int) -> bool:
    return any((frames_dir / f"{t:05d}.{ext}").is_file() for ext in ("png", "pgm"))


def _parse_video(root: Path, vid: str, spec) -> VideoEntry:
    manifest = str(root / "manifest.json")
    if not isinstance(spec, Mapping):
        raise ManifestError(f"video {vid!r}: entry must be an object", manifest)
    try:
        t, h, w = int(spec["num_frames"]), int(spec["height"]), int(spec["width"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestError(f"video {vid!r}: needs integer num_frames/height/width", manifest) from exc
    if t < 1 or h < 1 or w < 1:
        raise ManifestError(f"video {vid!r}: dimensions must be positive", manifest)
    objects = tuple(str(o) for o in spec.get("objects", []))
    if not objects:
        raise ManifestError(f"video {vid!r}: lists no objects", manifest)
    frames_dir = root / vid / "frames"
    for i in range(t):
        if not _frame_exists(frames_dir, i):
            raise MissingFrame(str(frames_dir / f"{i:05d}.png"))
    for oid in objects:
        for i in range(t):
            path = root / vid / "masks" / oid / mask_filename(i)
            if not path.is_file():
                raise MissingFrame(str(path))
    fps = spec.get("fps")
    return VideoEntry(vid, frames_dir, t, h, w, objects, None if fps is None else float(fps))


def _difficulty_scores(row: dict, path: Path) -> tuple[str, tuple[int, ...]]:
    src = row.get("scores", row)
    try:
        return str(row["query_id"]), tuple(src[d] for d in DIMENSIONS)
    except KeyError as exc:
        raise ManifestError(f"difficulty row lacks {exc}", str(path)) from exc


def ingest_dataset(root_path) -> Dataset:
    root = Path(root_path)
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise ManifestError("manifest.json not found", str(manifest_path))
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(str(exc), str(manifest_path)) from exc
    if not isinstance(manifest, dict) or not isinstance(manifest.get("videos"), dict) or not manifest["videos"]:
        raise ManifestError("manifest needs a non-empty 'videos' object", str(manifest_path))
    videos = {str(vid): _parse_video(root, str(vid), spec) for vid, spec in manifest["videos"].items()}

    queries_path = root / "queries.jsonl"
    if not queries_path.is_file():
        raise ManifestError("queries.jsonl not found", str(queries_path))
    queries = []
    seen = set()
    for row in _read_jsonl(queries_path):
        try:
            q = Query(str(row["query_id"]), str(row["video_id"]), str(row.get("expression", "")),
                      tuple(str(o) for o in row["gt_object_ids"]), row.get("target_frame"))
        except KeyError as exc:
            raise ManifestError(f"query row lacks {exc}", str(queries_path)) from exc
        if q.query_id in seen:
            raise ManifestError(f"duplicate query id {q.query_id!r}", str(queries_path))
        seen.add(q.query_id)
        video = videos.get(q.video_id)
        if video is None:
            raise ManifestError(f"query {q.query_id!r} references unknown video {q.video_id!r}",
                                str(queries_path))
        unknown = set(q.gt_object_ids) - set(video.object_ids)
        if unknown or not q.gt_object_ids:
            raise ManifestError(f"query {q.query_id!r} has bad object ids {sorted(unknown)}",
                                str(queries_path))
        if q.target_frame is not None and not 0 <= q.target_frame < video.num_frames:
            raise ManifestError(f"query {q.query_id!r} target frame out of range", str(queries_path))
        queries.append(q)

    difficulty = {}
    diff_path = root / "difficulty.jsonl"
    if diff_path.is_file():
        for row in _read_jsonl(diff_path):
            qid, scores = _difficulty_scores(row, diff_path)
            difficulty[qid] = scores
    return Dataset(root, videos, queries, difficulty)
