"""End-to-end orchestration: sampler -> reasoner -> segmenter -> propagator,
dataset evaluation, and batch reward scoring."""

from __future__ import annotations

import hashlib
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .answer import parse_answer, whitespace_tokens
from .assets import load_template
from .backends import Backends, PropagateRequest, QueryRef, ReasonRequest, SegmentRequest, build_backends
from .config import PipelineConfig
from .dataset import Dataset, Query
from .difficulty import aggregate_difficulty, token_budget
from .errors import RvosError
from .geometry import BinaryMask, mask_filename, mask_iou, mask_union, read_mask, write_mask
from .matching import GroundTruthObject
from .metrics import EvalReport, aggregate_scores, jf_scores, token_stats
from .rewards import RewardConfig, compute_reward
from .sampler import KeySegment, SamplingPlan, plan_sampling

logger = logging.getLogger(__name__)

__all__ = ["RunTrace", "run_query", "run_dataset", "evaluate", "score_predictions",
           "write_predictions", "read_predictions", "reward_batch"]


def _mask_id(m: BinaryMask) -> str:
    return hashlib.sha1(json.dumps(m.to_json()).encode()).hexdigest()[:12]


@dataclass
class RunTrace:
    query_id: str
    video_id: str
    stages: dict[str, str] = field(default_factory=dict)
    plan: dict | None = None
    rollout: str | None = None
    predictions: list[dict] = field(default_factory=list)
    seed_masks: list[str] = field(default_factory=list)
    propagation_source: str | None = None
    l_used: int | None = None
    error: str | None = None
    timing: dict[str, float] = field(default_factory=dict)
    backend_calls: list[dict] = field(default_factory=list)

    def to_json(self, include_timing: bool = False) -> dict:
        out = {
            "query_id": self.query_id,
            "video_id": self.video_id,
            "stages": self.stages,
            "plan": self.plan,
            "rollout": self.rollout,
            "predictions": self.predictions,
            "seed_masks": self.seed_masks,
            "propagation_source": self.propagation_source,
            "l_used": self.l_used,
            "error": self.error,
        }
        if include_timing:
            out["timing"] = self.timing
        return out


class _Stage:
    def __init__(self, trace: RunTrace, name: str):
        self.trace = trace
        self.name = name

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.trace.timing[self.name] = time.perf_counter() - self.t0
        if exc is None:
            self.trace.stages.setdefault(self.name, "ok")
        else:
            self.trace.stages[self.name] = "error"
            self.trace.error = f"{self.name}: {type(exc).__name__}: {exc}"
        return False


def _prediction_json(p) -> dict:
    return {"bbox_2d": p.bbox.as_list(), "point_pos": p.point_pos.as_list(), "point_neg": p.point_neg.as_list()}


def run_query(ds: Dataset, query: Query, cfg: PipelineConfig,
              backends: Backends | None = None) -> tuple[list[BinaryMask], RunTrace]:
    """Run the full stage chain for one query.

    Any stage failure is recorded on the trace and yields an all-empty mask
    sequence; it never propagates to the caller.
    """
    backends = backends or build_backends(cfg.backends, ds, cfg.seed)
    meta = ds.video_meta(query.video_id)
    shape = (meta.height, meta.width)
    empty = [BinaryMask.empty(*shape) for _ in range(meta.num_frames)]
    trace = RunTrace(query.query_id, query.video_id)
    qref = QueryRef(query.query_id, query.video_id, query.expression, meta.num_frames)
    try:
        if meta.num_frames == 1:
            # a still image: no temporal search and nothing to propagate
            plan = SamplingPlan(KeySegment(0, 0), 0, (), 0)
            trace.stages["sampler"] = "skipped"
        else:
            with _Stage(trace, "sampler"):
                plan = plan_sampling(meta, backends.localizer, qref, cfg.sampler)
        trace.plan = plan.to_json()

        with _Stage(trace, "reason"):
            prompt = load_template("reasoning_prompt").format(query=query.expression, target_frame=plan.target_frame)
            rollout = backends.reasoner.reason(ReasonRequest(
                qref, tuple(plan.key_segment.frames()), plan.target_frame, plan.reference_frames, prompt))
        trace.rollout = rollout.raw
        trace.l_used = whitespace_tokens(rollout.think)

        with _Stage(trace, "parse"):
            if rollout.answer is None:
                raise RvosError("rollout has no <answer> block")
            preds = parse_answer(rollout.answer)
        trace.predictions = [_prediction_json(p) for p in preds]

        seeds = []
        with _Stage(trace, "segment"):
            for p in preds:
                m = backends.segmenter.segment(SegmentRequest(qref, plan.target_frame, p, shape))
                if m.shape != shape:
                    raise RvosError(f"segmenter returned {m.shape}, frame is {shape}")
                seeds.append(m)
        trace.seed_masks = [_mask_id(m) for m in seeds]

        if meta.num_frames == 1:
            trace.stages["propagate"] = "skipped"
            sequences = [[m] for m in seeds]
        else:
            trace.propagation_source = type(backends.propagator).__name__
            with _Stage(trace, "propagate"):
                sequences = [backends.propagator.propagate(
                    PropagateRequest(qref, m, plan.target_frame, meta.num_frames)) for m in seeds]
        # multi-object answers are scored as the per-frame union
        masks = [mask_union([seq[t] for seq in sequences], shape) for t in range(meta.num_frames)]
        return masks, trace
    except Exception as exc:  # noqa: BLE001 - a query must never take the run down
        if trace.error is None:
            trace.error = f"{type(exc).__name__}: {exc}"
        logger.warning("query %s failed: %s", query.query_id, trace.error)
        return empty, trace


def run_dataset(ds: Dataset, cfg: PipelineConfig, backends: Backends | None = None,
                record: bool = False) -> tuple[dict[str, list[BinaryMask]], dict[str, RunTrace]]:
    """Run every query with up to ``cfg.workers`` in flight; results keyed by query id."""
    base = backends or build_backends(cfg.backends, ds, cfg.seed)

    def one(q: Query):
        sink: list = []
        b = base.recording(sink) if record else base
        masks, trace = run_query(ds, q, cfg, b)
        trace.backend_calls = sink
        return masks, trace

    if cfg.workers <= 1:
        results = [one(q) for q in ds.queries]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(one, ds.queries))
    preds = {q.query_id: r[0] for q, r in zip(ds.queries, results)}
    traces = {q.query_id: r[1] for q, r in zip(ds.queries, results)}
    return preds, traces


def score_predictions(ds: Dataset, predictions: dict[str, Sequence[BinaryMask]],
                      traces: dict[str, RunTrace] | None = None,
                      errors: dict[str, str] | None = None) -> EvalReport:
    report = EvalReport()
    image_pairs, image_ious = [], []
    for q in sorted(ds.queries, key=lambda q: q.query_id):
        gt = ds.gt_sequence(q)
        pred = list(predictions.get(q.query_id) or [])
        if len(pred) != len(gt):
            report.errors[q.query_id] = f"expected {len(gt)} predicted frames, found {len(pred)}"
            pred = [BinaryMask.empty(*g.shape) for g in gt]
        if len(gt) == 1:
            image_pairs.append((pred[0], gt[0]))
            image_ious.append(mask_iou(pred[0], gt[0]))
            report.images[q.query_id] = {"IoU": image_ious[-1]}
        else:
            report.videos[q.query_id] = jf_scores(pred, gt)
    report.aggregate = aggregate_scores(report.videos, image_pairs, image_ious)
    traces = traces or {}
    counts = [traces[k].l_used for k in sorted(traces) if traces[k].l_used is not None]
    report.tokens = token_stats(counts)
    for qid, t in traces.items():
        if t.error:
            report.errors[qid] = t.error
    report.errors.update(errors or {})
    return report


def evaluate(ds: Dataset, cfg: PipelineConfig, backends: Backends | None = None) -> EvalReport:
    preds, traces = run_dataset(ds, cfg, backends)
    return score_predictions(ds, preds, traces)


# --- prediction directories ------------------------------------------------

def write_predictions(out_dir, predictions: dict[str, Sequence[BinaryMask]],
                      traces: dict[str, RunTrace]) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for qid in sorted(predictions):
        qdir = out / qid
        qdir.mkdir(exist_ok=True)
        for t, m in enumerate(predictions[qid]):
            write_mask(qdir / mask_filename(t), m)
    with open(out / "traces.jsonl", "w", encoding="utf-8") as fh:
        for qid in sorted(traces):
            fh.write(json.dumps(traces[qid].to_json(), sort_keys=True) + "\n")
    calls = [c for qid in sorted(traces) for c in traces[qid].backend_calls]
    if calls:
        from .backends import write_trace

        write_trace(out / "backend_trace.jsonl", calls)


def read_predictions(pred_dir, ds: Dataset) -> tuple[dict[str, list[BinaryMask]], dict[str, RunTrace], dict[str, str]]:
    root = Path(pred_dir)
    preds, errors = {}, {}
    for q in ds.queries:
        n = ds.videos[q.video_id].num_frames
        try:
            preds[q.query_id] = [read_mask(root / q.query_id / mask_filename(t)) for t in range(n)]
        except (OSError, RvosError) as exc:
            errors[q.query_id] = f"prediction unreadable: {exc}"
    traces = {}
    trace_file = root / "traces.jsonl"
    if trace_file.is_file():
        for line in trace_file.read_text(encoding="utf-8").splitlines():
            if line.strip():
                obj = json.loads(line)
                t = RunTrace(obj["query_id"], obj["video_id"])
                t.l_used = obj.get("l_used")
                t.error = obj.get("error")
                traces[t.query_id] = t
    return preds, traces, errors


# --- batch rewards ------------------------------------------------------------

def _gt_record(obj: dict, cfg: PipelineConfig, budget_override: int | None):
    objects = []
    for o in obj.get("objects", []):
        m = BinaryMask.from_json(o["mask"])
        if not m.is_empty():
            objects.append(GroundTruthObject.from_mask(m))
    if budget_override is not None:
        budget = budget_override
    elif "budget" in obj:
        budget = int(obj["budget"])
    elif "difficulty" in obj:
        budget = token_budget(aggregate_difficulty(obj["difficulty"], cfg.difficulty), cfg.difficulty)
    else:
        budget = cfg.difficulty.budgets["hard"]
    return objects, budget


def _read_lines(path) -> list[str]:
    return [line for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]


def reward_batch(rollouts_path, gt_path, cfg: PipelineConfig | None = None,
                 budget: int | None = None) -> list[dict]:
    """One reward breakdown per rollout line, in input order.

    Rollout lines are ``{"sample_id", "text"}``; ground-truth lines are
    ``{"sample_id", "objects": [{"mask": ...}], "difficulty"?: {...}, "budget"?: N}``.
    """
    cfg = cfg or PipelineConfig()
    rcfg: RewardConfig = cfg.rewards
    gts: dict[str, tuple] = {}
    for lineno, line in enumerate(_read_lines(gt_path), 1):
        try:
            obj = json.loads(line)
            gts[str(obj["sample_id"])] = _gt_record(obj, cfg, budget)
        except (ValueError, KeyError, TypeError, RvosError) as exc:
            raise RvosError(f"{gt_path}:{lineno}: bad ground-truth record: {exc}") from exc

    default_budget = budget if budget is not None else cfg.difficulty.budgets["hard"]
    out = []
    for lineno, line in enumerate(_read_lines(rollouts_path), 1):
        error = None
        sample_id = None
        text = ""
        objects: list = []
        b = default_budget
        try:
            obj = json.loads(line)
            sample_id = obj.get("sample_id")
            text = obj.get("text", obj.get("completion"))
            if not isinstance(text, str):
                raise ValueError("rollout needs a string 'text'")
            if str(sample_id) not in gts:
                raise KeyError(f"unknown sample_id {sample_id!r}")
            objects, b = gts[str(sample_id)]
        except (ValueError, KeyError, TypeError, AttributeError) as exc:
            error = f"line {lineno}: {exc}"
            text = ""
        row = {"sample_id": sample_id, **compute_reward(text, objects, b, rcfg).to_json()}
        if error:
            row["error"] = error
        out.append(row)
    return out
