"""Command-line entry point: ``rvos run | evaluate | reward | sample | score-difficulty | make-fixture``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .backends import QueryRef, ScriptedLocalizer, TraceBackend, TraceStore, build_backends
from .config import load_config
from .dataset import ingest_dataset
from .difficulty import aggregate_difficulty, parse_difficulty_response, render_scoring_prompt
from .errors import BackendError, ConfigError, ManifestError, MaskFormatError, RvosError
from .metrics import EvalReport
from .pipeline import read_predictions, reward_batch, run_dataset, score_predictions, write_predictions
from .sampler import VideoMeta, plan_sampling

EXIT_OK = 0
EXIT_USAGE = 2


class _Fail(Exception):
    """Configuration or IO failure; maps to exit code 2."""


def _write_json(path, obj) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _print_report(report: EvalReport) -> None:
    for qid in sorted(report.videos):
        s = report.videos[qid]
        print(f"{qid:<12} J={s['J']:.4f} F={s['F']:.4f} JF={s['JF']:.4f}")
    for qid in sorted(report.images):
        print(f"{qid:<12} IoU={report.images[qid]['IoU']:.4f}")
    for key in sorted(report.aggregate):
        print(f"aggregate {key}={report.aggregate[key]:.4f}")
    if report.tokens:
        print("tokens " + " ".join(f"{k}={v:.4f}" for k, v in sorted(report.tokens.items())))
    for qid in sorted(report.errors):
        print(f"error {qid}: {report.errors[qid]}")


def _config(args):
    cfg = load_config(args.config)
    if getattr(args, "backend_mode", None):
        if args.backend_mode == "trace" and not args.trace:
            raise ConfigError("--backend-mode trace needs --trace")
        cfg = cfg.with_backend_mode(args.backend_mode, args.trace)
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        overrides["workers"] = args.workers
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg


# --- subcommands ---------------------------------------------------------------

def cmd_run(args) -> int:
    ds = ingest_dataset(args.dataset)
    cfg = _config(args)
    backends = build_backends(cfg.backends, ds, cfg.seed)
    preds, traces = run_dataset(ds, cfg, backends, record=args.record)
    write_predictions(args.out, preds, traces)
    report = score_predictions(ds, preds, traces)
    if args.report:
        _write_json(args.report, report.to_json())
    _print_report(report)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    ds = ingest_dataset(args.dataset)
    if not Path(args.pred).is_dir():
        raise _Fail(f"prediction directory {args.pred} does not exist")
    preds, traces, errors = read_predictions(args.pred, ds)
    report = score_predictions(ds, preds, traces, errors)
    _write_json(args.report, report.to_json())
    _print_report(report)
    return EXIT_OK


def cmd_reward(args) -> int:
    cfg = load_config(args.config)
    rows = reward_batch(args.rollouts, args.gt, cfg, args.budget)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for row in rows:
            out.write(json.dumps(row, sort_keys=True) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def _localizer_from_trace(path):
    text = Path(path).read_text(encoding="utf-8").lstrip()
    try:
        doc = json.loads(text)
    except ValueError:
        doc = None
    if isinstance(doc, dict) and "intervals" in doc:
        return ScriptedLocalizer.load(path)
    return TraceBackend(TraceStore.load(path))


def cmd_sample(args) -> int:
    cfg = load_config(args.config)
    ds = ingest_dataset(args.dataset) if args.dataset else None
    if ds is not None:
        if args.video not in ds.videos:
            raise _Fail(f"video {args.video!r} not in dataset")
        meta = ds.video_meta(args.video)
    elif args.num_frames:
        meta = VideoMeta(args.num_frames, 1, 1, None, args.video)
    else:
        raise _Fail("sample needs --dataset or --num-frames")
    if args.trace:
        localizer = _localizer_from_trace(args.trace)
    else:
        localizer = build_backends(cfg.backends, ds, cfg.seed).localizer
    query_id = args.query_id or args.query
    plan = plan_sampling(meta, localizer, QueryRef(query_id, args.video, args.query, meta.num_frames), cfg.sampler)
    print(json.dumps(plan.to_json(), sort_keys=True))
    return EXIT_OK


def cmd_score_difficulty(args) -> int:
    cfg = load_config(args.config)
    scorer = None
    lines = [ln for ln in Path(args.in_path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    out_rows = []
    for lineno, line in enumerate(lines, 1):
        row: dict = {}
        try:
            row = json.loads(line)
            qid = str(row.get("query_id", lineno))
            text = row.get("response")
            if text is None:
                if scorer is None:
                    ds = ingest_dataset(args.dataset) if args.dataset else None
                    scorer = build_backends(cfg.backends, ds, cfg.seed).scorer
                prompt = render_scoring_prompt(row["query"], row.get("visual_desc", ""), row.get("textual_desc", ""))
                text = scorer.score_difficulty(prompt, qid)
            profile = aggregate_difficulty(parse_difficulty_response(text), cfg.difficulty)
            out_rows.append({"query_id": qid, **profile.to_json()})
        except (RvosError, ValueError, KeyError, TypeError) as exc:
            if isinstance(exc, (ConfigError, ManifestError)):
                raise
            out_rows.append({"query_id": str(row.get("query_id", lineno)) if isinstance(row, dict) else str(lineno),
                             "error": f"{type(exc).__name__}: {exc}"})
    with open(args.out_path, "w", encoding="utf-8") as fh:
        for r in out_rows:
            fh.write(json.dumps(r, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_make_fixture(args) -> int:
    from .fixtures import write_fixture_configs, write_fixture_dataset

    root = write_fixture_dataset(Path(args.out) / "dataset")
    oracle, static = write_fixture_configs(Path(args.out) / "configs")
    print(f"dataset: {root}\nconfigs: {oracle} {static}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rvos", description="Video reasoning segmentation toolkit.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the pipeline over a dataset and score it")
    r.add_argument("--dataset", required=True)
    r.add_argument("--config")
    r.add_argument("--backend-mode", choices=["oracle", "trace", "live"])
    r.add_argument("--trace", help="trace file for --backend-mode trace")
    r.add_argument("--seed", type=int)
    r.add_argument("--workers", type=int)
    r.add_argument("--out", default="rvos_predictions", help="prediction directory (default: %(default)s)")
    r.add_argument("--report", help="also write the report JSON here")
    r.add_argument("--record", action="store_true", help="write backend calls to OUT/backend_trace.jsonl")
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("evaluate", help="score a prediction directory")
    e.add_argument("--dataset", required=True)
    e.add_argument("--pred", required=True)
    e.add_argument("--report", required=True)
    e.set_defaults(func=cmd_evaluate)

    w = sub.add_parser("reward", help="reward breakdowns for a rollout file")
    w.add_argument("--rollouts", required=True)
    w.add_argument("--gt", required=True)
    w.add_argument("--budget", type=int)
    w.add_argument("--config")
    w.add_argument("--out", help="output JSONL (default: stdout)")
    w.set_defaults(func=cmd_reward)

    s = sub.add_parser("sample", help="run the frame sampler for one query")
    s.add_argument("--video", required=True, help="video id")
    s.add_argument("--query", required=True, help="query text")
    s.add_argument("--query-id")
    s.add_argument("--trace", help="backend trace JSONL or a localizer script JSON")
    s.add_argument("--dataset")
    s.add_argument("--num-frames", type=int)
    s.add_argument("--config")
    s.set_defaults(func=cmd_sample)

    d = sub.add_parser("score-difficulty", help="difficulty profiles for a JSONL of samples")
    d.add_argument("--in", dest="in_path", required=True)
    d.add_argument("--out", dest="out_path", required=True)
    d.add_argument("--config")
    d.add_argument("--dataset", help="ground truth for oracle scorers")
    d.set_defaults(func=cmd_score_difficulty)

    f = sub.add_parser("make-fixture", help="write the synthetic fixture dataset and configs")
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_make_fixture)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (_Fail, ConfigError, ManifestError, MaskFormatError, BackendError, RvosError, OSError) as exc:
        print(f"rvos: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
