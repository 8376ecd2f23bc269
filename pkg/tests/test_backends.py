import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from types import SimpleNamespace

import numpy as np
import pytest

from rvos.answer import ObjectPrediction, parse_answer, validate_format
from rvos.backends import (
    BackendEndpoint,
    LiveBackend,
    OracleBackend,
    PropagateRequest,
    QueryRef,
    ReasonRequest,
    RecordingBackend,
    ScriptedLocalizer,
    SegmentRequest,
    StaticCopyPropagator,
    TraceBackend,
    TraceStore,
    build_backends,
    negative_point,
    request_hash,
    write_trace,
)
from rvos.backends import wire
from rvos.errors import BackendError, ConfigError, NoCandidate, OutOfRange, TraceExhausted
from rvos.fixtures import moving_square
from rvos.geometry import BBox, BinaryMask, LabeledPoint, mask_to_bbox
from rvos.sampler import KeySegment


class FakeGT:
    """Minimal ground-truth source for localization examples."""

    def __init__(self, target):
        self.target = target

    def query(self, query_id):
        return SimpleNamespace(query_id=query_id)

    def target_frame(self, query):
        return self.target


def qref(ds, qid):
    q = ds.query(qid)
    return QueryRef(q.query_id, q.video_id, q.expression, ds.videos[q.video_id].num_frames)


class TestOracle:
    def test_localize_example(self):
        o = OracleBackend(FakeGT(25), window=10)
        full = KeySegment(0, 99)
        assert o.localize_temporal("v", QueryRef("q", "v", "x"), full, "interval") == (15, 35)
        assert o.localize_temporal("v", QueryRef("q", "v", "x"), KeySegment(15, 35), "percent") == 10 / 21

    def test_localize_clips_to_segment(self):
        o = OracleBackend(FakeGT(90), window=10)
        assert o.localize_temporal("v", QueryRef("q", "v", "x"), KeySegment(0, 50), "interval") == (40, 50)

    def test_jitter_is_deterministic_and_bounded(self):
        seg = KeySegment(0, 99)
        runs = []
        for _ in range(2):
            o = OracleBackend(FakeGT(50), window=0, jitter=3, seed=7)
            runs.append([o.localize_temporal("v", QueryRef("q", "v", "x"), seg, "interval")[0] for _ in range(30)])
        assert runs[0] == runs[1]
        assert all(47 <= v <= 53 for v in runs[0]) and len(set(runs[0])) > 1

    def test_reason_is_well_formed_and_exact(self, dataset):
        o = OracleBackend(dataset)
        ref = qref(dataset, "q2")
        rollout = o.reason(ReasonRequest(ref, (5, 6, 7), 6, ()))
        assert validate_format(rollout).think_ok and validate_format(rollout).answer_ok
        preds = parse_answer(rollout.answer)
        boxes = sorted(p.bbox for p in preds)
        want = sorted(mask_to_bbox(BinaryMask(b)) for b in (moving_square(6), dataset.object_mask("moving", "2", 0).bits))
        assert boxes == want
        union = dataset.gt_sequence(dataset.query("q2"))[6]
        for p in preds:
            assert not union.bits[p.point_neg.y, p.point_neg.x]

    def test_segment_and_propagate(self, dataset):
        o = OracleBackend(dataset)
        ref = qref(dataset, "q1")
        m = BinaryMask(moving_square(6))
        prompt = ObjectPrediction(mask_to_bbox(m), LabeledPoint(8, 22, 1), LabeledPoint(0, 0, 0))
        assert o.segment(SegmentRequest(ref, 6, prompt)) == m
        seq = o.propagate(PropagateRequest(ref, m, 6, 12))
        assert [s.bits.tolist() for s in seq] == [moving_square(t).tolist() for t in range(12)]

    def test_segment_perturbed_box_picks_nearest_object(self, dataset):
        o = OracleBackend(dataset)
        # object "2" occupies columns 30..37, rows 2..9
        prompt = ObjectPrediction(BBox(28, 1, 36, 11), LabeledPoint(33, 5, 1), LabeledPoint(0, 40, 0))
        got = o.segment(SegmentRequest(qref(dataset, "q2"), 6, prompt))
        assert got == dataset.object_mask("moving", "2", 6)

    def test_segment_no_candidate(self, dataset):
        o = OracleBackend(dataset)
        ref = qref(dataset, "q4")
        prompt = ObjectPrediction(BBox(0, 0, 1, 1), LabeledPoint(0, 0, 1), LabeledPoint(5, 5, 0))
        blank = SimpleNamespace(objects_at=lambda v, t: [])
        with pytest.raises(NoCandidate):
            OracleBackend(blank).segment(SegmentRequest(ref, 0, prompt))
        assert o.segment(SegmentRequest(ref, 0, prompt)).area > 0

    def test_score(self, dataset):
        o = OracleBackend(dataset)
        from rvos.difficulty import parse_difficulty_response
        assert parse_difficulty_response(o.score_difficulty("p", "q1")) == dataset.difficulty["q1"]
        with pytest.raises(BackendError):
            o.score_difficulty("p", "nope")

    def test_negative_point_distance(self):
        bits = np.zeros((64, 64), bool)
        bits[20:30, 20:30] = True
        p = negative_point(BinaryMask(bits), LabeledPoint(25, 25, 1))
        d = min(abs(p.x - x) + abs(p.y - y) for y, x in zip(*np.nonzero(bits)))
        assert d == 20 and p.label == 0


def test_static_copy():
    m = BinaryMask(moving_square(3))
    out = StaticCopyPropagator().propagate(PropagateRequest(QueryRef("q", "v", "x"), m, 3, 5))
    assert out == [m] * 5
    with pytest.raises(BackendError):
        StaticCopyPropagator().reason(ReasonRequest(QueryRef("q", "v", "x"), (), 0, ()))


class TestTrace:
    def test_record_then_replay(self, dataset, tmp_path):
        sink = []
        rec = RecordingBackend(OracleBackend(dataset), sink)
        ref = qref(dataset, "q1")
        r1 = rec.reason(ReasonRequest(ref, (6,), 6, (1, 2)))
        l1 = rec.localize_temporal("moving", ref, KeySegment(0, 11), "interval")
        p1 = rec.localize_temporal("moving", ref, KeySegment(0, 11), "percent")
        path = tmp_path / "t.jsonl"
        write_trace(path, sink)
        replay = TraceBackend(TraceStore.load(path))
        assert replay.reason(ReasonRequest(ref, (6,), 6, (1, 2))) == r1
        assert replay.localize_temporal("moving", ref, KeySegment(0, 11), "interval") == l1
        assert replay.localize_temporal("moving", ref, KeySegment(0, 11), "percent") == p1
        with pytest.raises(TraceExhausted):
            replay.reason(ReasonRequest(ref, (6,), 6, (1, 2)))

    def test_fifo_for_identical_requests(self):
        req = wire.score_request("q", "p")
        h = request_hash(req)
        store = TraceStore([{"endpoint": "score", "request_hash": h, "response": {"text": t}} for t in "ab"])
        b = TraceBackend(store)
        assert [b.score_difficulty("p", "q"), b.score_difficulty("p", "q")] == ["a", "b"]

    def test_replayed_out_of_range_is_reported(self):
        seg = KeySegment(0, 9)
        req = wire.localize_request(QueryRef("q", "v", "x"), seg, "interval", "")
        store = TraceStore([{"endpoint": "localize", "request_hash": request_hash(req),
                             "response": {"interval": [0, 20]}}])
        with pytest.raises(OutOfRange):
            TraceBackend(store)._exchange("localize", req, lambda o: wire.decode_localize(o, seg, "interval"))

    def test_bad_trace_file(self, tmp_path):
        p = tmp_path / "bad.jsonl"
        p.write_text('{"endpoint": "score"}\n')
        with pytest.raises(BackendError) as info:
            TraceStore.load(p)
        assert info.value.kind == "malformed"

    def test_hash_is_canonical(self):
        assert request_hash({"b": 1, "a": [1, 2]}) == request_hash({"a": [1, 2], "b": 1})
        assert request_hash({"a": 1}) != request_hash({"a": 2})


class TestScripted:
    def test_sequence_and_repeat(self):
        s = ScriptedLocalizer([[10, 30], [12, 20]], [0.25])
        seg = KeySegment(0, 99)
        assert s.localize_temporal("v", "q", seg, "interval") == (10, 30)
        assert s.localize_temporal("v", "q", seg, "interval") == (12, 20)
        assert s.localize_temporal("v", "q", KeySegment(15, 40), "interval") == (15, 20)
        assert [s.localize_temporal("v", "q", seg, "percent") for _ in range(3)] == [0.25] * 3

    def test_load(self, tmp_path):
        p = tmp_path / "s.json"
        p.write_text(json.dumps({"intervals": [[1, 2]], "percents": [1.0]}))
        assert ScriptedLocalizer.load(p).localize_temporal("v", "q", KeySegment(0, 5), "percent") == 1.0
        p.write_text("[]")
        with pytest.raises(BackendError):
            ScriptedLocalizer.load(p)


class TestWire:
    def test_mask_shape_checked(self):
        m = BinaryMask.empty(4, 5)
        assert wire.decode_segment({"mask": m.to_json()}, (4, 5)) == m
        with pytest.raises(BackendError):
            wire.decode_segment({"mask": m.to_json()}, (5, 4))
        with pytest.raises(BackendError):
            wire.decode_segment({"mask": {"height": 4}})

    def test_propagate_length(self):
        m = BinaryMask.empty(2, 2)
        with pytest.raises(BackendError):
            wire.decode_propagate({"masks": [m.to_json()]}, 2)
        assert wire.decode_propagate({"masks": [m.to_json()] * 2}, 2) == [m, m]

    @pytest.mark.parametrize("obj,exc", [
        ({"interval": [1, 2.0]}, "malformed"), ({"interval": [3, 2]}, "out_of_range"),
        ({"interval": [True, 2]}, "malformed"), ({}, "malformed"),
    ])
    def test_interval_validation(self, obj, exc):
        with pytest.raises(BackendError) as info:
            wire.decode_localize(obj, KeySegment(0, 9), "interval")
        assert info.value.kind == exc

    @pytest.mark.parametrize("obj,exc", [({"percent": "0.5"}, "malformed"), ({"percent": float("nan")}, "malformed"),
                                         ({"percent": 1.5}, "out_of_range")])
    def test_percent_validation(self, obj, exc):
        with pytest.raises(BackendError) as info:
            wire.decode_localize(obj, KeySegment(0, 9), "percent")
        assert info.value.kind == exc

    def test_text_endpoints(self):
        with pytest.raises(BackendError):
            wire.decode_reason({"text": 3})
        with pytest.raises(BackendError):
            wire.decode_score([])


# --- live client against an in-process HTTP server ---------------------------

class Server:
    def __init__(self, script):
        self.script = list(script)
        self.requests = []
        owner = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
                owner.requests.append((self.path, body, self.headers.get("Authorization")))
                status, payload = owner.script.pop(0) if len(owner.script) > 1 else owner.script[0]
                data = payload.encode() if isinstance(payload, str) else json.dumps(payload).encode()
                self.send_response(status)
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, *args):
                pass

        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self.httpd.server_address[1]}"
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.httpd.shutdown()
        self.httpd.server_close()


def live(url, **kw):
    return LiveBackend(BackendEndpoint(mode="live", base_url=url, timeout=2.0, **kw))


class TestLive:
    def test_roundtrip_and_token(self):
        with Server([(200, {"text": "hello"})]) as srv:
            assert live(srv.url, token="s3cret").score_difficulty("p", "q") == "hello"
        path, body, auth = srv.requests[0]
        assert path == "/score" and body == {"query_id": "q", "prompt": "p"} and auth == "Bearer s3cret"

    def test_out_of_range_retried(self):
        with Server([(200, {"percent": 2.0}), (200, {"percent": 0.5})]) as srv:
            assert live(srv.url).localize_temporal("v", QueryRef("q", "v", "x"), KeySegment(0, 9), "percent") == 0.5
        assert len(srv.requests) == 2

    def test_retries_exhausted(self):
        with Server([(200, {"percent": 2.0})]) as srv:
            with pytest.raises(OutOfRange):
                live(srv.url, retries=1).localize_temporal("v", "x", KeySegment(0, 9), "percent")
        assert len(srv.requests) == 2

    def test_malformed_not_retried(self):
        with Server([(200, "not json")]) as srv:
            with pytest.raises(BackendError) as info:
                live(srv.url).score_difficulty("p")
        assert info.value.kind == "malformed" and len(srv.requests) == 1

    def test_http_error(self):
        with Server([(503, "busy")]) as srv:
            with pytest.raises(BackendError) as info:
                live(srv.url).score_difficulty("p")
        assert info.value.kind == "http" and info.value.status == 503 and len(srv.requests) == 1

    def test_unreachable_is_timeout(self):
        with Server([(200, {})]) as srv:
            url = srv.url
        with pytest.raises(BackendError) as info:
            live(url, retries=0).score_difficulty("p")
        assert info.value.kind == "timeout"


class TestBuild:
    def test_modes(self, dataset, tmp_path):
        p = tmp_path / "t.jsonl"
        p.write_text("")
        b = build_backends({"reasoner": BackendEndpoint(mode="trace", trace_path=str(p)),
                            "propagator": BackendEndpoint(mode="static")}, gt=dataset)
        assert isinstance(b.reasoner, TraceBackend) and isinstance(b.propagator, StaticCopyPropagator)
        assert isinstance(b.segmenter, OracleBackend) and b.segmenter is b.localizer

    def test_errors(self, dataset, monkeypatch):
        monkeypatch.delenv("RVOS_BACKEND_URL", raising=False)
        with pytest.raises(ConfigError):
            build_backends({"reasoner": BackendEndpoint(mode="static")}, gt=dataset)
        with pytest.raises(ConfigError):
            build_backends({})
        with pytest.raises(ConfigError):
            BackendEndpoint(mode="live", base_url=None)
        with pytest.raises(ConfigError):
            BackendEndpoint(mode="trace")
