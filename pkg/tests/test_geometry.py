import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import centroid, iou, min_manhattan, pixels, runs_of
from rvos.errors import DimensionMismatch, EmptyMask, MaskFormatError, OutOfBounds
from rvos.geometry import (
    BBox,
    BinaryMask,
    LabeledPoint,
    bbox_iou,
    bbox_l1,
    mask_centroid,
    mask_iou,
    mask_to_bbox,
    mask_union,
    point_l1,
    read_mask,
    read_mask_archive,
    signed_distance_to_masks,
    write_mask,
    write_mask_archive,
)

bitmaps = st.integers(1, 12).flatmap(
    lambda h: st.integers(1, 12).flatmap(lambda w: arrays(bool, (h, w))))


def mask_from_pixels(h, w, pts):
    bits = np.zeros((h, w), dtype=bool)
    for r, c in pts:
        bits[r, c] = True
    return BinaryMask(bits)


class TestBoxes:
    def test_iou_examples(self):
        a = BBox(0, 0, 9, 9)
        assert bbox_iou(a, a) == 1.0
        assert bbox_iou(a, BBox(20, 20, 29, 29)) == 0.0
        assert bbox_iou(a, BBox(5, 0, 14, 9)) == pytest.approx(50 / 150, abs=1e-15)

    def test_iou_matches_pixel_count(self, rng):
        for _ in range(200):
            (x1, x2), (y1, y2), (bx1, bx2), (by1, by2) = (sorted(rng.integers(0, 15, 2)) for _ in range(4))
            a, b = BBox(x1, y1, x2, y2), BBox(bx1, by1, bx2, by2)
            pa = {(y, x) for y in range(a.y1, a.y2 + 1) for x in range(a.x1, a.x2 + 1)}
            pb = {(y, x) for y in range(b.y1, b.y2 + 1) for x in range(b.x1, b.x2 + 1)}
            assert bbox_iou(a, b) == pytest.approx(iou(pa, pb), abs=1e-15)
            assert bbox_iou(a, b) == bbox_iou(b, a)

    def test_l1_examples(self):
        assert bbox_l1(BBox(0, 0, 10, 10), BBox(0, 0, 10, 10)) == 0.0
        assert bbox_l1(BBox(0, 0, 10, 10), BBox(4, 4, 14, 14)) == 4.0
        assert bbox_l1(BBox(0, 0, 10, 10), BBox(0, 0, 10, 30)) == 5.0

    def test_point_l1_examples(self):
        assert point_l1(LabeledPoint(5, 5), LabeledPoint(5, 5)) == 0
        assert point_l1(LabeledPoint(0, 0), LabeledPoint(3, 4)) == 7
        assert point_l1(LabeledPoint(10, 2, 0), LabeledPoint(2, 10, 1)) == 16

    @pytest.mark.parametrize("args", [(3, 0, 2, 5), (0, 4, 1, 3), (-1, 0, 2, 2)])
    def test_invalid_boxes(self, args):
        with pytest.raises(ValueError):
            BBox(*args)

    def test_box_requires_ints(self):
        with pytest.raises(TypeError):
            BBox(0.5, 0, 1, 1)

    def test_point_label(self):
        with pytest.raises(ValueError):
            LabeledPoint(1, 1, 2)


class TestMaskCodec:
    def test_canonical_runs(self):
        m = mask_from_pixels(2, 3, [(0, 0), (1, 2)])
        assert m.runs == (0, 1, 4, 1)
        assert m.to_json() == {"height": 2, "width": 3, "runs": [0, 1, 4, 1]}
        assert BinaryMask.empty(2, 2).runs == (4,)

    @given(bitmaps)
    @settings(max_examples=150, deadline=None)
    def test_roundtrip_property(self, bits):
        m = BinaryMask(bits)
        assert list(m.runs) == runs_of(bits.ravel().tolist())
        back = BinaryMask.from_json(json.loads(json.dumps(m.to_json())))
        assert back == m and np.array_equal(back.bits, bits)

    @pytest.mark.parametrize("obj", [
        {"height": 2, "width": 2, "runs": [1, 2]},
        {"height": 2, "width": 2, "runs": [1, 0, 3]},
        {"height": 2, "width": 2, "runs": [-1, 5]},
        {"height": 2, "width": 2, "runs": []},
        {"height": 2, "width": 2},
        {"height": 2.0, "width": 2, "runs": [4]},
        [4],
    ])
    def test_rejects_bad_json(self, obj):
        with pytest.raises(MaskFormatError):
            BinaryMask.from_json(obj)

    def test_trailing_zero_run_allowed(self):
        assert BinaryMask.from_runs(1, 3, [1, 2, 0]).area == 2

    def test_immutable(self):
        m = BinaryMask.empty(2, 2)
        with pytest.raises(ValueError):
            m.bits[0, 0] = True

    def test_files_and_archives(self, tmp_path):
        m = mask_from_pixels(3, 4, [(1, 1), (2, 3)])
        write_mask(tmp_path / "a.mask.json", m)
        assert read_mask(tmp_path / "a.mask.json") == m
        write_mask_archive(tmp_path / "arch", [m, BinaryMask.empty(3, 4)])
        assert sorted(p.name for p in (tmp_path / "arch").iterdir()) == ["00000.mask.json", "00001.mask.json"]
        arch = read_mask_archive(tmp_path / "arch")
        assert arch[0] == m and arch[1].is_empty()

    def test_bad_file_names_path(self, tmp_path):
        p = tmp_path / "bad.mask.json"
        p.write_text('{"height": 2, "width": 2, "runs": [9]}')
        with pytest.raises(MaskFormatError) as info:
            read_mask(p)
        assert str(p) in str(info.value)


class TestMaskMeasures:
    def test_bbox_examples(self):
        assert mask_to_bbox(mask_from_pixels(10, 10, [(7, 3)])) == BBox(3, 7, 3, 7)
        assert mask_to_bbox(BinaryMask(np.ones((4, 4), bool))) == BBox(0, 0, 3, 3)
        assert mask_to_bbox(mask_from_pixels(10, 10, [(1, 1), (2, 5)])) == BBox(1, 1, 5, 2)
        with pytest.raises(EmptyMask):
            mask_to_bbox(BinaryMask.empty(3, 3))

    @given(bitmaps)
    @settings(max_examples=100, deadline=None)
    def test_bbox_tight(self, bits):
        if not bits.any():
            return
        b = mask_to_bbox(BinaryMask(bits))
        fg = pixels(bits)
        assert all(b.x1 <= c <= b.x2 and b.y1 <= r <= b.y2 for r, c in fg)
        assert any(c == b.x1 for _, c in fg) and any(c == b.x2 for _, c in fg)
        assert any(r == b.y1 for r, _ in fg) and any(r == b.y2 for r, _ in fg)

    def test_centroid_examples(self):
        assert mask_centroid(BinaryMask(np.ones((3, 3), bool))) == LabeledPoint(1, 1, 1)
        assert mask_centroid(mask_from_pixels(12, 12, [(9, 4)])) == LabeledPoint(4, 9, 1)
        assert mask_centroid(mask_from_pixels(3, 3, [(0, 0), (0, 1), (1, 0)])) == LabeledPoint(0, 0, 1)

    def test_centroid_snaps_on_ring(self):
        bits = np.zeros((9, 9), bool)
        bits[1:8, 1:8] = True
        bits[2:7, 2:7] = False
        c = mask_centroid(BinaryMask(bits))
        assert bits[c.y, c.x]
        assert (c.x, c.y) == centroid(pixels(bits))

    @given(bitmaps)
    @settings(max_examples=150, deadline=None)
    def test_centroid_matches_oracle(self, bits):
        if not bits.any():
            return
        c = mask_centroid(BinaryMask(bits))
        assert bits[c.y, c.x] and c.label == 1
        assert (c.x, c.y) == centroid(pixels(bits))

    def test_distance_examples(self):
        m = mask_from_pixels(10, 10, [(0, 5)])
        assert signed_distance_to_masks(LabeledPoint(0, 0, 0), [m]) == 5
        assert signed_distance_to_masks(LabeledPoint(5, 0, 0), [m]) == 0
        a = mask_from_pixels(10, 10, [(0, 0)])
        b = mask_from_pixels(10, 10, [(6, 6)])
        assert signed_distance_to_masks(LabeledPoint(3, 0, 0), [a, b]) == 3
        assert signed_distance_to_masks(LabeledPoint(3, 3, 0), [a, b]) == 6

    def test_distance_matches_oracle(self, rng):
        for _ in range(100):
            masks = [BinaryMask(rng.random((10, 13)) < 0.08) for _ in range(int(rng.integers(1, 4)))]
            if any(m.is_empty() for m in masks):
                continue
            x, y = int(rng.integers(0, 13)), int(rng.integers(0, 10))
            want = min(min_manhattan((x, y), pixels(m.bits)) for m in masks)
            assert signed_distance_to_masks(LabeledPoint(x, y, 0), masks) == want

    def test_distance_errors(self):
        m = mask_from_pixels(4, 4, [(1, 1)])
        with pytest.raises(OutOfBounds):
            signed_distance_to_masks(LabeledPoint(4, 0, 0), [m])
        with pytest.raises(EmptyMask):
            signed_distance_to_masks(LabeledPoint(0, 0, 0), [m, BinaryMask.empty(4, 4)])
        with pytest.raises(DimensionMismatch):
            signed_distance_to_masks(LabeledPoint(0, 0, 0), [m, mask_from_pixels(5, 4, [(0, 0)])])

    def test_iou_examples(self):
        a = mask_from_pixels(1, 2, [(0, 0)])
        b = mask_from_pixels(1, 2, [(0, 0), (0, 1)])
        assert mask_iou(a, a) == 1.0
        assert mask_iou(a, mask_from_pixels(1, 2, [(0, 1)])) == 0.0
        assert mask_iou(a, b) == 0.5
        assert mask_iou(BinaryMask.empty(2, 2), BinaryMask.empty(2, 2)) == 1.0
        with pytest.raises(DimensionMismatch):
            mask_iou(a, BinaryMask.empty(2, 1))

    @given(bitmaps)
    @settings(max_examples=60, deadline=None)
    def test_iou_symmetric_against_oracle(self, bits):
        other = np.roll(bits, 1, axis=1)
        a, b = BinaryMask(bits), BinaryMask(other)
        assert mask_iou(a, b) == mask_iou(b, a) == pytest.approx(iou(pixels(bits), pixels(other)))

    def test_union(self):
        a = mask_from_pixels(2, 2, [(0, 0)])
        b = mask_from_pixels(2, 2, [(1, 1)])
        assert mask_union([a, b]) == (a | b)
        assert mask_union([], (2, 2)).is_empty()
        with pytest.raises(ValueError):
            mask_union([])
