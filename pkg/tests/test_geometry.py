"""Box geometry and IoU against the pixel-counting oracle."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from marginalia.geometry import BBox, iou, round_half_up, scale_box

from .oracles import pixel_iou


def boxes_in_grid(size: int = 64):
    return st.builds(
        lambda x, y, w, h, gw, gh: BBox(min(x, gw - 1), min(y, gh - 1),
                                        min(w, gw - min(x, gw - 1)),
                                        min(h, gh - min(y, gh - 1))),
        st.integers(0, size - 1), st.integers(0, size - 1),
        st.integers(1, size), st.integers(1, size),
        st.just(size), st.just(size))


class TestBBox:
    def test_rejects_nonpositive_sides(self):
        with pytest.raises(ValueError):
            BBox(0, 0, 0, 10)
        with pytest.raises(ValueError):
            BBox(0, 0, 10, -1)

    def test_rejects_negative_origin(self):
        with pytest.raises(ValueError):
            BBox(-1, 0, 5, 5)

    def test_from_corners_normalizes_order(self):
        assert BBox.from_corners(110, 220, 10, 20) == BBox(10, 20, 100, 200)

    def test_round_half_up(self):
        assert round_half_up(0.5) == 1
        assert round_half_up(1.49) == 1
        assert round_half_up(2.5) == 3


class TestIou:
    def test_identity(self):
        a = BBox(0, 0, 10, 10)
        assert iou(a, a) == 1.0

    def test_disjoint(self):
        assert iou(BBox(0, 0, 10, 10), BBox(20, 20, 5, 5)) == 0.0

    def test_quarter_overlap_matches_pixel_count(self):
        a = BBox(0, 0, 10, 10)
        b = BBox(5, 5, 10, 10)
        expected = pixel_iou(a, b, 64, 64)
        assert expected == 25 / 175
        assert iou(a, b) == expected

    def test_one_pixel_touch_is_positive(self):
        a = BBox(0, 0, 10, 10)
        b = BBox(9, 9, 10, 10)
        assert iou(a, b) > 0.0

    def test_edge_adjacent_is_zero(self):
        a = BBox(0, 0, 10, 10)
        b = BBox(10, 0, 10, 10)
        assert iou(a, b) == 0.0

    @settings(max_examples=1000, deadline=None)
    @given(boxes_in_grid(), boxes_in_grid())
    def test_symmetric(self, a, b):
        assert iou(a, b) == iou(b, a)

    @settings(max_examples=1000, deadline=None)
    @given(boxes_in_grid(), boxes_in_grid())
    def test_matches_pixel_oracle_exactly(self, a, b):
        assert iou(a, b) == pixel_iou(a, b, 64, 64)

    @settings(max_examples=300, deadline=None)
    @given(boxes_in_grid())
    def test_self_iou_is_one(self, a):
        assert iou(a, a) == 1.0


class TestScaleBox:
    def test_exact_halving(self):
        assert scale_box(BBox(100, 200, 50, 60), 0.5, 0.5, 350, 500) \
            == BBox(50, 100, 25, 30)

    def test_identity(self):
        b = BBox(3, 7, 11, 13)
        assert scale_box(b, 1.0, 1.0, 100, 100) == b

    def test_degenerate_forced_to_one(self):
        out = scale_box(BBox(10, 10, 1, 1), 0.1, 0.1, 10, 10)
        assert out.w >= 1 and out.h >= 1
        assert out.within_image(10, 10)

    @settings(max_examples=300, deadline=None)
    @given(boxes_in_grid(), st.integers(1, 200), st.integers(1, 200))
    def test_always_within_target(self, box, tw, th):
        out = scale_box(box, tw / 64, th / 64, tw, th)
        assert out.within_image(tw, th)
