import math

import numpy as np
import pytest

from grasplab.errors import DomainError, FormatError
from grasplab.vision.depth import DepthImage
from grasplab.vision.rects import (
    NEGATIVE,
    POSITIVE,
    GraspRectangle,
    SimilarityTransform,
    read_rect_file,
    resample_nearest,
    transform_sample,
    write_rect_file,
)


def random_rectangle(rng, frame=64):
    cx, cy = rng.uniform(10, frame - 10, size=2)
    w, h = rng.uniform(2, 14, size=2)
    angle = rng.uniform(-180, 180)
    label = POSITIVE if rng.uniform() < 0.5 else NEGATIVE
    return GraspRectangle.from_center(cx, cy, w, h, angle, label)


class TestRectangle:
    def test_from_center_valid(self):
        rect = GraspRectangle.from_center(10, 20, 8, 4, 33.0)
        assert rect.is_valid()
        sides = rect.side_lengths()
        assert sides[0] == pytest.approx(8) and sides[1] == pytest.approx(4)

    def test_invalid_when_corner_bent(self):
        rect = GraspRectangle.from_center(10, 20, 8, 4, 0.0)
        rect.vertices[0] += np.array([0.5, 0.0])
        assert not rect.is_valid()

    def test_nonfinite_is_invalid(self):
        rect = GraspRectangle.from_center(10, 20, 8, 4, 0.0)
        rect.vertices[2, 1] = np.nan
        assert not rect.is_valid()

    def test_label_checked(self):
        with pytest.raises(DomainError):
            GraspRectangle(np.zeros((4, 2)), label="maybe")

    def test_shape_checked(self):
        with pytest.raises(DomainError):
            GraspRectangle(np.zeros((3, 2)))


class TestRectFile:
    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.txt"
        path.write_text("")
        assert read_rect_file(path) == []

    def test_unit_square(self, tmp_path):
        path = tmp_path / "sq.txt"
        path.write_text("0 0\n1 0\n1 1\n0 1\n")
        rects = read_rect_file(path)
        assert len(rects) == 1
        assert np.array_equal(rects[0], [[0, 0], [1, 0], [1, 1], [0, 1]])

    def test_roundtrip_100_random(self, tmp_path):
        rng = np.random.default_rng(8)
        for trial in range(100):
            rects = [random_rectangle(rng).vertices for _ in range(int(rng.integers(1, 6)))]
            p1 = tmp_path / f"r{trial}a.txt"
            p2 = tmp_path / f"r{trial}b.txt"
            write_rect_file(p1, rects)
            back = read_rect_file(p1)
            write_rect_file(p2, back)
            assert p1.read_bytes() == p2.read_bytes()
            again = read_rect_file(p2)
            for a, b in zip(back, again):
                assert np.array_equal(a, b)

    def test_line_count_not_multiple_of_four(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("0 0\n1 0\n1 1\n")
        with pytest.raises(FormatError):
            read_rect_file(path)

    def test_unparsable_number_reports_line(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("0 0\n1 zero\n1 1\n0 1\n")
        with pytest.raises(FormatError) as err:
            read_rect_file(path)
        assert err.value.line == 2

    def test_wrong_token_count(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("0 0 0\n")
        with pytest.raises(FormatError):
            read_rect_file(path)

    def test_nan_vertices_parse_but_are_invalid(self, tmp_path):
        # real-world annotation files contain NaN lines; they load and are
        # filtered by validity checks downstream
        path = tmp_path / "nan.txt"
        path.write_text("NaN NaN\n1 0\n1 1\n0 1\n")
        rects = read_rect_file(path)
        assert len(rects) == 1
        assert not GraspRectangle(rects[0]).is_valid()


class TestTransforms:
    def test_identity_returns_input_unchanged(self):
        rng = np.random.default_rng(2)
        img = DepthImage.from_array(rng.uniform(0, 2, size=(32, 32)))
        rects = [random_rectangle(rng, 32) for _ in range(3)]
        ident = SimilarityTransform.identity(32, 32)
        out_img, out_rects = transform_sample(img, rects, ident)
        assert np.array_equal(out_img.data, img.data)
        for a, b in zip(out_rects, rects):
            assert np.array_equal(a.vertices, b.vertices)
            assert a.label == b.label

    def test_rotation_round_trip_within_one_pixel(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            rect = random_rectangle(rng)
            t = SimilarityTransform(rng.uniform(-180, 180), rng.uniform(0.5, 2.0),
                                    (31.5, 31.5), (31.5, 31.5), 64, 64)
            back = t.invert_points(t.apply_points(rect.vertices))
            assert np.abs(back - rect.vertices).max() < 1.0

    def test_ninety_degree_rotation_maps_center_pixel(self):
        t = SimilarityTransform(90.0, 1.0, (31.5, 31.5), (31.5, 31.5), 64, 64)
        # the anchor is a fixed point
        assert np.allclose(t.apply_points([[31.5, 31.5]]), [[31.5, 31.5]])
        moved = t.apply_points([[41.5, 31.5]])[0]
        assert moved == pytest.approx([31.5, 41.5])

    def test_zoom_doubles_side_lengths(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            rect = random_rectangle(rng)
            t = SimilarityTransform(0.0, 2.0, (32, 32), (32, 32), 64, 64)
            mapped = rect.transformed(t)
            assert np.allclose(mapped.side_lengths(), 2.0 * rect.side_lengths(),
                               rtol=1e-6)

    def test_validity_preserved_by_random_transforms(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            rect = random_rectangle(rng)
            t = SimilarityTransform(rng.uniform(-180, 180), rng.uniform(0.5, 2.0),
                                    tuple(rng.uniform(0, 64, 2)),
                                    tuple(rng.uniform(0, 64, 2)), 64, 64)
            assert rect.transformed(t).is_valid()

    def test_resample_pads_with_background(self):
        img = DepthImage.from_array(np.full((8, 8), 0.5))
        t = SimilarityTransform(0.0, 1.0, (0.0, 0.0), (4.0, 4.0), 16, 16)
        out = resample_nearest(img, t, pad_value=2.0)
        assert out.data[0, 0] == 2.0
        assert out.data[6, 6] == 0.5

    def test_depth_values_stay_in_range(self):
        rng = np.random.default_rng(6)
        img = DepthImage.from_array(rng.uniform(0, 2.0, size=(32, 32)))
        for _ in range(20):
            t = SimilarityTransform(rng.uniform(-180, 180), rng.uniform(0.5, 2.0),
                                    (15.5, 15.5), (15.5, 15.5), 32, 32)
            out = resample_nearest(img, t)
            assert out.data.min() >= 0.0
            assert out.data.max() <= img.data.max() + 1e-15
