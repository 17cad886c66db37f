import json

import numpy as np
import pytest

from grasplab.errors import ConfigError
from grasplab.vision.augment import (
    AugmentationSpec,
    DatasetSample,
    SampleSkipped,
    augment_one,
    build_augmented_dataset,
    iter_augmented,
    load_dataset,
    write_sample,
)
from grasplab.vision.depth import DepthImage
from grasplab.vision.rects import NEGATIVE, POSITIVE, GraspRectangle

IDENTITY = AugmentationSpec(crop_fraction=(1.0, 1.0), zoom=(1.0, 1.0),
                            rotation_deg=(0.0, 0.0), multiplier=1, seed=0)


def make_source(rng, sample_id="src0", size=32):
    depth = rng.uniform(0.2, 1.5, size=(size, size))
    pos = [GraspRectangle.from_center(size / 2 + rng.uniform(-4, 4),
                                      size / 2 + rng.uniform(-4, 4),
                                      rng.uniform(4, 8), rng.uniform(3, 6),
                                      rng.uniform(-90, 90), POSITIVE)
           for _ in range(2)]
    neg = [GraspRectangle.from_center(size / 4, size / 4, 5, 3, 10.0, NEGATIVE)]
    return DatasetSample(sample_id, DepthImage.from_array(depth), pos, neg)


class TestSpec:
    def test_defaults_reach_paper_scale(self):
        spec = AugmentationSpec()
        assert spec.multiplier == 160
        assert 885 * spec.multiplier == 141_600

    def test_bad_ranges_rejected(self):
        with pytest.raises(ConfigError):
            AugmentationSpec(crop_fraction=(0.9, 0.5))
        with pytest.raises(ConfigError):
            AugmentationSpec(multiplier=0)
        with pytest.raises(ConfigError):
            AugmentationSpec(zoom=(0.0, 1.0))
        with pytest.raises(ConfigError):
            AugmentationSpec(crop_fraction=(0.5, 1.5))


class TestAugmentation:
    def test_count_is_exactly_multiplier_times_sources(self):
        rng = np.random.default_rng(0)
        sources = [make_source(rng, f"s{i}") for i in range(7)]
        spec = AugmentationSpec(multiplier=13, seed=5)
        out = list(iter_augmented(sources, spec))
        assert len(out) == 7 * 13

    def test_identity_spec_copies_bytes(self):
        rng = np.random.default_rng(1)
        src = make_source(rng)
        out = list(iter_augmented([src], IDENTITY))
        assert len(out) == 1
        assert np.array_equal(out[0].image.data, src.image.data)
        for a, b in zip(out[0].positives, src.positives):
            assert np.array_equal(a.vertices, b.vertices)

    def test_deterministic_per_seed(self):
        rng = np.random.default_rng(2)
        sources = [make_source(rng, f"s{i}") for i in range(3)]
        spec = AugmentationSpec(multiplier=4, seed=9)
        a = list(iter_augmented(sources, spec))
        b = list(iter_augmented(sources, spec))
        assert len(a) == len(b)
        for s1, s2 in zip(a, b):
            assert s1.sample_id == s2.sample_id
            assert np.array_equal(s1.image.data, s2.image.data)
            for r1, r2 in zip(s1.rectangles(), s2.rectangles()):
                assert np.array_equal(r1.vertices, r2.vertices)

    def test_outputs_keep_a_positive_inside_and_valid(self):
        rng = np.random.default_rng(3)
        sources = [make_source(rng, f"s{i}") for i in range(4)]
        spec = AugmentationSpec(multiplier=25, seed=11)
        for sample in iter_augmented(sources, spec):
            assert any(r.is_valid() and r.inside_frame(sample.image.width,
                                                       sample.image.height)
                       for r in sample.positives)
            for r in sample.rectangles():
                assert r.is_valid()

    def test_depth_range_preserved(self):
        rng = np.random.default_rng(4)
        src = make_source(rng)
        spec = AugmentationSpec(multiplier=20, seed=3)
        top = src.image.data.max()
        for sample in iter_augmented([src], spec):
            assert sample.image.data.min() >= 0.0
            assert sample.image.data.max() <= top + 1e-12

    def test_impossible_source_skipped(self):
        rng = np.random.default_rng(5)
        depth = rng.uniform(0.2, 1.0, size=(16, 16))
        off_frame = GraspRectangle.from_center(40.0, 40.0, 6, 4, 0.0, POSITIVE)
        bad = DatasetSample("bad", DepthImage.from_array(depth), [off_frame], [])
        with pytest.raises(SampleSkipped):
            augment_one(bad, np.random.default_rng(0), IDENTITY, 0)
        skipped = yield_from_count([bad], AugmentationSpec(multiplier=3, seed=0))
        assert skipped == (0, 3)

    def test_source_without_positives_passes_through(self):
        rng = np.random.default_rng(6)
        depth = rng.uniform(0.2, 1.0, size=(16, 16))
        src = DatasetSample("neg", DepthImage.from_array(depth), [],
                            [GraspRectangle.from_center(8, 8, 4, 3, 0.0, NEGATIVE)])
        out = list(iter_augmented([src], AugmentationSpec(multiplier=2, seed=0)))
        assert len(out) == 2


def yield_from_count(sources, spec):
    gen = iter_augmented(sources, spec)
    emitted = 0
    while True:
        try:
            next(gen)
            emitted += 1
        except StopIteration as stop:
            return emitted, (stop.value or 0)


class TestDatasetIO:
    def test_write_load_roundtrip(self, tmp_path):
        rng = np.random.default_rng(7)
        src = make_source(rng, "pcd0001")
        write_sample(tmp_path, src)
        back = load_dataset(tmp_path)
        assert len(back) == 1
        assert back[0].sample_id == "pcd0001"
        assert np.abs(back[0].image.data - src.image.data).max() <= 0.0005 + 1e-12
        assert len(back[0].positives) == 2
        assert len(back[0].negatives) == 1
        assert back[0].positives[0].label == POSITIVE

    def test_build_writes_manifest_and_files(self, tmp_path):
        rng = np.random.default_rng(8)
        sources = [make_source(rng, f"pcd{i:04d}") for i in range(2)]
        spec = AugmentationSpec(multiplier=3, seed=1)
        out_dir = tmp_path / "out"
        manifest = build_augmented_dataset(sources, spec, out_dir)
        assert manifest["emitted"] == 6
        assert manifest["skipped"] == 0
        data = json.loads((out_dir / "manifest.json").read_text())
        assert data["emitted"] == 6
        assert len(list(out_dir.glob("*.depth.pgm"))) == 6
        assert len(list(out_dir.glob("*.cpos.txt"))) == 6

    def test_two_builds_same_seed_identical(self, tmp_path):
        rng = np.random.default_rng(9)
        sources = [make_source(rng, f"pcd{i:04d}") for i in range(2)]
        spec = AugmentationSpec(multiplier=4, seed=2)
        d1, d2 = tmp_path / "a", tmp_path / "b"
        build_augmented_dataset(sources, spec, d1)
        build_augmented_dataset(sources, spec, d2)
        files1 = sorted(p.name for p in d1.iterdir())
        files2 = sorted(p.name for p in d2.iterdir())
        assert files1 == files2
        for name in files1:
            assert (d1 / name).read_bytes() == (d2 / name).read_bytes()

    def test_missing_directory_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            load_dataset(tmp_path / "missing")
