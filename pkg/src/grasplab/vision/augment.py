"""Dataset expansion through random crops, zooms and rotations.

Each source sample (one depth image plus positive/negative grasp
rectangles) is expanded into ``multiplier`` augmented samples.  A candidate
transform is accepted only when at least one positive rectangle lands fully
inside the output frame; after a bounded number of rejected draws the
sample falls back to the identity view, and if even that shows no positive
rectangle the slot is skipped with a signal.  The draw sequence is fixed,
so one seed always produces the same dataset.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from grasplab.errors import ConfigError, DomainError, FormatError
from grasplab.vision.depth import DepthImage
from grasplab.vision.pgm import read_pgm16, write_pgm16
from grasplab.vision.rects import (
    NEGATIVE,
    POSITIVE,
    GraspRectangle,
    SimilarityTransform,
    read_rect_file,
    transform_sample,
    write_rect_file,
)

MAX_TRANSFORM_RETRIES = 20


class SampleSkipped(Exception):
    """No admissible view of this source exists, not even the identity one."""


def _range_pair(value, name):
    if isinstance(value, (int, float)):
        value = (float(value), float(value))
    lo, hi = (float(value[0]), float(value[1]))
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
        raise ConfigError(f"{name} range must be (lo, hi) with lo <= hi, got {value!r}")
    return lo, hi


@dataclass(frozen=True)
class AugmentationSpec:
    """Parameter ranges of the expansion; defaults stretch 885 sources past 140k."""

    crop_fraction: tuple = (0.75, 1.0)  # fraction of the source frame kept
    zoom: tuple = (0.8, 1.2)
    rotation_deg: tuple = (-180.0, 180.0)
    multiplier: int = 160
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "crop_fraction", _range_pair(self.crop_fraction, "crop_fraction"))
        object.__setattr__(self, "zoom", _range_pair(self.zoom, "zoom"))
        object.__setattr__(self, "rotation_deg", _range_pair(self.rotation_deg, "rotation_deg"))
        if self.multiplier < 1:
            raise ConfigError(f"multiplier must be >= 1, got {self.multiplier}")
        lo, hi = self.crop_fraction
        if lo <= 0 or hi > 1.0:
            raise ConfigError("crop_fraction must lie in (0, 1]")
        if self.zoom[0] <= 0:
            raise ConfigError("zoom must be > 0")

    @property
    def is_identity(self):
        return (self.crop_fraction == (1.0, 1.0) and self.zoom == (1.0, 1.0)
                and self.rotation_deg == (0.0, 0.0))


@dataclass
class DatasetSample:
    """One (image, annotations) record, keyed by its file stem."""

    sample_id: str
    image: DepthImage
    positives: list = field(default_factory=list)
    negatives: list = field(default_factory=list)

    def rectangles(self):
        return list(self.positives) + list(self.negatives)


def draw_transform(rng, spec: AugmentationSpec, width, height):
    """One random crop/zoom/rotation; the draw order is part of the format."""
    f = float(rng.uniform(*spec.crop_fraction))
    out_w = max(1, int(round(width * f)))
    out_h = max(1, int(round(height * f)))
    ox = float(rng.uniform(0.0, width - out_w)) if width > out_w else 0.0
    oy = float(rng.uniform(0.0, height - out_h)) if height > out_h else 0.0
    angle = float(rng.uniform(*spec.rotation_deg))
    zoom = float(rng.uniform(*spec.zoom))
    anchor = (ox + (out_w - 1) / 2.0, oy + (out_h - 1) / 2.0)
    out_anchor = ((out_w - 1) / 2.0, (out_h - 1) / 2.0)
    return SimilarityTransform(angle, zoom, anchor, out_anchor, out_w, out_h)


def _admissible(rects, width, height):
    pos = [r for r in rects if r.label == POSITIVE]
    if not pos:
        return True  # nothing to keep in frame
    return any(r.is_valid() and r.inside_frame(width, height) for r in pos)


def augment_one(sample: DatasetSample, rng, spec: AugmentationSpec, index):
    """Produce the ``index``-th augmented view of ``sample``."""
    src = sample.image
    rects = sample.rectangles()
    chosen = None
    for _ in range(MAX_TRANSFORM_RETRIES):
        t = draw_transform(rng, spec, src.width, src.height)
        moved = [r.transformed(t) for r in rects]
        if _admissible(moved, t.out_width, t.out_height):
            chosen = t
            break
    if chosen is None:
        ident = SimilarityTransform.identity(src.width, src.height)
        if not _admissible([r.transformed(ident) for r in rects], src.width, src.height):
            raise SampleSkipped(sample.sample_id)
        chosen = ident
    image, moved = transform_sample(src, rects, chosen)
    return DatasetSample(
        sample_id=f"{sample.sample_id}_{index:03d}",
        image=image,
        positives=[r for r in moved if r.label == POSITIVE],
        negatives=[r for r in moved if r.label == NEGATIVE],
    ), chosen


def iter_augmented(sources, spec: AugmentationSpec):
    """Yield ``multiplier`` views per source, in source order; skips are silent
    to the stream but tallied on the returned generator via StopIteration value.
    """
    if not sources:
        raise DomainError("augmentation needs at least one source sample")
    rng = np.random.default_rng(spec.seed)
    skipped = 0
    for sample in sources:
        for j in range(spec.multiplier):
            try:
                out, _ = augment_one(sample, rng, spec, j)
            except SampleSkipped:
                skipped += 1
                continue
            yield out
    return skipped


def load_dataset(root):
    """Read all ``<id>.depth.pgm`` samples (with sibling rect files) under root."""
    root = Path(root)
    if not root.is_dir():
        raise ConfigError(f"dataset directory not found: {root}")
    samples = []
    for pgm_path in sorted(root.glob("*.depth.pgm")):
        stem = pgm_path.name[: -len(".depth.pgm")]
        image = read_pgm16(pgm_path)
        pos_path = root / f"{stem}.cpos.txt"
        neg_path = root / f"{stem}.cneg.txt"
        positives = [GraspRectangle(v, POSITIVE) for v in read_rect_file(pos_path)] \
            if pos_path.is_file() else []
        negatives = [GraspRectangle(v, NEGATIVE) for v in read_rect_file(neg_path)] \
            if neg_path.is_file() else []
        samples.append(DatasetSample(stem, image, positives, negatives))
    if not samples:
        raise ConfigError(f"no *.depth.pgm samples under {root}")
    return samples


def write_sample(root, sample: DatasetSample):
    root = Path(root)
    write_pgm16(root / f"{sample.sample_id}.depth.pgm", sample.image)
    write_rect_file(root / f"{sample.sample_id}.cpos.txt", sample.positives)
    write_rect_file(root / f"{sample.sample_id}.cneg.txt", sample.negatives)


def build_augmented_dataset(sources, spec: AugmentationSpec, out_dir):
    """Expand ``sources`` into ``out_dir`` and return the count manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    emitted = 0
    gen = iter_augmented(sources, spec)
    skipped = 0
    while True:
        try:
            sample = next(gen)
        except StopIteration as stop:
            skipped = stop.value or 0
            break
        write_sample(out, sample)
        emitted += 1
    manifest = {
        "sources": len(sources),
        "multiplier": spec.multiplier,
        "emitted": emitted,
        "skipped": skipped,
        "seed": spec.seed,
        "crop_fraction": list(spec.crop_fraction),
        "zoom": list(spec.zoom),
        "rotation_deg": list(spec.rotation_deg),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest
