"""Oriented grasp rectangles and their annotation file format.

A rectangle is four ordered (x, y) pixel vertices.  Files hold one vertex
per line as two decimals, four lines per rectangle; positive and negative
grasps live in separate sibling files, so the file itself carries no label.
Real-world annotation files occasionally contain non-finite vertices; those
parse fine and are screened out by validity checks downstream.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from grasplab.errors import DomainError, FormatError
from grasplab.vision.depth import DepthImage

SIDE_TOLERANCE_PX = 1e-3

POSITIVE = "positive"
NEGATIVE = "negative"


@dataclass
class GraspRectangle:
    """Four ordered corners of an oriented grasp box, plus its label."""

    vertices: np.ndarray
    label: str = POSITIVE

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64)
        if v.shape != (4, 2):
            raise DomainError(f"rectangle needs 4 (x, y) vertices, got shape {v.shape}")
        if self.label not in (POSITIVE, NEGATIVE):
            raise DomainError(f"label must be {POSITIVE!r} or {NEGATIVE!r}, got {self.label!r}")
        self.vertices = v

    @classmethod
    def from_center(cls, cx, cy, width, height, angle_deg=0.0, label=POSITIVE):
        """Axis set: width along the grasp axis, rotated by ``angle_deg``."""
        a = math.radians(angle_deg)
        ca, sa = math.cos(a), math.sin(a)
        hw, hh = width / 2.0, height / 2.0
        corners = np.array([[-hw, -hh], [hw, -hh], [hw, hh], [-hw, hh]])
        rot = np.array([[ca, -sa], [sa, ca]])
        return cls(corners @ rot.T + np.array([cx, cy]), label)

    def side_lengths(self):
        v = self.vertices
        return np.array([np.linalg.norm(v[(i + 1) % 4] - v[i]) for i in range(4)])

    def is_valid(self, tol=SIDE_TOLERANCE_PX):
        """Opposite sides and both diagonals equal within ``tol`` pixels."""
        v = self.vertices
        if not np.all(np.isfinite(v)):
            return False
        s = self.side_lengths()
        if abs(s[0] - s[2]) > tol or abs(s[1] - s[3]) > tol:
            return False
        d1 = np.linalg.norm(v[2] - v[0])
        d2 = np.linalg.norm(v[3] - v[1])
        return abs(d1 - d2) <= tol

    def inside_frame(self, width, height):
        """All vertices within [0, width-1] x [0, height-1]."""
        v = self.vertices
        return bool(np.all(np.isfinite(v))
                    and np.all(v[:, 0] >= 0) and np.all(v[:, 0] <= width - 1)
                    and np.all(v[:, 1] >= 0) and np.all(v[:, 1] <= height - 1))

    def transformed(self, transform):
        return GraspRectangle(transform.apply_points(self.vertices), self.label)


def read_rect_file(path):
    """Parse vertex quads from an annotation file.

    Returns a list of (4, 2) arrays.  Raises FormatError with the offending
    line number for unparsable numbers, wrong token counts, or a vertex
    count not divisible by four.
    """
    path = Path(path)
    vertices = []
    with open(path, "r") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise FormatError(f"expected 'x y', got {raw.rstrip()!r}",
                                  path=str(path), line=lineno)
            try:
                vertices.append((float(parts[0]), float(parts[1])))
            except ValueError as exc:
                raise FormatError(f"unparsable number: {exc}",
                                  path=str(path), line=lineno) from exc
    if len(vertices) % 4 != 0:
        raise FormatError(f"vertex count {len(vertices)} not divisible by 4",
                          path=str(path), line=len(vertices))
    arr = np.asarray(vertices, dtype=np.float64).reshape(-1, 4, 2)
    return [arr[i].copy() for i in range(arr.shape[0])]


def write_rect_file(path, rects):
    """Write vertex quads, one 'x y' line per vertex at 6 decimal places."""
    lines = []
    for rect in rects:
        v = rect.vertices if isinstance(rect, GraspRectangle) else np.asarray(rect, dtype=float)
        if v.shape != (4, 2):
            raise DomainError(f"each rectangle needs shape (4, 2), got {v.shape}")
        for x, y in v:
            lines.append(f"{x:.6f} {y:.6f}")
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


@dataclass(frozen=True)
class SimilarityTransform:
    """Rotation + isotropic zoom about a source anchor, then a shift.

    Maps source pixel p to output pixel ``zoom * R(angle) @ (p - anchor)
    + out_anchor``; the same map carries rectangle vertices and, inverted,
    drives nearest-neighbor image resampling.
    """

    angle_deg: float
    zoom: float
    anchor: tuple  # (x, y) in the source image
    out_anchor: tuple  # (x, y) in the output image
    out_width: int
    out_height: int

    def __post_init__(self):
        if self.zoom <= 0 or not math.isfinite(self.zoom):
            raise DomainError(f"zoom must be > 0, got {self.zoom!r}")
        if self.out_width < 1 or self.out_height < 1:
            raise DomainError("output size must be positive")

    @classmethod
    def identity(cls, width, height):
        return cls(0.0, 1.0, (0.0, 0.0), (0.0, 0.0), width, height)

    @property
    def matrix(self):
        a = math.radians(self.angle_deg)
        return self.zoom * np.array([[math.cos(a), -math.sin(a)],
                                     [math.sin(a), math.cos(a)]])

    @property
    def offset(self):
        return np.asarray(self.out_anchor, dtype=float) - self.matrix @ np.asarray(
            self.anchor, dtype=float)

    def apply_points(self, points):
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.matrix.T + self.offset

    def invert_points(self, points):
        pts = np.asarray(points, dtype=np.float64)
        inv = np.linalg.inv(self.matrix)
        return (pts - self.offset) @ inv.T


def resample_nearest(image: DepthImage, transform: SimilarityTransform, pad_value=None):
    """Resample through the inverse map with nearest-neighbor lookup.

    Nearest-neighbor keeps every output value equal to some source depth
    (interpolating across silhouettes would fabricate surfaces); pixels that
    map outside the source are filled with ``pad_value`` (default: the
    source maximum, i.e. its background).
    """
    if pad_value is None:
        pad_value = float(image.data.max()) if image.data.size else 0.0
    w, h = transform.out_width, transform.out_height
    uu, vv = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    pts = np.stack([uu.ravel(), vv.ravel()], axis=1)
    src = transform.invert_points(pts)
    ix = np.rint(src[:, 0]).astype(np.int64)
    iy = np.rint(src[:, 1]).astype(np.int64)
    inside = (ix >= 0) & (ix < image.width) & (iy >= 0) & (iy < image.height)
    out = np.full(w * h, pad_value, dtype=np.float64)
    out[inside] = image.data[iy[inside], ix[inside]]
    return DepthImage(w, h, out.reshape(h, w))


def transform_sample(image: DepthImage, rects, transform: SimilarityTransform,
                     pad_value=None):
    """Apply one similarity transform to an image and its rectangles."""
    new_image = resample_nearest(image, transform, pad_value)
    new_rects = [r.transformed(transform) for r in rects]
    return new_image, new_rects
