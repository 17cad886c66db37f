"""Parametric table-top objects shared by the environment and the renderer.

Each shape decomposes into analytic ray-castable primitives (sphere, box,
ellipsoid, vertical or horizontal cylinder).  Standing shapes rest on their
base; coins lie flat; screwdrivers lie on their side with the shaft
extending from the handle along the yaw direction.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from grasplab.config import SHAPE_NAMES
from grasplab.errors import DomainError

# Primitive type codes used in packed render rows.
PRIM_SPHERE = 0
PRIM_VCYL = 1  # vertical cylinder: params (radius, half_height)
PRIM_BOX = 2  # params (half_x, half_y, half_z), yaw applies
PRIM_ELLIPSOID = 3  # params (radius_x, radius_y, radius_z), yaw applies
PRIM_HCYL = 4  # horizontal cylinder along local +x: params (radius, half_length)

PRIM_ROW_LEN = 8  # [type, cx, cy, cz, yaw, p0, p1, p2]


# Dimension keys per shape, in canonical order.
SHAPE_DIMENSIONS = {
    "cuboid": ("size_x", "size_y", "size_z"),
    "sphere": ("radius",),
    "ellipsoid": ("radius_x", "radius_y", "radius_z"),
    "cylinder": ("radius", "height"),
    "can": ("radius", "height"),
    "coin": ("radius", "thickness"),
    "screwdriver": ("handle_radius", "handle_length", "shaft_radius", "shaft_length"),
}

# Graspable sampling ranges (meters) used by spawn_object.
SHAPE_RANGES = {
    "cuboid": {"size_x": (0.03, 0.055), "size_y": (0.03, 0.055), "size_z": (0.06, 0.12)},
    "sphere": {"radius": (0.02, 0.032)},
    "ellipsoid": {"radius_x": (0.016, 0.028), "radius_y": (0.016, 0.028),
                  "radius_z": (0.035, 0.06)},
    "cylinder": {"radius": (0.015, 0.03), "height": (0.08, 0.14)},
    "can": {"radius": (0.024, 0.034), "height": (0.09, 0.13)},
    "coin": {"radius": (0.012, 0.02), "thickness": (0.002, 0.004)},
    "screwdriver": {"handle_radius": (0.012, 0.018), "handle_length": (0.08, 0.12),
                    "shaft_radius": (0.003, 0.005), "shaft_length": (0.08, 0.12)},
}

MASS_RANGE_KG = (0.05, 0.3)


@dataclass
class ObjectPrimitive:
    """One parametric object with a world pose.

    ``position`` is the object center (grasp target point); ``yaw`` rotates
    the object about the vertical axis.
    """

    shape: str
    dimensions: dict
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    yaw: float = 0.0
    mass: float = 0.1

    def __post_init__(self):
        if self.shape not in SHAPE_NAMES:
            raise DomainError(f"unknown shape {self.shape!r}; expected one of {SHAPE_NAMES}")
        expected = SHAPE_DIMENSIONS[self.shape]
        missing = [k for k in expected if k not in self.dimensions]
        extra = [k for k in self.dimensions if k not in expected]
        if missing or extra:
            raise DomainError(
                f"{self.shape} dimensions must be exactly {expected}; "
                f"missing {missing}, unexpected {extra}")
        for k, v in self.dimensions.items():
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{self.shape}.{k} must be > 0, got {v!r}")
        if not (math.isfinite(self.mass) and self.mass > 0):
            raise DomainError(f"mass must be > 0, got {self.mass!r}")
        self.position = np.asarray(self.position, dtype=float).copy()
        if self.position.shape != (3,):
            raise DomainError("position must have 3 components")

    def dim(self, key):
        return self.dimensions[key]

    @property
    def half_height(self):
        """Vertical half-extent about the center, m."""
        d = self.dimensions
        if self.shape == "cuboid":
            return d["size_z"] / 2
        if self.shape == "sphere":
            return d["radius"]
        if self.shape == "ellipsoid":
            return d["radius_z"]
        if self.shape in ("cylinder", "can"):
            return d["height"] / 2
        if self.shape == "coin":
            return d["thickness"] / 2
        return d["handle_radius"]  # screwdriver lying on its side

    @property
    def rest_height(self):
        """Center height above the table when the object rests on it, m."""
        return self.half_height

    def grip_half_width(self, dz):
        """Half-width of the graspable cross-section at ``dz`` above center, m.

        Measures across the narrowest horizontal direction (a pinch closes
        over the smallest width); returns 0 outside the object's vertical
        extent.
        """
        d = self.dimensions
        if abs(dz) > self.half_height:
            return 0.0
        if self.shape == "sphere":
            return math.sqrt(max(d["radius"] ** 2 - dz * dz, 0.0))
        if self.shape in ("cylinder", "can", "coin"):
            return d["radius"]
        if self.shape == "cuboid":
            return min(d["size_x"], d["size_y"]) / 2
        if self.shape == "ellipsoid":
            rz = d["radius_z"]
            shrink = math.sqrt(max(1.0 - (dz / rz) ** 2, 0.0))
            return min(d["radius_x"], d["radius_y"]) * shrink
        # screwdriver: pinch across the handle barrel
        rh = d["handle_radius"]
        return math.sqrt(max(rh * rh - dz * dz, 0.0))

    @property
    def max_grip_width(self):
        """Largest pinch width the object presents anywhere, m (full width)."""
        return 2.0 * self.grip_half_width(0.0)

    def render_primitives(self):
        """Packed primitive rows for the ray caster, shape (n, PRIM_ROW_LEN)."""
        cx, cy, cz = self.position
        d = self.dimensions
        rows = []
        if self.shape == "sphere":
            rows.append([PRIM_SPHERE, cx, cy, cz, 0.0, d["radius"], 0, 0])
        elif self.shape in ("cylinder", "can", "coin"):
            rows.append([PRIM_VCYL, cx, cy, cz, 0.0, d["radius"], self.half_height, 0])
        elif self.shape == "cuboid":
            rows.append([PRIM_BOX, cx, cy, cz, self.yaw,
                         d["size_x"] / 2, d["size_y"] / 2, d["size_z"] / 2])
        elif self.shape == "ellipsoid":
            rows.append([PRIM_ELLIPSOID, cx, cy, cz, self.yaw,
                         d["radius_x"], d["radius_y"], d["radius_z"]])
        else:  # screwdriver: handle centered on the pose, shaft continues along +x
            rows.append([PRIM_HCYL, cx, cy, cz, self.yaw,
                         d["handle_radius"], d["handle_length"] / 2, 0])
            off = (d["handle_length"] + d["shaft_length"]) / 2
            sx = cx + off * math.cos(self.yaw)
            sy = cy + off * math.sin(self.yaw)
            rows.append([PRIM_HCYL, sx, sy, cz, self.yaw,
                         d["shaft_radius"], d["shaft_length"] / 2, 0])
        return np.asarray(rows, dtype=np.float64)

    def moved_to(self, position, yaw=None):
        """Copy of this object at a new pose."""
        return ObjectPrimitive(self.shape, dict(self.dimensions),
                               np.asarray(position, dtype=float),
                               self.yaw if yaw is None else yaw, self.mass)


def pack_scene(objects):
    """Stack per-object primitive rows into one array for the renderer."""
    rows = [o.render_primitives() for o in objects]
    if not rows:
        return np.zeros((0, PRIM_ROW_LEN), dtype=np.float64)
    return np.concatenate(rows, axis=0)


def sample_object(shape, rng, table_height=0.0, spawn_radius=0.05, center=(0.0, 0.0)):
    """Draw one object of ``shape`` with dimensions from its graspable range.

    Pose is uniform over a disk of ``spawn_radius`` around ``center``, resting
    on the table, with uniform yaw.  Draw order is fixed so a given rng state
    always produces the same object.
    """
    if shape not in SHAPE_NAMES:
        raise DomainError(f"unknown shape {shape!r}")
    dims = {}
    for key in SHAPE_DIMENSIONS[shape]:
        lo, hi = SHAPE_RANGES[shape][key]
        dims[key] = float(rng.uniform(lo, hi))
    mass = float(rng.uniform(*MASS_RANGE_KG))
    ang = float(rng.uniform(0.0, 2.0 * math.pi))
    rad = spawn_radius * math.sqrt(float(rng.uniform(0.0, 1.0)))
    x = center[0] + rad * math.cos(ang)
    y = center[1] + rad * math.sin(ang)
    yaw = float(rng.uniform(-math.pi, math.pi))
    obj = ObjectPrimitive(shape, dims, np.array([x, y, 0.0]), yaw, mass)
    obj.position[2] = table_height + obj.rest_height
    return obj
