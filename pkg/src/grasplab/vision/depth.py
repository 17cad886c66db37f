"""Depth rendering by ray casting against analytic primitives.

The camera looks straight down (-z) from its position, rotated about the
vertical axis by ``yaw``; each pixel records the Euclidean distance along
its ray to the nearest surface, or ``far_plane`` when nothing is hit.

Both kernel implementations (numba loops, vectorized numpy) consume the
same packed primitive rows produced by :mod:`grasplab.objects`.
"""

import math
from dataclasses import dataclass

import numpy as np

from grasplab import accel
from grasplab.accel import njit
from grasplab.errors import ConfigError, DomainError
from grasplab.objects import (
    PRIM_BOX,
    PRIM_ELLIPSOID,
    PRIM_HCYL,
    PRIM_ROW_LEN,
    PRIM_SPHERE,
    PRIM_VCYL,
    pack_scene,
)


@dataclass(frozen=True)
class DepthImage:
    """Row-major depth map in meters; index [row, col] = [v, u]."""

    width: int
    height: int
    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.data, dtype=np.float64))
        if arr.shape != (self.height, self.width):
            raise DomainError(
                f"depth data shape {arr.shape} does not match {(self.height, self.width)}")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise DomainError("depth values must be finite and non-negative")
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_array(cls, data):
        data = np.asarray(data, dtype=np.float64)
        return cls(width=data.shape[1], height=data.shape[0], data=data)


@dataclass(frozen=True)
class CameraModel:
    """Downward-looking pinhole camera."""

    width: int = 64
    height: int = 64
    fov_deg: float = 60.0
    position: tuple = (0.0, 0.0, 0.5)
    yaw: float = 0.0
    far_plane: float = 2.0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ConfigError("camera image size must be positive")
        if not 0.0 < self.fov_deg < 180.0:
            raise ConfigError(f"fov_deg must lie in (0, 180), got {self.fov_deg}")
        if self.far_plane <= 0:
            raise ConfigError("far_plane must be > 0")

    @property
    def focal_px(self):
        f = (self.width / 2.0) / math.tan(math.radians(self.fov_deg) / 2.0)
        if not (math.isfinite(f) and f > 0):
            raise ConfigError("degenerate camera: focal length is not positive")
        return f

    def ray_directions(self):
        """Unit ray directions, shape (height, width, 3), world frame."""
        f = self.focal_px
        u = (np.arange(self.width) + 0.5) - self.width / 2.0
        v = (np.arange(self.height) + 0.5) - self.height / 2.0
        uu, vv = np.meshgrid(u, v)
        # camera frame: x right, y down the image, z along view axis (down)
        dx_c = uu / f
        dy_c = vv / f
        dz_c = np.ones_like(dx_c)
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        # view axis is -z; camera x maps to world (c, s), y to (-s, c) flipped by the downward look
        dirs = np.empty((self.height, self.width, 3))
        dirs[..., 0] = c * dx_c - s * dy_c
        dirs[..., 1] = s * dx_c + c * dy_c
        dirs[..., 2] = -dz_c
        dirs /= np.linalg.norm(dirs, axis=2, keepdims=True)
        return dirs


@njit(cache=True)
def _cast_rays_kernel(origin, dirs, prims, far):
    h, w = dirs.shape[0], dirs.shape[1]
    n = prims.shape[0]
    out = np.full((h, w), far)
    ox, oy, oz = origin[0], origin[1], origin[2]
    for i in range(h):
        for j in range(w):
            dx, dy, dz = dirs[i, j, 0], dirs[i, j, 1], dirs[i, j, 2]
            best = far
            for k in range(n):
                code = int(prims[k, 0])
                cx, cy, cz = prims[k, 1], prims[k, 2], prims[k, 3]
                yaw = prims[k, 4]
                p0, p1, p2 = prims[k, 5], prims[k, 6], prims[k, 7]
                px, py, pz = ox - cx, oy - cy, oz - cz
                t = -1.0
                if code == PRIM_SPHERE:
                    b = px * dx + py * dy + pz * dz
                    c = px * px + py * py + pz * pz - p0 * p0
                    disc = b * b - c
                    if disc >= 0.0:
                        root = math.sqrt(disc)
                        t0 = -b - root
                        if t0 > 1e-9:
                            t = t0
                elif code == PRIM_VCYL:
                    a = dx * dx + dy * dy
                    hh = p1
                    if a > 1e-16:
                        b = px * dx + py * dy
                        c = px * px + py * py - p0 * p0
                        disc = b * b - a * c
                        if disc >= 0.0:
                            t0 = (-b - math.sqrt(disc)) / a
                            if t0 > 1e-9 and abs(pz + t0 * dz) <= hh:
                                t = t0
                    # end caps
                    if dz != 0.0:
                        for sgn in (-1.0, 1.0):
                            tc = (sgn * hh - pz) / dz
                            if tc > 1e-9 and (t < 0.0 or tc < t):
                                qx = px + tc * dx
                                qy = py + tc * dy
                                if qx * qx + qy * qy <= p0 * p0:
                                    t = tc
                elif code == PRIM_HCYL:
                    cyaw, syaw = math.cos(yaw), math.sin(yaw)
                    # into object frame: rotate by -yaw about z
                    lx = cyaw * px + syaw * py
                    ly = -syaw * px + cyaw * py
                    ldx = cyaw * dx + syaw * dy
                    ldy = -syaw * dx + cyaw * dy
                    a = ldy * ldy + dz * dz
                    if a > 1e-16:
                        b = ly * ldy + pz * dz
                        c = ly * ly + pz * pz - p0 * p0
                        disc = b * b - a * c
                        if disc >= 0.0:
                            t0 = (-b - math.sqrt(disc)) / a
                            if t0 > 1e-9 and abs(lx + t0 * ldx) <= p1:
                                t = t0
                    if ldx != 0.0:
                        for sgn in (-1.0, 1.0):
                            tc = (sgn * p1 - lx) / ldx
                            if tc > 1e-9 and (t < 0.0 or tc < t):
                                qy = ly + tc * ldy
                                qz = pz + tc * dz
                                if qy * qy + qz * qz <= p0 * p0:
                                    t = tc
                elif code == PRIM_BOX:
                    cyaw, syaw = math.cos(yaw), math.sin(yaw)
                    lx = cyaw * px + syaw * py
                    ly = -syaw * px + cyaw * py
                    ldx = cyaw * dx + syaw * dy
                    ldy = -syaw * dx + cyaw * dy
                    tmin = -1.0e30
                    tmax = 1.0e30
                    ok = True
                    for ax in range(3):
                        if ax == 0:
                            o_, d_, e_ = lx, ldx, p0
                        elif ax == 1:
                            o_, d_, e_ = ly, ldy, p1
                        else:
                            o_, d_, e_ = pz, dz, p2
                        if abs(d_) < 1e-16:
                            if abs(o_) > e_:
                                ok = False
                                break
                        else:
                            t1 = (-e_ - o_) / d_
                            t2 = (e_ - o_) / d_
                            if t1 > t2:
                                t1, t2 = t2, t1
                            if t1 > tmin:
                                tmin = t1
                            if t2 < tmax:
                                tmax = t2
                            if tmin > tmax:
                                ok = False
                                break
                    if ok and tmax > 1e-9:
                        t = tmin if tmin > 1e-9 else tmax
                elif code == PRIM_ELLIPSOID:
                    cyaw, syaw = math.cos(yaw), math.sin(yaw)
                    lx = (cyaw * px + syaw * py) / p0
                    ly = (-syaw * px + cyaw * py) / p1
                    lz = pz / p2
                    ldx = (cyaw * dx + syaw * dy) / p0
                    ldy = (-syaw * dx + cyaw * dy) / p1
                    ldz = dz / p2
                    a = ldx * ldx + ldy * ldy + ldz * ldz
                    b = lx * ldx + ly * ldy + lz * ldz
                    c = lx * lx + ly * ly + lz * lz - 1.0
                    disc = b * b - a * c
                    if disc >= 0.0 and a > 1e-16:
                        t0 = (-b - math.sqrt(disc)) / a
                        if t0 > 1e-9:
                            t = t0
                if 0.0 < t < best:
                    best = t
            out[i, j] = best
    return out


def _finite_cylinder_t(ax_o, ax_d, r1o, r1d, r2o, r2d, radius, half_len, eps=1e-9):
    """Nearest hit with a capped cylinder given axis/radial ray components."""
    a = r1d * r1d + r2d * r2d
    b = r1o * r1d + r2o * r2d
    c = r1o * r1o + r2o * r2o - radius * radius
    disc = b * b - a * c
    safe_a = np.where(a > 1e-16, a, 1.0)
    t = np.where((disc >= 0.0) & (a > 1e-16),
                 (-b - np.sqrt(np.maximum(disc, 0.0))) / safe_a, -1.0)
    along = ax_o + t * ax_d
    t = np.where((t > eps) & (np.abs(along) <= half_len), t, -1.0)
    for sgn in (-1.0, 1.0):  # end caps
        par = np.abs(ax_d) < 1e-16
        safe = np.where(par, 1.0, ax_d)
        tc = np.where(par, -1.0, (sgn * half_len - ax_o) / safe)
        q1 = r1o + tc * r1d
        q2 = r2o + tc * r2d
        okc = (tc > eps) & (q1 * q1 + q2 * q2 <= radius * radius)
        t = np.where(okc & ((t < 0.0) | (tc < t)), tc, t)
    return t


def _cast_rays_numpy(origin, dirs, prims, far):
    """Vectorized fallback: per primitive, intersect all rays at once."""
    h, w = dirs.shape[:2]
    d = dirs.reshape(-1, 3)
    best = np.full(d.shape[0], far)
    o = np.asarray(origin, dtype=np.float64)
    eps = 1e-9
    for k in range(prims.shape[0]):
        code = int(prims[k, 0])
        center = prims[k, 1:4]
        yaw = prims[k, 4]
        p0, p1, p2 = prims[k, 5], prims[k, 6], prims[k, 7]
        p = o - center
        cy, sy = math.cos(yaw), math.sin(yaw)
        if code == PRIM_SPHERE:
            b = d @ p
            c = p @ p - p0 * p0
            disc = b * b - c
            hit = disc >= 0.0
            t = np.where(hit, -b - np.sqrt(np.maximum(disc, 0.0)), -1.0)
        elif code == PRIM_VCYL:
            t = _finite_cylinder_t(p[2], d[:, 2], p[0], d[:, 0], p[1], d[:, 1],
                                   p0, p1, eps)
        elif code == PRIM_HCYL:
            lx = cy * p[0] + sy * p[1]
            ly = -sy * p[0] + cy * p[1]
            ldx = cy * d[:, 0] + sy * d[:, 1]
            ldy = -sy * d[:, 0] + cy * d[:, 1]
            t = _finite_cylinder_t(lx, ldx, ly, ldy, p[2], d[:, 2], p0, p1, eps)
        elif code == PRIM_BOX:
            lo = np.array([cy * p[0] + sy * p[1], -sy * p[0] + cy * p[1], p[2]])
            ld = np.stack([cy * d[:, 0] + sy * d[:, 1],
                           -sy * d[:, 0] + cy * d[:, 1], d[:, 2]], axis=1)
            ext = np.array([p0, p1, p2])
            tmin = np.full(d.shape[0], -1.0e30)
            tmax = np.full(d.shape[0], 1.0e30)
            ok = np.ones(d.shape[0], dtype=bool)
            for ax in range(3):
                d_ = ld[:, ax]
                par = np.abs(d_) < 1e-16
                ok &= ~(par & (abs(lo[ax]) > ext[ax]))
                safe = np.where(par, 1.0, d_)
                t1 = (-ext[ax] - lo[ax]) / safe
                t2 = (ext[ax] - lo[ax]) / safe
                lo_t = np.minimum(t1, t2)
                hi_t = np.maximum(t1, t2)
                tmin = np.where(par, tmin, np.maximum(tmin, lo_t))
                tmax = np.where(par, tmax, np.minimum(tmax, hi_t))
            ok &= (tmin <= tmax) & (tmax > eps)
            t = np.where(ok, np.where(tmin > eps, tmin, tmax), -1.0)
        elif code == PRIM_ELLIPSOID:
            lo = np.array([(cy * p[0] + sy * p[1]) / p0,
                           (-sy * p[0] + cy * p[1]) / p1, p[2] / p2])
            ld = np.stack([(cy * d[:, 0] + sy * d[:, 1]) / p0,
                           (-sy * d[:, 0] + cy * d[:, 1]) / p1, d[:, 2] / p2], axis=1)
            a = np.einsum("ij,ij->i", ld, ld)
            b = ld @ lo
            c = lo @ lo - 1.0
            disc = b * b - a * c
            safe_a = np.where(a > 1e-16, a, 1.0)
            t = np.where((disc >= 0.0) & (a > 1e-16),
                         (-b - np.sqrt(np.maximum(disc, 0.0))) / safe_a, -1.0)
        else:
            raise DomainError(f"unknown primitive code {code}")
        valid = t > eps
        best = np.where(valid & (t < best), t, best)
    return best.reshape(h, w)


def render_depth(scene_objects, camera: CameraModel) -> DepthImage:
    """Render the nearest-surface distance per pixel; empty scenes are all far."""
    prims = pack_scene(scene_objects) if not isinstance(scene_objects, np.ndarray) \
        else np.asarray(scene_objects, dtype=np.float64)
    if prims.ndim != 2 or (prims.size and prims.shape[1] != PRIM_ROW_LEN):
        raise DomainError("packed scene must have PRIM_ROW_LEN columns")
    dirs = camera.ray_directions()
    origin = np.asarray(camera.position, dtype=np.float64)
    if accel.NUMBA_ENABLED:
        data = _cast_rays_kernel(origin, dirs, prims, float(camera.far_plane))
    else:
        data = _cast_rays_numpy(origin, dirs, prims, float(camera.far_plane))
    return DepthImage(camera.width, camera.height, data)
