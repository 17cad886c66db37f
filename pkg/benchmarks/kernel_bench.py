#!/usr/bin/env python3
"""Time the hot kernels on both backends: numba @njit versus pure numpy.

Covers the two loops that dominate runtime: per-pixel ray casting for depth
rendering, and the convolution passes of the learner networks.  The numba
path additionally pays a one-time JIT compile, excluded from the timings.

Run:  python benchmarks/kernel_bench.py [--repeats N]
"""

import argparse
import time

import numpy as np

from grasplab import accel
from grasplab.learner.nets import (
    _conv_backward_kernel,
    _conv_backward_numpy,
    _conv_forward_kernel,
    _conv_forward_numpy,
)
from grasplab.objects import pack_scene, sample_object
from grasplab.vision.depth import CameraModel, _cast_rays_kernel, _cast_rays_numpy


def timeit(fn, *args, repeats):
    fn(*args)  # warm-up (JIT compile and caches)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats * 1000.0


def bench_raycast(repeats):
    rng = np.random.default_rng(0)
    objs = [sample_object(s, rng, spawn_radius=0.06)
            for s in ("sphere", "cylinder", "cuboid", "ellipsoid", "coin",
                      "can", "screwdriver")]
    prims = pack_scene(objs)
    rows = []
    for size in (32, 64, 128):
        cam = CameraModel(width=size, height=size, fov_deg=70.0,
                          position=(0.0, 0.0, 0.45), far_plane=2.0)
        dirs = cam.ray_directions()
        origin = np.asarray(cam.position)
        args = (origin, dirs, prims, cam.far_plane)
        t_np = timeit(_cast_rays_numpy, *args, repeats=repeats)
        if accel.NUMBA_ENABLED:
            t_nb = timeit(_cast_rays_kernel, *args, repeats=repeats)
        else:
            t_nb = float("nan")
        rows.append((f"raycast {size}x{size} ({len(prims)} prims)", t_nb, t_np))
    return rows


def bench_conv(repeats):
    rng = np.random.default_rng(1)
    cases = [
        ("conv 64x1x16x16 -> 8f", (64, 1, 16, 16), 8),
        ("conv 64x8x8x8 -> 16f", (64, 8, 8, 8), 16),
        ("conv 64x1x64x64 -> 8f", (64, 1, 64, 64), 8),
    ]
    rows = []
    for label, shape, oc in cases:
        x = rng.normal(size=shape)
        W = rng.normal(size=(oc, shape[1], 4, 4))
        b = rng.normal(size=oc)
        fwd_np = timeit(_conv_forward_numpy, x, W, b, 2, 1, repeats=repeats)
        grad = rng.normal(size=_conv_forward_numpy(x, W, b, 2, 1).shape)
        bwd_np = timeit(_conv_backward_numpy, x, W, grad, 2, 1, repeats=repeats)
        if accel.NUMBA_ENABLED:
            fwd_nb = timeit(_conv_forward_kernel, x, W, b, 2, 1, repeats=repeats)
            bwd_nb = timeit(_conv_backward_kernel, x, W, grad, 2, 1, repeats=repeats)
        else:
            fwd_nb = bwd_nb = float("nan")
        rows.append((f"{label} fwd", fwd_nb, fwd_np))
        rows.append((f"{label} bwd", bwd_nb, bwd_np))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=30)
    args = parser.parse_args()
    print(f"active backend: {accel.backend_name()}")
    if not accel.NUMBA_ENABLED:
        print("numba disabled or unavailable; numba columns will be nan")
    rows = bench_raycast(args.repeats) + bench_conv(args.repeats)
    width = max(len(r[0]) for r in rows)
    print(f"\n{'kernel'.ljust(width)}  numba ms   numpy ms   speedup")
    for label, t_nb, t_np in rows:
        speed = t_np / t_nb if t_nb == t_nb and t_nb > 0 else float("nan")
        print(f"{label.ljust(width)}  {t_nb:8.3f}   {t_np:8.3f}   {speed:6.2f}x")


if __name__ == "__main__":
    main()
