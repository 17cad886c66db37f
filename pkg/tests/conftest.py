"""Shared test oracles."""

import numpy as np

from grasplab.objects import sample_object
from grasplab.vision.depth import CameraModel, render_depth

SHAPES = ("cuboid", "sphere", "ellipsoid", "cylinder", "can", "coin",
          "screwdriver")


def drop_test_pair(rng, success, width=64, height=64):
    """Render the two images of a drop test with the hand camera.

    Image (a) is taken after the grasp attempt: on success the object is in
    the hand, close below the camera; on failure it never moved.  Image (b)
    is taken after dropping: the object rests on the table either way.
    """
    shape = SHAPES[int(rng.integers(len(SHAPES)))]
    obj = sample_object(shape, rng, spawn_radius=0.05)
    cam = CameraModel(width=width, height=height, fov_deg=70.0,
                      position=(float(rng.uniform(-0.01, 0.01)),
                                float(rng.uniform(-0.01, 0.01)),
                                float(rng.uniform(0.35, 0.5))),
                      far_plane=2.0)
    resting = render_depth([obj], cam)
    if not success:
        return resting, render_depth([obj], cam)
    # a held object sits just under the hand-mounted camera
    held_z = cam.position[2] - float(rng.uniform(0.08, 0.12))
    held = obj.moved_to(np.array([cam.position[0], cam.position[1], held_z]))
    after_grasp = render_depth([held], cam)
    dropped = obj.moved_to(obj.position + np.array(
        [rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02), 0.0]))
    after_drop = render_depth([dropped], cam)
    return after_grasp, after_drop
