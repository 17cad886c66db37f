"""Grasp-success detection by differencing two depth images.

After a grasp attempt the held object is dropped and the scene is imaged
again; a failed grasp leaves the scene untouched so the two images match
pixel for pixel, while a successful one moves the object and changes many
pixels.  Thresholds: a pixel counts as changed when its absolute depth
difference exceeds ``pixel_delta``; the detector fires when at least
``count_threshold`` pixels changed.
"""

import numpy as np

from grasplab.errors import DomainError
from grasplab.vision.depth import DepthImage

# Defaults calibrated on rendered drop-test pairs: no false positives on
# identical renders, and the smallest object (a 12 mm coin) still flips well
# over 50 pixels when seen from the hand camera.
DEFAULT_PIXEL_DELTA_M = 0.01
DEFAULT_COUNT_THRESHOLD = 50


def changed_pixel_count(before: DepthImage, after: DepthImage,
                        pixel_delta=DEFAULT_PIXEL_DELTA_M):
    """Number of pixels whose depth moved by more than ``pixel_delta``."""
    if (before.width, before.height) != (after.width, after.height):
        raise DomainError(
            f"image sizes differ: {(before.width, before.height)} vs "
            f"{(after.width, after.height)}")
    return int(np.count_nonzero(np.abs(before.data - after.data) > pixel_delta))


def image_subtraction_success(before: DepthImage, after: DepthImage,
                              pixel_delta=DEFAULT_PIXEL_DELTA_M,
                              count_threshold=DEFAULT_COUNT_THRESHOLD):
    """True when enough pixels changed between the two scene images."""
    return changed_pixel_count(before, after, pixel_delta) >= count_threshold
