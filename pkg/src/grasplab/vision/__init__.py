from grasplab.vision.depth import CameraModel, DepthImage, render_depth
from grasplab.vision.detector import image_subtraction_success
from grasplab.vision.rects import (
    GraspRectangle,
    SimilarityTransform,
    read_rect_file,
    transform_sample,
    write_rect_file,
)
from grasplab.vision.augment import AugmentationSpec, build_augmented_dataset, iter_augmented
from grasplab.vision.pgm import read_pgm16, write_pgm16

__all__ = [
    "AugmentationSpec",
    "CameraModel",
    "DepthImage",
    "GraspRectangle",
    "SimilarityTransform",
    "build_augmented_dataset",
    "image_subtraction_success",
    "iter_augmented",
    "read_pgm16",
    "read_rect_file",
    "render_depth",
    "transform_sample",
    "write_pgm16",
]
