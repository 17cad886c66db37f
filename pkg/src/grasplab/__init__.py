"""Desk-scale grasping laboratory.

Three legs: tendon-driven finger statics for a printed prosthetic hand,
a kinematic grasping environment observed through a rendered depth camera,
and an off-policy deterministic actor-critic that learns to grasp in it.
"""

from grasplab.errors import (
    CheckpointError,
    ConfigError,
    DomainError,
    FormatError,
    StateError,
    TrainingFault,
)

__version__ = "0.1.0"

__all__ = [
    "CheckpointError",
    "ConfigError",
    "DomainError",
    "FormatError",
    "StateError",
    "TrainingFault",
    "__version__",
]
