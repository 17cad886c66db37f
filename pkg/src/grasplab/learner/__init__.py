from grasplab.learner.nets import ConvLayer, DenseLayer, GraspNet
from grasplab.learner.replay import ReplayBuffer
from grasplab.learner.checkpoint import load_checkpoint, save_checkpoint
from grasplab.learner.ddpg import (
    DDPGAgent,
    EvalReport,
    actor_update,
    add_exploration_noise,
    bellman_target,
    critic_update,
    evaluate,
    soft_update,
    train,
)

__all__ = [
    "ConvLayer",
    "DDPGAgent",
    "DenseLayer",
    "EvalReport",
    "GraspNet",
    "ReplayBuffer",
    "actor_update",
    "add_exploration_noise",
    "bellman_target",
    "critic_update",
    "evaluate",
    "load_checkpoint",
    "save_checkpoint",
    "soft_update",
    "train",
]
