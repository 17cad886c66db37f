"""Off-policy deterministic actor-critic over the grasping environment.

The actor maps (depth image, proprioception) to a tanh-squashed action; the
critic scores (observation, action) pairs and can be split into per-phase
networks (approach versus grasp/lift, selected by the stored closure value)
so each episode stage owns its own value estimate.  Updates are classic:
one critic regression step toward the bootstrap target, one actor ascent
step through the critic, then a soft blend of the target networks.

Everything is float64 and deterministic for a fixed seed in single-threaded
use; exploration is zero-mean Gaussian noise clipped back into bounds.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from grasplab.config import SHAPE_NAMES, EnvConfig, TrainConfig
from grasplab.errors import DomainError, TrainingFault
from grasplab.learner.checkpoint import load_checkpoint, save_checkpoint
from grasplab.learner.nets import GraspNet
from grasplab.learner.replay import ReplayBuffer
from grasplab.sim_env import ACTION_DIM, Action, Observation, default_phase_fn


def bellman_target(reward, done, gamma, q_next):
    """One-step bootstrap target, vectorized: r + gamma * (1 - done) * q'."""
    if not 0.0 < gamma <= 1.0:
        raise DomainError(f"gamma must lie in (0, 1], got {gamma}")
    reward = np.asarray(reward, dtype=np.float64)
    done = np.asarray(done, dtype=np.float64)
    q_next = np.asarray(q_next, dtype=np.float64)
    return reward + gamma * (1.0 - done) * q_next


def soft_update(target: GraspNet, online: GraspNet, tau):
    """Blend target parameters toward the online ones in place."""
    if not 0.0 <= tau <= 1.0:
        raise DomainError(f"tau must lie in [0, 1], got {tau}")
    t_params = target.parameters()
    o_params = online.parameters()
    if len(t_params) != len(o_params):
        raise DomainError("networks have different parameter counts")
    for tp, op in zip(t_params, o_params):
        if tp.shape != op.shape:
            raise DomainError(f"parameter shape mismatch: {tp.shape} vs {op.shape}")
        tp *= (1.0 - tau)
        tp += tau * op
    return target


def add_exploration_noise(action_vec, sigma, rng):
    """Per-component Gaussian noise, then re-clamp to the [-1, 1] action box."""
    if sigma < 0:
        raise DomainError(f"sigma must be >= 0, got {sigma}")
    vec = np.asarray(action_vec, dtype=np.float64)
    noisy = vec + rng.normal(0.0, sigma, size=vec.shape) if sigma > 0 else vec.copy()
    return np.clip(noisy, -1.0, 1.0)


class Optimizer:
    """SGD or Adam over a fixed list of parameter arrays."""

    def __init__(self, params, kind="adam", beta1=0.9, beta2=0.999, eps=1e-8):
        if kind not in ("adam", "sgd"):
            raise DomainError(f"unknown optimizer {kind!r}")
        self.kind = kind
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        if kind == "adam":
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]

    def step(self, params, grads, lr):
        """Descend along ``grads``; pass negated gradients to ascend."""
        if self.kind == "sgd":
            for p, g in zip(params, grads):
                p -= lr * g
            return
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for i, (p, g) in enumerate(zip(params, grads)):
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * (g * g)
            p -= lr * (self.m[i] / b1c) / (np.sqrt(self.v[i] / b2c) + self.eps)


class DDPGAgent:
    """Actor, per-phase critics, their targets, and observation preprocessing."""

    def __init__(self, actor, critics, train_cfg: TrainConfig, proprio_scale,
                 far_plane, phase_fn=None):
        self.actor = actor
        self.critics = list(critics)
        self.target_actor = actor.copy()
        self.target_critics = [c.copy() for c in self.critics]
        self.cfg = train_cfg
        self.proprio_scale = np.asarray(proprio_scale, dtype=np.float64)
        self.far_plane = float(far_plane)
        self.phase_fn = phase_fn or default_phase_fn
        self.actor_opt = Optimizer(actor.parameters(), train_cfg.optimizer)
        self.critic_opts = [Optimizer(c.parameters(), train_cfg.optimizer)
                            for c in self.critics]

    @classmethod
    def build(cls, image_hw, proprio_dim, train_cfg: TrainConfig, rng,
              proprio_scale=None, far_plane=2.0, phase_fn=None):
        h, w = image_hw
        image_shape = (1, h, w)
        actor = GraspNet.build(image_shape, proprio_dim, ACTION_DIM,
                               train_cfg.conv_channels, train_cfg.conv_kernel,
                               train_cfg.conv_stride, train_cfg.dense_units,
                               "tanh", rng)
        critics = [GraspNet.build(image_shape, proprio_dim + ACTION_DIM, 1,
                                  train_cfg.conv_channels, train_cfg.conv_kernel,
                                  train_cfg.conv_stride, train_cfg.dense_units,
                                  "linear", rng)
                   for _ in range(train_cfg.q_factoring)]
        if proprio_scale is None:
            proprio_scale = np.ones(proprio_dim)
        return cls(actor, critics, train_cfg, proprio_scale, far_plane, phase_fn)

    # observation preprocessing: nearness-coded image, rescaled proprioception
    def prep_images(self, images):
        return (self.far_plane - images) / self.far_plane

    def prep_flats(self, flats):
        return flats * self.proprio_scale

    def policy_batch(self, images, flats):
        """Normalized actions for raw observation arrays, shape (n, ACTION_DIM)."""
        out, _ = self.actor.forward(self.prep_images(images), self.prep_flats(flats))
        return out

    def policy_vec(self, obs: Observation):
        return self.policy_batch(obs.depth.data[None], obs.proprioception[None])[0]

    def actor_forward(self, obs: Observation, env_cfg: EnvConfig) -> Action:
        """Deterministic physical action for one observation."""
        return Action.from_vector(self.policy_vec(obs), env_cfg)

    def critic_forward(self, obs: Observation, action_vec, phase=None):
        """Scalar value of (observation, normalized action)."""
        vec = np.asarray(action_vec, dtype=np.float64)
        if vec.shape != (ACTION_DIM,):
            raise DomainError(f"action vector must have {ACTION_DIM} components")
        flats = np.concatenate([self.prep_flats(obs.proprioception), vec])[None]
        if phase is None:
            phase = int(self.phase_fn(obs.proprioception[None],
                                      len(self.critics))[0])
        q, _ = self.critics[phase].forward(obs.depth.data[None], flats)
        return float(q[0, 0])

    def parameters_named(self):
        """All learnable and target tensors in a stable checkpointable order."""
        tensors = []
        groups = [("actor", self.actor), ("target_actor", self.target_actor)]
        groups += [(f"critic{i}", c) for i, c in enumerate(self.critics)]
        groups += [(f"target_critic{i}", c) for i, c in enumerate(self.target_critics)]
        for prefix, net in groups:
            for name, arr in zip(net.parameter_names(), net.parameters()):
                tensors.append((f"{prefix}/{name}", arr))
        return tensors


def _batch_phases(agent, flats, n_critics):
    return np.asarray(agent.phase_fn(flats, n_critics), dtype=np.int64)


def critic_targets(agent: DDPGAgent, batch, gamma):
    """Bootstrap targets from the target networks, phase-routed."""
    n = batch["images"].shape[0]
    k = len(agent.critics)
    nimgs = agent.prep_images(batch["next_images"])
    nflats = agent.prep_flats(batch["next_flats"])
    next_phases = _batch_phases(agent, batch["next_flats"], k)
    next_actions, _ = agent.target_actor.forward(nimgs, nflats)
    q_next = np.zeros(n)
    for p in range(k):
        rows = np.flatnonzero(next_phases == p)
        if rows.size == 0:
            continue
        flat_in = np.concatenate([nflats[rows], next_actions[rows]], axis=1)
        q, _ = agent.target_critics[p].forward(nimgs[rows], flat_in)
        q_next[rows] = q[:, 0]
    y = bellman_target(batch["rewards"], batch["dones"], gamma, q_next)
    if agent.cfg.clip_targets:
        # binary terminal reward: the true return lies in [0, 1], so bound
        # the bootstrap target to stop overestimation spirals
        y = np.clip(y, 0.0, 1.0)
    return y


def critic_loss_and_grads(agent: DDPGAgent, batch, y):
    """Mean squared error against ``y`` and its analytic parameter gradients.

    Returns (loss, per-critic gradient lists, per-critic row masks); the
    gradients are what the finite-difference checks validate.
    """
    n = batch["images"].shape[0]
    k = len(agent.critics)
    imgs = agent.prep_images(batch["images"])
    flats = agent.prep_flats(batch["flats"])
    phases = _batch_phases(agent, batch["flats"], k)
    total_sq = 0.0
    all_grads = [None] * k
    masks = [None] * k
    for p in range(k):
        rows = np.flatnonzero(phases == p)
        masks[p] = rows
        if rows.size == 0:
            continue
        critic = agent.critics[p]
        flat_in = np.concatenate([flats[rows], batch["actions"][rows]], axis=1)
        q, cache = critic.forward(imgs[rows], flat_in)
        err = q[:, 0] - y[rows]
        total_sq += float(err @ err)
        grad_out = (2.0 * err / n)[:, None]
        grads, _ = critic.backward(cache, grad_out)
        all_grads[p] = grads
    return total_sq / n, all_grads, masks


def critic_update(agent: DDPGAgent, batch, lr, gamma):
    """One regression step of every phase critic toward the bootstrap target."""
    if batch["images"].shape[0] == 0:
        raise DomainError("minibatch must not be empty")
    y = critic_targets(agent, batch, gamma)
    loss, all_grads, _ = critic_loss_and_grads(agent, batch, y)
    if not math.isfinite(loss):
        raise TrainingFault(f"critic loss is not finite: {loss!r}")
    for p, grads in enumerate(all_grads):
        if grads is not None:
            agent.critic_opts[p].step(agent.critics[p].parameters(), grads, lr)
    return loss


def actor_objective_and_grads(agent: DDPGAgent, batch):
    """Mean critic value of the actor's own actions, plus its gradients.

    Returns (objective, actor parameter gradients); ascending these
    gradients is the policy improvement step.
    """
    n = batch["images"].shape[0]
    k = len(agent.critics)
    imgs = agent.prep_images(batch["images"])
    flats = agent.prep_flats(batch["flats"])
    phases = _batch_phases(agent, batch["flats"], k)
    actions, actor_cache = agent.actor.forward(imgs, flats)
    grad_actions = np.zeros_like(actions)
    objective = 0.0
    for p in range(k):
        rows = np.flatnonzero(phases == p)
        if rows.size == 0:
            continue
        critic = agent.critics[p]
        flat_in = np.concatenate([flats[rows], actions[rows]], axis=1)
        q, cache = critic.forward(imgs[rows], flat_in)
        objective += float(q[:, 0].sum())
        grad_out = np.full((rows.size, 1), 1.0 / n)
        _, g_flat = critic.backward(cache, grad_out)
        grad_actions[rows] = g_flat[:, -ACTION_DIM:]
    grads, _ = agent.actor.backward(actor_cache, grad_actions)
    return objective / n, grads


def actor_update(agent: DDPGAgent, batch, lr):
    """One ascent step on the mean critic value of the actor's own actions."""
    if batch["images"].shape[0] == 0:
        raise DomainError("minibatch must not be empty")
    objective, grads = actor_objective_and_grads(agent, batch)
    if not math.isfinite(objective) or \
            not all(np.all(np.isfinite(g)) for g in grads):
        raise TrainingFault("actor objective or gradient is not finite")
    agent.actor_opt.step(agent.actor.parameters(), [-g for g in grads], lr)


def rollout(policy, env, reset_seed, object_spec="random"):
    """Run one noise-free episode; returns (total_reward, steps)."""
    obs = env.reset(seed=reset_seed, object_spec=object_spec)
    total = 0.0
    steps = 0
    done = False
    while not done:
        vec = policy(obs) if callable(policy) else policy.policy_vec(obs)
        obs, reward, done = env.step(Action.from_vector(vec, env.cfg))
        total += reward
        steps += 1
    return total, steps


@dataclass
class EvalReport:
    """Per-shape success rates in the canonical object order, plus the mean."""

    rows: list  # (shape, success_rate)
    aggregate: float
    episodes_per_shape: int

    def to_csv_text(self):
        lines = ["object,success_rate"]
        for shape, rate in self.rows:
            lines.append(f"{shape},{rate:.4f}")
        lines.append(f"aggregate,{self.aggregate:.4f}")
        return "\n".join(lines) + "\n"


def evaluate(policy, env_factory, episodes, objects=None, seed=0):
    """Noise-free rollouts per shape; ``policy`` is an agent or a callable."""
    if episodes < 1:
        raise DomainError(f"episodes must be >= 1, got {episodes}")
    shapes = [s for s in SHAPE_NAMES if objects is None or s in objects]
    if not shapes:
        raise DomainError("no shapes to evaluate")
    env = env_factory()
    fn = policy.policy_vec if isinstance(policy, DDPGAgent) else policy
    rows = []
    successes_all = 0
    for si, shape in enumerate(shapes):
        wins = 0
        for ep in range(episodes):
            reset_seed = seed * 1_000_003 + si * 10_007 + ep
            total, _ = rollout(fn, env, reset_seed, object_spec=shape)
            wins += int(total > 0)
        rows.append((shape, wins / episodes))
        successes_all += wins
    return EvalReport(rows, successes_all / (episodes * len(shapes)), episodes)


def train(env_factory, cfg: TrainConfig, seed):
    """Run the full learning loop; returns (agent, curve).

    The curve has one (step, success_rate, critic_loss) row per evaluation
    cadence.  All randomness derives from ``seed`` through named substreams,
    so two runs with the same inputs match bitwise in single-threaded use.
    """
    env = env_factory()
    ecfg = env.cfg
    streams = np.random.SeedSequence(seed).spawn(6)
    init_rng, warm_rng, noise_rng, sample_rng, reset_rng, _ = (
        np.random.default_rng(s) for s in streams)

    agent = DDPGAgent.build((ecfg.image_height, ecfg.image_width),
                            ecfg.proprioception_dim, cfg, init_rng,
                            proprio_scale=env.proprio_scale(),
                            far_plane=ecfg.far_plane)
    buffer = ReplayBuffer(cfg.buffer_capacity,
                          (ecfg.image_height, ecfg.image_width),
                          ecfg.proprioception_dim, ACTION_DIM,
                          float32_storage=cfg.store_float32)
    curve = []
    window_losses = []
    obs = None
    random_episode = False
    best = None
    for step in range(1, cfg.total_steps + 1):
        if obs is None:
            obs = env.reset(seed=int(reset_rng.integers(2 ** 31 - 1)),
                            object_spec="random")
            # a floor of fully random episodes keeps contrastive successes
            # flowing into the buffer even if the policy wanders into a dead
            # corner; isolated random steps cannot, since a grasp needs a
            # consecutive closing sequence
            random_episode = (cfg.epsilon_uniform > 0.0
                              and noise_rng.uniform() < cfg.epsilon_uniform)
        if step <= cfg.warmup or random_episode:
            rng_src = warm_rng if step <= cfg.warmup else noise_rng
            vec = rng_src.uniform(-1.0, 1.0, size=ACTION_DIM)
        else:
            vec = add_exploration_noise(agent.policy_vec(obs), cfg.noise_sigma,
                                        noise_rng)
        next_obs, reward, done = env.step(Action.from_vector(vec, ecfg))
        buffer.add(obs.depth.data, obs.proprioception, vec, reward, done,
                   next_obs.depth.data, next_obs.proprioception)
        obs = None if done else next_obs

        if len(buffer) >= max(cfg.warmup, cfg.batch_size):
            batch = buffer.sample(cfg.batch_size, sample_rng)
            try:
                loss = critic_update(agent, batch, cfg.critic_lr, cfg.gamma)
                actor_update(agent, batch, cfg.actor_lr)
            except TrainingFault as fault:
                raise TrainingFault(str(fault), step=step) from fault
            soft_update(agent.target_actor, agent.actor, cfg.tau)
            for tc, c in zip(agent.target_critics, agent.critics):
                soft_update(tc, c, cfg.tau)
            window_losses.append(loss)

        if step % cfg.eval_cadence == 0:
            report = evaluate(agent, env_factory, cfg.eval_episodes,
                              objects=ecfg.objects, seed=step)
            mean_loss = float(np.mean(window_losses)) if window_losses else 0.0
            curve.append((step, report.aggregate, mean_loss))
            window_losses = []
            if cfg.keep_best and (best is None or report.aggregate >= best[0]):
                best = (report.aggregate,
                        [p.copy() for p in agent.actor.parameters()],
                        [[p.copy() for p in c.parameters()]
                         for c in agent.critics])
    if cfg.keep_best and best is not None:
        agent.actor.set_parameters(best[1])
        for critic, params in zip(agent.critics, best[2]):
            critic.set_parameters(params)
    return agent, curve


def write_curve_csv(path, curve):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "success_rate", "critic_loss"])
        for step, rate, loss in curve:
            writer.writerow([step, f"{rate:.6f}", f"{loss:.8g}"])


def save_agent(path, agent: DDPGAgent, config_text_blob=""):
    """Checkpoint every network of the agent plus rebuild metadata."""
    meta = {
        "format": "grasplab-agent",
        "q_factoring": len(agent.critics),
        "image_shape": list(agent.actor.image_shape),
        "proprio_dim": agent.actor.flat_dim,
        "action_dim": ACTION_DIM,
        "conv_channels": list(agent.cfg.conv_channels),
        "conv_kernel": agent.cfg.conv_kernel,
        "conv_stride": agent.cfg.conv_stride,
        "dense_units": list(agent.cfg.dense_units),
        "optimizer": agent.cfg.optimizer,
        "far_plane": agent.far_plane,
        "proprio_scale": [float(v) for v in agent.proprio_scale],
        "config_text": config_text_blob,
    }
    save_checkpoint(path, agent.parameters_named(), meta)


def load_agent(path, train_cfg: TrainConfig = None):
    """Rebuild an agent from a checkpoint; returns (agent, meta)."""
    tensors, meta = load_checkpoint(path)
    if meta.get("format") != "grasplab-agent":
        raise DomainError(f"not an agent checkpoint: {path}")
    cfg = train_cfg or TrainConfig(
        q_factoring=meta["q_factoring"],
        conv_channels=tuple(meta["conv_channels"]),
        conv_kernel=meta["conv_kernel"],
        conv_stride=meta["conv_stride"],
        dense_units=tuple(meta["dense_units"]),
        optimizer=meta["optimizer"],
    )
    rng = np.random.default_rng(0)
    c, h, w = meta["image_shape"]
    agent = DDPGAgent.build((h, w), meta["proprio_dim"], cfg, rng,
                            proprio_scale=np.asarray(meta["proprio_scale"]),
                            far_plane=meta["far_plane"])
    named = dict(tensors)
    groups = [("actor", agent.actor), ("target_actor", agent.target_actor)]
    groups += [(f"critic{i}", c_) for i, c_ in enumerate(agent.critics)]
    groups += [(f"target_critic{i}", c_) for i, c_ in enumerate(agent.target_critics)]
    for prefix, net in groups:
        arrays = [named[f"{prefix}/{n}"] for n in net.parameter_names()]
        net.set_parameters(arrays)
    return agent, meta
