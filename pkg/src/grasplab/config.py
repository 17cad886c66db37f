"""Run configuration, read from plain ``key = value`` text files.

One file configures both the environment and the learner; keys are split by
ownership.  Lines starting with ``#`` and blank lines are ignored, values
after the first ``=`` are parsed as bool/int/float/comma-list/string in that
order.  Unknown keys are rejected so typos fail loudly.
"""

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from grasplab.errors import ConfigError

SHAPE_NAMES = ("cuboid", "sphere", "ellipsoid", "cylinder", "can", "coin", "screwdriver")


def _parse_scalar(token):
    t = token.strip()
    low = t.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        pass
    return t


def parse_kv_text(text, path=None):
    """Parse ``key = value`` lines into a dict; later keys override earlier."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value' on line {lineno}"
                              + (f" of {path}" if path else "") + f": {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"empty key on line {lineno}" + (f" of {path}" if path else ""))
        value = value.strip()
        if "," in value:
            out[key] = tuple(_parse_scalar(v) for v in value.split(",") if v.strip())
        else:
            out[key] = _parse_scalar(value)
    return out


def read_kv_file(path):
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_kv_text(p.read_text(), path=str(p))


@dataclass(frozen=True)
class EnvConfig:
    """Knobs of the grasping environment; defaults run the standard task."""

    horizon: int = 40
    step_limit_xyz: float = 0.02  # m per step
    step_limit_yaw: float = 0.1  # rad per step
    lift_threshold: float = 0.2  # m above the table counts as held
    lift_margin: float = 0.05  # extra travel of the terminal lift
    table_height: float = 0.0
    palm_home_height: float = 0.12
    palm_min_height: float = 0.04
    palm_max_height: float = 0.5
    workspace_radius: float = 0.25
    closure_rate: float = 0.25  # closure change per unit grip command per step
    grasp_commit_closure: float = 0.8  # closing past this triggers the lift attempt
    release_closure: float = 0.3  # opening below this drops an attached object
    image_width: int = 64
    image_height: int = 64
    fov_deg: float = 60.0
    camera_offset: float = 0.08  # camera sits this far above the palm
    far_plane: float = 2.0
    include_object_position: bool = True
    objects: tuple = SHAPE_NAMES
    spawn_radius: float = 0.05

    def __post_init__(self):
        if self.horizon < 1:
            raise ConfigError(f"horizon must be >= 1, got {self.horizon}")
        for attr in ("step_limit_xyz", "step_limit_yaw", "lift_threshold", "far_plane",
                     "closure_rate", "fov_deg", "workspace_radius"):
            if getattr(self, attr) <= 0:
                raise ConfigError(f"{attr} must be > 0")
        if self.spawn_radius < 0:
            raise ConfigError("spawn_radius must be >= 0")
        if self.image_width < 1 or self.image_height < 1:
            raise ConfigError("image size must be positive")
        if not 0.0 < self.release_closure < self.grasp_commit_closure <= 1.0:
            raise ConfigError("need 0 < release_closure < grasp_commit_closure <= 1")
        objs = (self.objects,) if isinstance(self.objects, str) else tuple(self.objects)
        unknown = [o for o in objs if o not in SHAPE_NAMES]
        if unknown:
            raise ConfigError(f"unknown object shapes: {unknown}")
        if not objs:
            raise ConfigError("objects must name at least one shape")
        object.__setattr__(self, "objects", objs)

    @property
    def proprioception_dim(self):
        return 50 + (3 if self.include_object_position else 0)


@dataclass(frozen=True)
class TrainConfig:
    """Learner hyperparameters; defaults are this package's, not literature values."""

    gamma: float = 0.99
    tau: float = 0.005
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    batch_size: int = 64
    noise_sigma: float = 0.1
    epsilon_uniform: float = 0.0  # fraction of episodes collected fully at random
    buffer_capacity: int = 100_000
    total_steps: int = 200_000
    warmup: int = 1000
    eval_cadence: int = 5000
    eval_episodes: int = 20
    q_factoring: int = 2  # 1 disables the per-phase critic split
    clip_targets: bool = True  # clamp bootstrap targets into [0, 1]
    keep_best: bool = False  # return the best-evaluated snapshot, not the last
    conv_channels: tuple = (8, 16)
    conv_kernel: int = 4
    conv_stride: int = 2
    dense_units: tuple = (256, 256)
    optimizer: str = "adam"
    store_float32: bool = False

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError(f"gamma must lie in (0, 1], got {self.gamma}")
        if not 0.0 < self.tau <= 1.0:
            raise ConfigError(f"tau must lie in (0, 1], got {self.tau}")
        for attr in ("actor_lr", "critic_lr"):
            if getattr(self, attr) < 0:
                raise ConfigError(f"{attr} must be >= 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be >= 0")
        if not 0.0 <= self.epsilon_uniform <= 1.0:
            raise ConfigError("epsilon_uniform must lie in [0, 1]")
        if self.buffer_capacity < 1:
            raise ConfigError("buffer_capacity must be >= 1")
        if self.total_steps < 0:
            raise ConfigError("total_steps must be >= 0")
        if self.warmup < 0:
            raise ConfigError("warmup must be >= 0")
        if self.eval_cadence < 1 or self.eval_episodes < 1:
            raise ConfigError("eval cadence and episodes must be >= 1")
        if self.q_factoring < 1:
            raise ConfigError("q_factoring must be >= 1")
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigError(f"optimizer must be adam or sgd, got {self.optimizer!r}")
        for attr in ("conv_channels", "dense_units"):
            v = getattr(self, attr)
            v = (v,) if isinstance(v, int) else tuple(v)
            if not v or any((not isinstance(u, int)) or u < 1 for u in v):
                raise ConfigError(f"{attr} must be positive integers")
            object.__setattr__(self, attr, v)


_ENV_KEYS = {f.name for f in fields(EnvConfig)}
_TRAIN_KEYS = {f.name for f in fields(TrainConfig)}


def _coerce(cls, values):
    try:
        return cls(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def configs_from_dict(raw):
    """Split one flat key dict into (EnvConfig, TrainConfig)."""
    env_kv, train_kv = {}, {}
    for key, value in raw.items():
        if key in _ENV_KEYS:
            env_kv[key] = value
        elif key in _TRAIN_KEYS:
            train_kv[key] = value
        else:
            raise ConfigError(f"unknown config key: {key!r}")
    return _coerce(EnvConfig, env_kv), _coerce(TrainConfig, train_kv)


def load_configs(path):
    """Read a config file and return (EnvConfig, TrainConfig)."""
    return configs_from_dict(read_kv_file(path))


def config_text(env_cfg: EnvConfig, train_cfg: TrainConfig):
    """Render both configs back to the file format, fully resolved."""
    lines = []
    for cfg in (env_cfg, train_cfg):
        for f in fields(cfg):
            v = getattr(cfg, f.name)
            if isinstance(v, tuple):
                v = ", ".join(str(u) for u in v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


def with_overrides(cfg, **kv):
    """Return a copy of a config dataclass with fields replaced."""
    return replace(cfg, **kv)
