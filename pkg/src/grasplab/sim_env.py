"""Kinematic grasping environment.

One episode: an object rests on the table, the palm starts above the
workspace with open fingers, and the policy steers palm displacements plus
one grip command.  Closing past the commit threshold triggers the terminal
lift attempt (the hand rises and the episode ends); the episode also ends
after the horizon, or early once a held object clears the lift height.
Reward is binary at episode end: 1 when the object center ends at least
``lift_threshold`` above the table.

Contact physics is replaced by an antipodal attachment rule: when the thumb
tip and index tip, swept by the shared closure value through the measured
finger-link chains, started outside the object's cross-section and have
crossed its two opposite sides, the object rigidly follows the palm until
the hand opens past the release threshold.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from grasplab.config import EnvConfig, SHAPE_NAMES
from grasplab.errors import ConfigError, DomainError, StateError
from grasplab.mechanics import HAND_DIMENSIONS, FingerGeometry
from grasplab.objects import ObjectPrimitive, sample_object
from grasplab.vision.depth import CameraModel, DepthImage, render_depth

N_JOINTS = 25
# Joint layout: 0..2 palm x/y/z, 3 palm yaw, 4 thumb abduction,
# 5..19 flexion (finger-major, three joints each, thumb first), 20..24 reserved.
FLEX_JOINT0 = 5
N_FINGERS = 5
FLEX_PER_FINGER = 3
FLEX_MAX_RAD = (math.pi / 2, math.pi / 2, math.pi / 2)

# Grasp geometry of the simplified hand.
KNUCKLE_HALF_SEP_M = 0.03  # thumb and finger knuckle rows sit this far off-center
PALM_HALF_WIDTH_M = 0.04  # lateral tolerance of the pinch
SPLAY_RAD = math.radians(25.0)  # open fingers lean outward by this much
CONTACT_BAND_M = 0.02  # fingertip pad reach above/below the cross-section

ACTION_DIM = 5


@dataclass
class HandState:
    """Palm pose plus derived joint vectors of the 25-joint hand."""

    palm_position: np.ndarray
    palm_yaw: float
    finger_closure: np.ndarray  # 5 values in [0, 1], tendon contraction per finger
    thumb_abduction: float
    joint_positions: np.ndarray
    joint_velocities: np.ndarray

    def __post_init__(self):
        self.palm_position = np.asarray(self.palm_position, dtype=float).copy()
        self.finger_closure = np.clip(np.asarray(self.finger_closure, dtype=float), 0.0, 1.0)
        if self.finger_closure.shape != (N_FINGERS,):
            raise DomainError("finger_closure needs one value per finger")
        self.thumb_abduction = float(np.clip(self.thumb_abduction, 0.0, 1.0))
        self.joint_positions = np.asarray(self.joint_positions, dtype=float).copy()
        self.joint_velocities = np.asarray(self.joint_velocities, dtype=float).copy()
        if self.joint_positions.shape != (N_JOINTS,) or self.joint_velocities.shape != (N_JOINTS,):
            raise DomainError(f"joint vectors must have exactly {N_JOINTS} entries")


def derive_joint_positions(palm_position, palm_yaw, finger_closure, thumb_abduction):
    """Joint vector implied by the palm pose and the coupled tendon closures."""
    pos = np.zeros(N_JOINTS)
    pos[0:3] = palm_position
    pos[3] = palm_yaw
    pos[4] = thumb_abduction
    for f in range(N_FINGERS):
        for j in range(FLEX_PER_FINGER):
            pos[FLEX_JOINT0 + FLEX_PER_FINGER * f + j] = finger_closure[f] * FLEX_MAX_RAD[j]
    return pos


def make_hand(palm_position, palm_yaw=0.0, closure=0.0, thumb_abduction=0.5,
              joint_velocities=None):
    closure_vec = np.full(N_FINGERS, float(closure))
    joints = derive_joint_positions(palm_position, palm_yaw, closure_vec, thumb_abduction)
    vel = np.zeros(N_JOINTS) if joint_velocities is None else joint_velocities
    return HandState(np.asarray(palm_position, dtype=float), float(palm_yaw),
                     closure_vec, thumb_abduction, joints, vel)


@dataclass
class Observation:
    """Depth image from the hand camera plus the proprioception vector."""

    depth: DepthImage
    proprioception: np.ndarray

    def __post_init__(self):
        self.proprioception = np.asarray(self.proprioception, dtype=float).copy()
        if not np.all(np.isfinite(self.proprioception)):
            raise DomainError("proprioception must be finite")


@dataclass(frozen=True)
class Action:
    """Palm displacement (m, rad) and one grip command in [-1, 1]."""

    dx: float = 0.0
    dy: float = 0.0
    dz: float = 0.0
    dyaw: float = 0.0
    grip: float = 0.0

    @classmethod
    def from_vector(cls, vec, cfg: EnvConfig):
        """Map a normalized [-1, 1]^5 vector onto the physical step limits."""
        v = np.clip(np.asarray(vec, dtype=float), -1.0, 1.0)
        if v.shape != (ACTION_DIM,):
            raise DomainError(f"action vector must have {ACTION_DIM} components")
        return cls(v[0] * cfg.step_limit_xyz, v[1] * cfg.step_limit_xyz,
                   v[2] * cfg.step_limit_xyz, v[3] * cfg.step_limit_yaw, v[4])

    def to_vector(self, cfg: EnvConfig):
        return np.array([self.dx / cfg.step_limit_xyz, self.dy / cfg.step_limit_xyz,
                         self.dz / cfg.step_limit_xyz, self.dyaw / cfg.step_limit_yaw,
                         self.grip])

    def clamped(self, cfg: EnvConfig):
        lim = cfg.step_limit_xyz
        return Action(float(np.clip(self.dx, -lim, lim)), float(np.clip(self.dy, -lim, lim)),
                      float(np.clip(self.dz, -lim, lim)),
                      float(np.clip(self.dyaw, -cfg.step_limit_yaw, cfg.step_limit_yaw)),
                      float(np.clip(self.grip, -1.0, 1.0)))


@dataclass
class Transition:
    """One replayable step; reward is binary and only nonzero on done."""

    obs: Observation
    action: Action
    reward: float
    next_obs: Observation
    done: bool

    def __post_init__(self):
        if self.reward not in (0.0, 1.0):
            raise DomainError(f"reward must be 0 or 1, got {self.reward!r}")
        if self.reward == 1.0 and not self.done:
            raise DomainError("reward 1 is only paid on episode end")


@dataclass
class Scene:
    """Everything the reward and the renderer need to see."""

    obj: ObjectPrimitive
    hand: HandState
    table_height: float = 0.0
    attached: bool = False


def grasp_success(scene: Scene, lift_threshold=0.2):
    """Object center at or above table + threshold counts as held."""
    return bool(scene.obj.position[2] >= scene.table_height + lift_threshold)


def _finger_links_m(geom: FingerGeometry):
    return np.array([geom.link1, geom.link2, geom.link3]) / 1000.0


def fingertip_offsets(geom: FingerGeometry, closure, splay_rad=SPLAY_RAD):
    """(inward, drop) of the fingertip relative to its knuckle, meters.

    The chain hangs from the knuckle, leaning outward by the splay when
    open; closure sweeps each joint to its maximum flexion.  ``inward`` is
    displacement toward the palm centerline (negative = splayed outward),
    ``drop`` is below the knuckle.  hypot(inward, drop) equals the chain
    reach from :func:`grasplab.mechanics.fingertip_reach`.
    """
    angles = float(closure) * np.asarray(FLEX_MAX_RAD)
    cum = np.cumsum(angles) - splay_rad
    links = _finger_links_m(geom)
    inward = float(np.sum(links * np.sin(cum)))
    drop = float(np.sum(links * np.cos(cum)))
    return inward, drop


def attachment_test(hand: HandState, obj: ObjectPrimitive,
                    thumb: FingerGeometry = HAND_DIMENSIONS["thumb"],
                    index: FingerGeometry = HAND_DIMENSIONS["index"],
                    knuckle_half_sep=KNUCKLE_HALF_SEP_M,
                    palm_half_width=PALM_HALF_WIDTH_M,
                    contact_band=CONTACT_BAND_M):
    """Antipodal two-finger attachment check.

    True when at least the thumb tip and the index tip lie on opposite
    sides of the object's horizontal cross-section: both tips started
    outside the section at zero closure and have now swept past its two
    surfaces, at a height where the fingertips can touch the section.
    """
    closure = float(hand.finger_closure[1])  # coupled closure, index finger
    # object center in the palm frame
    cy, sy = math.cos(hand.palm_yaw), math.sin(hand.palm_yaw)
    dx = obj.position[0] - hand.palm_position[0]
    dy = obj.position[1] - hand.palm_position[1]
    ex = cy * dx + sy * dy
    ey = -sy * dx + cy * dy
    if abs(ex) > knuckle_half_sep or abs(ey) > palm_half_width:
        return False
    s_i, h_i = fingertip_offsets(index, closure)
    s_t, h_t = fingertip_offsets(thumb, closure)
    z_tip = hand.palm_position[2] - 0.5 * (h_i + h_t)
    # the pad can press anywhere within contact_band of the tip plane;
    # let it take the widest cross-section it reaches
    half_h = obj.half_height
    rel_z = z_tip - obj.position[2]
    dz_lo = max(rel_z - contact_band, -half_h)
    dz_hi = min(rel_z + contact_band, half_h)
    if dz_lo > dz_hi:
        return False
    dz = min(max(0.0, dz_lo), dz_hi)
    r = obj.grip_half_width(dz)
    if r <= 0.0:
        return False
    s_i0, _ = fingertip_offsets(index, 0.0)
    s_t0, _ = fingertip_offsets(thumb, 0.0)
    started_outside = (knuckle_half_sep - s_i0 >= ex + r
                       and -knuckle_half_sep + s_t0 <= ex - r)
    crossed = (knuckle_half_sep - s_i <= ex + r
               and -knuckle_half_sep + s_t >= ex - r)
    return bool(started_outside and crossed)


def spawn_object(shape, rng, cfg: EnvConfig = EnvConfig()):
    """Random object of ``shape`` inside the spawn disk, resting on the table."""
    return sample_object(shape, rng, table_height=cfg.table_height,
                         spawn_radius=cfg.spawn_radius)


class GraspEnv:
    """Single-owner, single-threaded episode machine over one object."""

    def __init__(self, cfg: EnvConfig = EnvConfig()):
        self.cfg = cfg
        self._active = False
        self._done = False
        self._scene = None
        self._t = 0
        self._attach_offset = None
        self._attach_yaw = 0.0

    @property
    def scene(self) -> Scene:
        if self._scene is None:
            raise StateError("environment has not been reset")
        return self._scene

    @property
    def steps_taken(self):
        return self._t

    def camera(self) -> CameraModel:
        hand = self.scene.hand
        pos = hand.palm_position + np.array([0.0, 0.0, self.cfg.camera_offset])
        return CameraModel(width=self.cfg.image_width, height=self.cfg.image_height,
                           fov_deg=self.cfg.fov_deg, position=tuple(pos),
                           yaw=hand.palm_yaw, far_plane=self.cfg.far_plane)

    def observe(self) -> Observation:
        scene = self.scene
        depth = render_depth([scene.obj], self.camera())
        prop = np.concatenate([
            scene.hand.joint_positions,
            scene.hand.joint_velocities,
            scene.obj.position if self.cfg.include_object_position else np.empty(0),
        ])
        return Observation(depth, prop)

    def proprio_scale(self):
        """Feature scaling that brings all proprioception entries to order one."""
        scale = np.ones(self.cfg.proprioception_dim)
        scale[0:3] = 5.0  # palm position, meters
        scale[N_JOINTS:N_JOINTS + 3] = 25.0  # palm velocity, meters per step
        if self.cfg.include_object_position:
            scale[50:53] = 5.0
        return scale

    def reset(self, seed, object_spec="random") -> Observation:
        """Start a fresh episode; a fixed (seed, object_spec) replays exactly."""
        rng = np.random.default_rng(seed)
        cfg = self.cfg
        if isinstance(object_spec, ObjectPrimitive):
            obj = object_spec.moved_to(object_spec.position, object_spec.yaw)
            if obj.shape not in SHAPE_NAMES:
                raise ConfigError(f"unknown object shape {obj.shape!r}")
        elif object_spec == "random":
            shape = cfg.objects[int(rng.integers(len(cfg.objects)))]
            obj = spawn_object(shape, rng, cfg)
        elif isinstance(object_spec, str) and object_spec in SHAPE_NAMES:
            obj = spawn_object(object_spec, rng, cfg)
        else:
            raise ConfigError(f"bad object_spec: {object_spec!r}")
        home = np.array([0.0, 0.0, cfg.table_height + cfg.palm_home_height])
        hand = make_hand(home, palm_yaw=0.0, closure=0.0)
        self._scene = Scene(obj=obj, hand=hand, table_height=cfg.table_height,
                            attached=False)
        self._attach_offset = None
        self._attach_yaw = 0.0
        self._t = 0
        self._done = False
        self._active = True
        return self.observe()

    def _clamp_palm(self, pos):
        cfg = self.cfg
        pos[0] = np.clip(pos[0], -cfg.workspace_radius, cfg.workspace_radius)
        pos[1] = np.clip(pos[1], -cfg.workspace_radius, cfg.workspace_radius)
        pos[2] = np.clip(pos[2], cfg.table_height + cfg.palm_min_height,
                         cfg.table_height + cfg.palm_max_height)
        return pos

    def _move_palm(self, scene, delta, dyaw):
        hand = scene.hand
        new_pos = self._clamp_palm(hand.palm_position + delta)
        new_yaw = hand.palm_yaw + dyaw
        hand.palm_position = new_pos
        hand.palm_yaw = new_yaw
        if scene.attached:
            cy, sy = math.cos(new_yaw), math.sin(new_yaw)
            off = self._attach_offset
            world = np.array([cy * off[0] - sy * off[1],
                              sy * off[0] + cy * off[1], off[2]])
            scene.obj.position = new_pos + world
            scene.obj.yaw = new_yaw + self._attach_yaw

    def _grab(self, scene):
        hand = scene.hand
        cy, sy = math.cos(hand.palm_yaw), math.sin(hand.palm_yaw)
        rel = scene.obj.position - hand.palm_position
        self._attach_offset = np.array([cy * rel[0] + sy * rel[1],
                                        -sy * rel[0] + cy * rel[1], rel[2]])
        self._attach_yaw = scene.obj.yaw - hand.palm_yaw
        scene.attached = True

    def _release(self, scene):
        scene.attached = False
        self._attach_offset = None
        drop = scene.obj.position.copy()
        drop[2] = scene.table_height + scene.obj.rest_height
        scene.obj.position = drop

    def step(self, action: Action):
        """Advance one step; returns (observation, reward, done)."""
        if not self._active:
            raise StateError("call reset before step")
        if self._done:
            raise StateError("episode has ended; call reset")
        cfg = self.cfg
        act = action.clamped(cfg)
        scene = self._scene
        hand = scene.hand
        prev_joints = hand.joint_positions.copy()

        self._move_palm(scene, np.array([act.dx, act.dy, act.dz]), act.dyaw)
        closure = float(np.clip(hand.finger_closure[0] + act.grip * cfg.closure_rate,
                                0.0, 1.0))
        hand.finger_closure = np.full(N_FINGERS, closure)

        # the hold persists until the grip command actively opens the hand
        # past the release threshold
        if scene.attached and act.grip < 0 and closure < cfg.release_closure:
            self._release(scene)
        elif not scene.attached and attachment_test(hand, scene.obj):
            self._grab(scene)

        self._t += 1
        done = False
        if closure >= cfg.grasp_commit_closure:
            # terminal lift attempt: the hand commits, rises, episode ends
            lift = np.array([0.0, 0.0, cfg.lift_threshold + cfg.lift_margin])
            self._move_palm(scene, lift, 0.0)
            done = True
        elif scene.attached and grasp_success(scene, cfg.lift_threshold):
            done = True  # held above the line without committing
        elif self._t >= cfg.horizon:
            done = True

        hand.joint_positions = derive_joint_positions(
            hand.palm_position, hand.palm_yaw, hand.finger_closure, hand.thumb_abduction)
        hand.joint_velocities = hand.joint_positions - prev_joints

        reward = 1.0 if done and grasp_success(scene, cfg.lift_threshold) else 0.0
        self._done = done
        return self.observe(), reward, done


def default_phase_fn(flats, k):
    """Episode phase from the stored proprioception: open-hand approach
    versus committed grasp/lift, bucketed by the coupled closure value."""
    if k <= 1:
        return np.zeros(flats.shape[0], dtype=np.int64)
    closure = flats[:, FLEX_JOINT0] / FLEX_MAX_RAD[0]
    return np.clip((closure * k).astype(np.int64), 0, k - 1)


class ScriptedGraspPolicy:
    """Hand-written oracle: center over the object, descend, close.

    The descend target puts the fingertip sweep through the object's body at
    the closure where the tips cross its sides.  With ``manual_lift`` the
    policy stops closing short of the commit threshold and raises the palm
    instead, exercising the held-above-the-line episode ending; otherwise it
    commits and lets the terminal lift run.
    """

    def __init__(self, cfg: EnvConfig, manual_lift=False, hold_closure=0.62,
                 descend_clearance=0.075):
        self.cfg = cfg
        self.manual_lift = manual_lift
        self.hold_closure = hold_closure
        self.descend_clearance = descend_clearance

    def __call__(self, obs: Observation):
        p = obs.proprioception
        palm = p[0:3]
        closure = p[FLEX_JOINT0] / FLEX_MAX_RAD[0]
        obj = p[50:53]
        lim = self.cfg.step_limit_xyz
        vec = np.zeros(ACTION_DIM)
        dx, dy = obj[0] - palm[0], obj[1] - palm[1]
        if math.hypot(dx, dy) > 0.004:
            vec[0] = np.clip(dx / lim, -1.0, 1.0)
            vec[1] = np.clip(dy / lim, -1.0, 1.0)
            return vec
        target_z = max(obj[2] + self.descend_clearance,
                       self.cfg.table_height + self.cfg.palm_min_height)
        dz = target_z - palm[2]
        if abs(dz) > 0.004 and closure < 0.05:
            vec[2] = np.clip(dz / lim, -1.0, 1.0)
            return vec
        if not self.manual_lift:
            vec[4] = 1.0
            return vec
        if closure < self.hold_closure:
            vec[4] = min(1.0, (self.hold_closure - closure) / self.cfg.closure_rate)
        else:
            vec[2] = 1.0
        return vec
