"""Tendon-driven finger statics and design checks for the printed hand.

All statics here are frictionless: the tendon is assumed to run through the
finger without losses, so fingertip force maps to cable tension through a
single moment balance about the knuckle joint.  Design reports carry that
assumption as an explicit flag.

Units: lengths in millimeters, forces in newtons, torques in newton
millimeters, stresses in megapascals, angles in the unit named per argument.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from grasplab.errors import DomainError

# Moment arm of the tendon about the knuckle joint, identical for all fingers
# of the prototype.
DEFAULT_JOINT_MOMENT_ARM_MM = 5.0

# Servo horn diameter of the prototype actuators.
DEFAULT_HORN_DIAMETER_MM = 23.8


def _require_finite(**values):
    for name, v in values.items():
        if not math.isfinite(v):
            raise DomainError(f"{name} must be finite, got {v!r}")


@dataclass(frozen=True)
class FingerGeometry:
    """Link lengths of one finger, measured on the prototype hand.

    ``palm_length`` runs from the wrist to the knuckle; ``link1``..``link3``
    are the three phalanx links.  ``joint_moment_arm`` is the tendon moment
    arm about the knuckle.
    """

    name: str
    palm_length: float
    link1: float
    link2: float
    link3: float
    joint_moment_arm: float = DEFAULT_JOINT_MOMENT_ARM_MM

    def __post_init__(self):
        for attr in ("palm_length", "link1", "link2", "link3", "joint_moment_arm"):
            v = getattr(self, attr)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"finger {self.name!r}: {attr} must be > 0, got {v!r}")

    @property
    def total_link_length(self):
        """Straight-finger distance from knuckle to fingertip, mm."""
        return self.link1 + self.link2 + self.link3


# Caliper measurements of the prototype hand (mm): palm, link1, link2, link3.
HAND_DIMENSIONS = {
    "thumb": FingerGeometry("thumb", 52.0, 45.0, 34.0, 29.5),
    "index": FingerGeometry("index", 90.0, 43.5, 26.5, 23.5),
    "middle": FingerGeometry("middle", 86.0, 46.5, 32.0, 24.5),
    "ring": FingerGeometry("ring", 79.0, 45.5, 32.0, 24.0),
    "pinky": FingerGeometry("pinky", 79.0, 35.5, 23.5, 21.0),
}

FINGER_ORDER = ("thumb", "index", "middle", "ring", "pinky")


@dataclass(frozen=True)
class ServoSpec:
    """Actuator ratings relevant to the design checks."""

    horn_diameter: float = DEFAULT_HORN_DIAMETER_MM  # mm
    rated_torque: float = 9800.0  # N*mm, typical hobby servo class used here
    angular_speed: float = 115.0  # degrees/second

    def __post_init__(self):
        if not (math.isfinite(self.horn_diameter) and self.horn_diameter > 0):
            raise DomainError(f"horn_diameter must be > 0, got {self.horn_diameter!r}")
        if not (math.isfinite(self.rated_torque) and self.rated_torque > 0):
            raise DomainError(f"rated_torque must be > 0, got {self.rated_torque!r}")


@dataclass(frozen=True)
class OrthotropicMaterial:
    """Direction-dependent elastic constants of a fused-deposition print."""

    E_x: float
    E_y: float
    E_z: float
    nu_xy: float
    nu_yz: float
    nu_xz: float
    G_xy: float
    G_yz: float
    G_xz: float

    def __post_init__(self):
        for attr in ("E_x", "E_y", "E_z", "G_xy", "G_yz", "G_xz"):
            v = getattr(self, attr)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{attr} must be > 0, got {v!r}")
        for attr in ("nu_xy", "nu_yz", "nu_xz"):
            v = getattr(self, attr)
            if not (math.isfinite(v) and 0 < v < 0.5):
                raise DomainError(f"{attr} must lie in (0, 0.5), got {v!r}")


# Transversely orthotropic PLA as characterized for the prototype prints (Pa).
PLA_ORTHOTROPIC = OrthotropicMaterial(
    E_x=2.1e9,
    E_y=2.8e9,
    E_z=2.8e9,
    nu_xy=0.3,
    nu_yz=0.3,
    nu_xz=0.3,
    G_xy=1.3725e9,
    G_yz=1.5e9,
    G_xz=1.5e9,
)

# Dowel press-fit strength per global print direction (MPa), back-computed
# from the prototype FEA study as max stress times the safety factor found
# at that stress.  User-supplied strengths take precedence in reports.
DOWEL_PRESS_FIT_STRENGTH_MPA = {
    "Y": 37.8 * 3.00,  # 113.4
    "Z": 80.0 * 1.35,  # 108.0
    "X": 81.0 * 1.30,  # 105.3
}


@dataclass(frozen=True)
class DesignSummary:
    """Headline figures of a hand design, checked against the benchmark list."""

    total_mass: float  # grams
    max_pinch_force: float  # N
    max_angular_speed: float  # degrees/second
    actuator_count: int

    def __post_init__(self):
        for attr in ("total_mass", "max_pinch_force", "max_angular_speed", "actuator_count"):
            v = getattr(self, attr)
            if not (math.isfinite(v) and v >= 0):
                raise DomainError(f"{attr} must be non-negative, got {v!r}")


@dataclass(frozen=True)
class BenchmarkFinding:
    """One pass/fail (or informational) line of a design check."""

    criterion: str
    value: float
    threshold: float | None
    passed: bool | None  # None marks an informational line with no threshold
    detail: str = ""


def required_tension(pinch_force, reach, moment_arm=DEFAULT_JOINT_MOMENT_ARM_MM):
    """Cable tension needed to hold ``pinch_force`` at the fingertip.

    Static moment balance about the knuckle: the fingertip force acting at
    distance ``reach`` is reacted by the tendon at ``moment_arm``, so
    ``T = F * R / l``.

    Args:
        pinch_force: fingertip force, N (>= 0).
        reach: knuckle-to-fingertip distance, mm (>= 0).
        moment_arm: tendon moment arm about the knuckle, mm (> 0).

    Returns:
        Tension in the tendon, N.
    """
    _require_finite(pinch_force=pinch_force, reach=reach, moment_arm=moment_arm)
    if pinch_force < 0 or reach < 0:
        raise DomainError("pinch_force and reach must be non-negative")
    if moment_arm <= 0:
        raise DomainError(f"moment_arm must be > 0, got {moment_arm!r}")
    return pinch_force * reach / moment_arm


def servo_torque(horn_diameter, tendon_tension, horn_angle_deg):
    """Torque at the servo shaft for a tendon pulled off the horn.

    The tendon leaves the horn at radius d/2; only the component of tension
    perpendicular to the horn arm loads the shaft, hence the sine term.
    Sign follows the sign of the tension.

    Args:
        horn_diameter: servo horn diameter, mm (> 0).
        tendon_tension: tension in the tendon, N (signed).
        horn_angle_deg: angle between horn arm and tendon, degrees in [0, 180].

    Returns:
        Shaft torque, N*mm.
    """
    _require_finite(
        horn_diameter=horn_diameter,
        tendon_tension=tendon_tension,
        horn_angle_deg=horn_angle_deg,
    )
    if horn_diameter <= 0:
        raise DomainError(f"horn_diameter must be > 0, got {horn_diameter!r}")
    if not 0.0 <= horn_angle_deg <= 180.0:
        raise DomainError(f"horn_angle_deg must lie in [0, 180], got {horn_angle_deg!r}")
    return 0.5 * horn_diameter * tendon_tension * math.sin(math.radians(horn_angle_deg))


def fingertip_reach(geom: FingerGeometry, joint_angles):
    """Planar knuckle-to-fingertip distance of the three-link chain, mm.

    The chain is flat: link ``i`` is rotated by the sum of joint angles 1..i
    (cumulative flexion), each joint limited to [0, pi/2].  A straight finger
    returns ``link1 + link2 + link3``; flexing the distal joints pulls the
    tip back toward the knuckle.  A near-closed index finger (both distal
    joints at about 1.22 rad) brings the reach down to the 53 mm working
    value used for the pinch-force sizing.

    Args:
        geom: finger link lengths.
        joint_angles: three flexion angles in radians, each in [0, pi/2].

    Returns:
        Euclidean distance from knuckle to fingertip, mm.
    """
    angles = np.asarray(joint_angles, dtype=float)
    if angles.shape != (3,):
        raise DomainError(f"expected 3 joint angles, got shape {angles.shape}")
    if not np.all(np.isfinite(angles)):
        raise DomainError("joint angles must be finite")
    if np.any(angles < 0.0) or np.any(angles > math.pi / 2 + 1e-12):
        raise DomainError("joint angles must lie in [0, pi/2]")
    links = (geom.link1, geom.link2, geom.link3)
    cum = np.cumsum(angles)
    x = float(np.sum(links * np.cos(cum)))
    y = float(np.sum(links * np.sin(cum)))
    return math.hypot(x, y)


def safety_factor(max_stress, strength):
    """Ratio of material strength to peak computed stress (both MPa, > 0)."""
    _require_finite(max_stress=max_stress, strength=strength)
    if max_stress <= 0:
        raise DomainError(f"max_stress must be > 0, got {max_stress!r}")
    if strength <= 0:
        raise DomainError(f"strength must be > 0, got {strength!r}")
    return strength / max_stress


# Benchmark thresholds for a desirable prosthetic hand.
MASS_LIMIT_G = 500.0  # strict: a 500 g design fails
PINCH_FORCE_CAP_N = 65.0  # palmar prehension force is capped here
MIN_ANGULAR_SPEED_DEG_S = 115.0


def check_benchmarks(summary: DesignSummary):
    """Evaluate a design summary against the benchmark feature list.

    Returns one finding per criterion: mass strictly under 500 g, fingertip
    pinch force at most the 65 N palmar cap, joint speed at least 115 deg/s,
    and an informational line reporting the actuator count (fewer is better,
    no fixed threshold).
    """
    findings = [
        BenchmarkFinding(
            criterion="total mass",
            value=summary.total_mass,
            threshold=MASS_LIMIT_G,
            passed=summary.total_mass < MASS_LIMIT_G,
            detail=f"{summary.total_mass:g} g < {MASS_LIMIT_G:g} g",
        ),
        BenchmarkFinding(
            criterion="pinch force cap",
            value=summary.max_pinch_force,
            threshold=PINCH_FORCE_CAP_N,
            passed=summary.max_pinch_force <= PINCH_FORCE_CAP_N,
            detail=f"{summary.max_pinch_force:g} N <= {PINCH_FORCE_CAP_N:g} N",
        ),
        BenchmarkFinding(
            criterion="angular speed",
            value=summary.max_angular_speed,
            threshold=MIN_ANGULAR_SPEED_DEG_S,
            passed=summary.max_angular_speed >= MIN_ANGULAR_SPEED_DEG_S,
            detail=f"{summary.max_angular_speed:g} deg/s >= {MIN_ANGULAR_SPEED_DEG_S:g} deg/s",
        ),
        BenchmarkFinding(
            criterion="actuator count",
            value=float(summary.actuator_count),
            threshold=None,
            passed=None,
            detail=f"{summary.actuator_count} actuators (informational, fewer preferred)",
        ),
    ]
    return findings


def design_report(summary: DesignSummary, servo: ServoSpec | None = None,
                  pinch_force=PINCH_FORCE_CAP_N, reach=53.0,
                  moment_arm=DEFAULT_JOINT_MOMENT_ARM_MM):
    """Plain-text design report: sizing numbers plus benchmark findings."""
    servo = servo or ServoSpec()
    tension = required_tension(pinch_force, reach, moment_arm)
    torque = servo_torque(servo.horn_diameter, -tension, 90.0)
    lines = [
        "hand design report",
        "==================",
        "assumption: frictionless tendon routing",
        "",
        f"pinch force          : {pinch_force:g} N",
        f"fingertip reach      : {reach:g} mm",
        f"tendon moment arm    : {moment_arm:g} mm",
        f"required tension     : {tension:.1f} N",
        f"servo horn diameter  : {servo.horn_diameter:g} mm",
        f"minimum servo torque : {torque:.1f} N*mm",
        "",
        "benchmark findings",
        "------------------",
    ]
    for f in check_benchmarks(summary):
        status = "INFO" if f.passed is None else ("PASS" if f.passed else "FAIL")
        lines.append(f"[{status}] {f.criterion}: {f.detail}")
    return "\n".join(lines) + "\n"
