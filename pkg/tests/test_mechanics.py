import math

import numpy as np
import pytest

from grasplab.errors import DomainError
from grasplab.mechanics import (
    DOWEL_PRESS_FIT_STRENGTH_MPA,
    HAND_DIMENSIONS,
    DesignSummary,
    FingerGeometry,
    OrthotropicMaterial,
    PLA_ORTHOTROPIC,
    ServoSpec,
    check_benchmarks,
    design_report,
    fingertip_reach,
    required_tension,
    safety_factor,
    servo_torque,
)


def chain_reach_oracle(links, angles):
    """Brute-force 2-D accumulation of the planar chain, independent of the
    implementation under test."""
    x = y = 0.0
    heading = 0.0
    for link, ang in zip(links, angles):
        heading += ang
        x += link * math.cos(heading)
        y += link * math.sin(heading)
    return math.hypot(x, y)


class TestRequiredTension:
    def test_worked_pinch_case(self):
        assert required_tension(65, 53, 5) == pytest.approx(689.0, abs=0.01)

    def test_zero_load(self):
        assert required_tension(0, 53, 5) == 0.0

    def test_hand_arithmetic(self):
        assert required_tension(10, 50, 10) == pytest.approx(50.0)

    def test_linearity_in_force_and_reach(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            f, r, l = rng.uniform(0.1, 100, size=3)
            a = rng.uniform(0.1, 10)
            assert required_tension(a * f, r, l) == pytest.approx(
                a * required_tension(f, r, l), rel=1e-12)
            assert required_tension(f, a * r, l) == pytest.approx(
                a * required_tension(f, r, l), rel=1e-12)
            assert required_tension(f, r, a * l) == pytest.approx(
                required_tension(f, r, l) / a, rel=1e-12)

    def test_rejects_bad_inputs(self):
        with pytest.raises(DomainError):
            required_tension(65, 53, 0)
        with pytest.raises(DomainError):
            required_tension(float("nan"), 53, 5)
        with pytest.raises(DomainError):
            required_tension(-1, 53, 5)
        with pytest.raises(DomainError):
            required_tension(65, 53, float("inf"))


class TestServoTorque:
    def test_worked_torque_case(self):
        # the design study quotes -8199 after rounding
        assert servo_torque(23.8, -689, 90) == pytest.approx(-8199.1, abs=0.2)

    def test_zero_angle(self):
        assert servo_torque(23.8, -689, 0) == pytest.approx(0.0, abs=1e-9)

    def test_half_sine(self):
        assert servo_torque(20, 100, 30) == pytest.approx(500.0)

    def test_extremum_at_ninety_degrees(self):
        grid = np.linspace(0, 180, 361)
        mags = [abs(servo_torque(23.8, 689, th)) for th in grid]
        assert np.argmax(mags) == 180  # 90 degrees
        assert mags[180] == max(mags)

    def test_sign_follows_tension(self):
        assert servo_torque(20, 10, 45) > 0
        assert servo_torque(20, -10, 45) < 0

    def test_composition_reproduces_sizing(self):
        torque = servo_torque(23.8, -required_tension(65, 53, 5), 90)
        assert abs(torque - (-8199.1)) <= 0.2

    def test_rejects_bad_angle(self):
        with pytest.raises(DomainError):
            servo_torque(23.8, 100, -5)
        with pytest.raises(DomainError):
            servo_torque(23.8, 100, 200)
        with pytest.raises(DomainError):
            servo_torque(0, 100, 90)


class TestFingertipReach:
    def test_straight_index_is_link_sum(self):
        assert fingertip_reach(HAND_DIMENSIONS["index"], [0, 0, 0]) == pytest.approx(93.5)

    def test_knuckle_rotation_invariance(self):
        # rotating the whole chain about the knuckle cannot change its reach
        geom = HAND_DIMENSIONS["index"]
        assert fingertip_reach(geom, [math.pi / 2, 0, 0]) == pytest.approx(93.5)

    def test_folded_shorter_than_straight(self):
        for geom in HAND_DIMENSIONS.values():
            folded = fingertip_reach(geom, [math.pi / 2] * 3)
            assert folded < geom.total_link_length

    def test_matches_chain_oracle(self):
        rng = np.random.default_rng(11)
        for name, geom in HAND_DIMENSIONS.items():
            links = (geom.link1, geom.link2, geom.link3)
            for _ in range(40):
                angles = rng.uniform(0, math.pi / 2, size=3)
                assert fingertip_reach(geom, angles) == pytest.approx(
                    chain_reach_oracle(links, angles), rel=1e-12)

    def test_never_exceeds_total_length(self):
        rng = np.random.default_rng(12)
        geom = HAND_DIMENSIONS["middle"]
        for _ in range(200):
            angles = rng.uniform(0, math.pi / 2, size=3)
            assert fingertip_reach(geom, angles) <= geom.total_link_length + 1e-9

    def test_near_closed_posture_hits_53mm(self):
        # documented working posture for the pinch-force sizing
        geom = HAND_DIMENSIONS["index"]
        assert fingertip_reach(geom, [0.0, 1.2194, 1.2194]) == pytest.approx(53.0, abs=0.01)

    def test_rejects_out_of_range(self):
        geom = HAND_DIMENSIONS["index"]
        with pytest.raises(DomainError):
            fingertip_reach(geom, [-0.1, 0, 0])
        with pytest.raises(DomainError):
            fingertip_reach(geom, [0, 0, 2.0])
        with pytest.raises(DomainError):
            fingertip_reach(geom, [0, 0])


class TestSafetyFactor:
    def test_dowel_rows(self):
        assert safety_factor(37.8, 113.4) == pytest.approx(3.00, abs=1e-9)
        assert safety_factor(80.0, 108.0) == pytest.approx(1.35, abs=1e-9)

    def test_equal_gives_one(self):
        assert safety_factor(42.0, 42.0) == 1.0

    def test_product_identity(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            stress = rng.uniform(1e-3, 500)
            strength = rng.uniform(1e-3, 500)
            sf = safety_factor(stress, strength)
            assert sf * stress == pytest.approx(strength, rel=1e-9)

    def test_stored_strengths_reproduce_study(self):
        assert safety_factor(37.8, DOWEL_PRESS_FIT_STRENGTH_MPA["Y"]) == pytest.approx(3.00)
        assert safety_factor(80.0, DOWEL_PRESS_FIT_STRENGTH_MPA["Z"]) == pytest.approx(1.35)
        assert safety_factor(81.0, DOWEL_PRESS_FIT_STRENGTH_MPA["X"]) == pytest.approx(1.30)

    def test_rejects_zero_stress(self):
        with pytest.raises(DomainError):
            safety_factor(0.0, 100.0)
        with pytest.raises(DomainError):
            safety_factor(10.0, 0.0)


class TestBenchmarks:
    def test_all_pass(self):
        findings = check_benchmarks(DesignSummary(480, 65, 120, 6))
        checked = [f for f in findings if f.passed is not None]
        assert len(checked) == 3 and all(f.passed for f in checked)

    def test_mass_boundary_is_strict(self):
        findings = check_benchmarks(DesignSummary(500, 65, 120, 6))
        mass = next(f for f in findings if f.criterion == "total mass")
        assert mass.passed is False

    def test_pinch_force_cap(self):
        findings = check_benchmarks(DesignSummary(480, 70, 120, 6))
        pinch = next(f for f in findings if f.criterion == "pinch force cap")
        assert pinch.passed is False

    def test_speed_threshold(self):
        findings = check_benchmarks(DesignSummary(480, 65, 114.9, 6))
        speed = next(f for f in findings if f.criterion == "angular speed")
        assert speed.passed is False
        findings = check_benchmarks(DesignSummary(480, 65, 115.0, 6))
        speed = next(f for f in findings if f.criterion == "angular speed")
        assert speed.passed is True

    def test_actuator_count_informational(self):
        findings = check_benchmarks(DesignSummary(480, 65, 120, 6))
        info = next(f for f in findings if f.criterion == "actuator count")
        assert info.passed is None and info.value == 6

    def test_report_carries_friction_assumption(self):
        text = design_report(DesignSummary(480, 65, 120, 6))
        assert "frictionless" in text
        assert "[PASS] total mass" in text


class TestDomainTypes:
    def test_table_dimensions(self):
        idx = HAND_DIMENSIONS["index"]
        assert (idx.palm_length, idx.link1, idx.link2, idx.link3) == (90.0, 43.5, 26.5, 23.5)
        thumb = HAND_DIMENSIONS["thumb"]
        assert (thumb.palm_length, thumb.link1, thumb.link2, thumb.link3) == (52.0, 45.0, 34.0, 29.5)
        assert HAND_DIMENSIONS["pinky"].link3 == 21.0
        assert len(HAND_DIMENSIONS) == 5

    def test_geometry_rejects_nonpositive(self):
        with pytest.raises(DomainError):
            FingerGeometry("bad", 90, 0, 26.5, 23.5)
        with pytest.raises(DomainError):
            FingerGeometry("bad", 90, 43.5, 26.5, 23.5, joint_moment_arm=-1)

    def test_material_defaults(self):
        m = PLA_ORTHOTROPIC
        assert m.E_x == 2.1e9 and m.E_y == 2.8e9 and m.E_z == 2.8e9
        assert m.G_xy == 1.3725e9 and m.G_yz == 1.5e9 and m.G_xz == 1.5e9
        assert m.nu_xy == m.nu_yz == m.nu_xz == 0.3

    def test_material_rejects_bad_poisson(self):
        with pytest.raises(DomainError):
            OrthotropicMaterial(2e9, 2e9, 2e9, 0.6, 0.3, 0.3, 1e9, 1e9, 1e9)

    def test_servo_spec_validation(self):
        with pytest.raises(DomainError):
            ServoSpec(horn_diameter=0)
        with pytest.raises(DomainError):
            ServoSpec(rated_torque=-5)

    def test_design_summary_rejects_negative(self):
        with pytest.raises(DomainError):
            DesignSummary(-1, 65, 120, 6)
