"""Angle wrapping, smooth L1, and quaternion/Euler conversions."""

import math

import numpy as np
import pytest

from poseuq.pose_math import (
    EulerTriple,
    Pose6,
    UnitQuaternion,
    angular_smooth_l1,
    euler_to_matrix,
    euler_to_quat,
    matrix_to_euler,
    quat_angular_distance,
    quat_to_euler,
    smooth_l1,
    smooth_l1_grad,
    wrap_angle,
)


class TestWrapAngle:
    def test_identity(self):
        assert wrap_angle(0.0) == 0.0

    def test_modular(self):
        assert wrap_angle(1.5 * math.pi) == pytest.approx(-0.5 * math.pi)

    def test_boundary_open_at_minus_pi(self):
        assert wrap_angle(-math.pi) == pytest.approx(math.pi)
        assert wrap_angle(math.pi) == pytest.approx(math.pi)

    def test_idempotent(self):
        rng = np.random.default_rng(0)
        x = rng.uniform(-50, 50, size=1000)
        w = wrap_angle(x)
        np.testing.assert_allclose(wrap_angle(w), w, atol=1e-12)
        assert np.all(w > -math.pi) and np.all(w <= math.pi)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            wrap_angle(math.inf)
        with pytest.raises(ValueError):
            wrap_angle(math.nan)


class TestSmoothL1:
    def test_zero(self):
        assert smooth_l1(0.0) == 0.0

    def test_quadratic_branch(self):
        assert smooth_l1(0.5) == pytest.approx(0.125)

    def test_linear_branch(self):
        assert smooth_l1(3.0) == pytest.approx(2.5)

    def test_even_nonnegative(self):
        rng = np.random.default_rng(1)
        x = rng.uniform(-10, 10, size=1000)
        np.testing.assert_allclose(smooth_l1(x), smooth_l1(-x), atol=1e-15)
        assert np.all(smooth_l1(x) >= 0)
        assert np.all(smooth_l1(x[np.abs(x) > 1e-12]) > 0)

    def test_derivative_continuous_at_one(self):
        h = 1e-7
        left = (smooth_l1(1.0) - smooth_l1(1.0 - h)) / h
        right = (smooth_l1(1.0 + h) - smooth_l1(1.0)) / h
        assert abs(left - right) < 1e-6
        assert abs(smooth_l1_grad(1.0 - 1e-12) - smooth_l1_grad(1.0 + 1e-12)) < 1e-9

    def test_grad_matches_finite_differences(self):
        rng = np.random.default_rng(2)
        x = rng.uniform(-3, 3, size=200)
        h = 1e-6
        fd = (smooth_l1(x + h) - smooth_l1(x - h)) / (2 * h)
        np.testing.assert_allclose(smooth_l1_grad(x), fd, atol=1e-6)


class TestAngularSmoothL1:
    def test_equal_angles(self):
        assert angular_smooth_l1(0.1, 0.1) == 0.0

    def test_wrap_around_shortest_path(self):
        got = angular_smooth_l1(math.pi - 0.05, -math.pi + 0.05)
        assert got == pytest.approx(0.005, abs=1e-12)

    def test_two_pi_periodicity(self):
        assert angular_smooth_l1(2 * math.pi + 0.3, 0.3) == pytest.approx(0.0, abs=1e-12)

    def test_periodicity_multiple_k(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            a, b = rng.uniform(-math.pi, math.pi, size=2)
            ref = angular_smooth_l1(a, b)
            for k in range(-3, 4):
                assert angular_smooth_l1(a + 2 * math.pi * k, b) == pytest.approx(ref, abs=1e-9)


class TestQuatEulerConversion:
    def test_identity_rotation(self):
        e = quat_to_euler(UnitQuaternion(0, 0, 0, 1))
        assert (e.roll, e.pitch, e.yaw) == (0.0, 0.0, 0.0)

    def test_pure_yaw(self):
        q = UnitQuaternion(0, 0, math.sin(math.pi / 4), math.cos(math.pi / 4))
        e = quat_to_euler(q)
        assert e.roll == pytest.approx(0.0, abs=1e-12)
        assert e.pitch == pytest.approx(0.0, abs=1e-12)
        assert e.yaw == pytest.approx(math.pi / 2)

    def test_euler_to_quat_trivials(self):
        q = euler_to_quat(EulerTriple(0, 0, 0))
        np.testing.assert_allclose(q.as_array(), [0, 0, 0, 1], atol=1e-15)
        q = euler_to_quat(EulerTriple(0, 0, math.pi / 2))
        np.testing.assert_allclose(q.as_array(),
                                   [0, 0, math.sqrt(2) / 2, math.sqrt(2) / 2],
                                   atol=1e-12)

    def test_quat_roundtrip_random(self):
        # euler_to_quat composed with quat_to_euler is its own oracle.
        rng = np.random.default_rng(4)
        for _ in range(1000):
            q = rng.normal(size=4)
            q /= np.linalg.norm(q)
            uq = UnitQuaternion(*q)
            back = euler_to_quat(quat_to_euler(uq)).as_array()
            err = min(np.max(np.abs(back - uq.as_array())),
                      np.max(np.abs(back + uq.as_array())))
            assert err < 1e-9

    def test_euler_roundtrip_gimbal_safe(self):
        rng = np.random.default_rng(5)
        for _ in range(500):
            e = EulerTriple(
                rng.uniform(-math.pi, math.pi),
                rng.uniform(-(math.pi / 2 - 0.1), math.pi / 2 - 0.1),
                rng.uniform(-math.pi, math.pi),
            )
            back = quat_to_euler(euler_to_quat(e))
            np.testing.assert_allclose(back.as_array(), e.as_array(), atol=1e-9)

    def test_unit_norm_output(self):
        rng = np.random.default_rng(6)
        for _ in range(200):
            e = EulerTriple(*rng.uniform(-math.pi, math.pi, size=3))
            q = euler_to_quat(e)
            assert abs(np.linalg.norm(q.as_array()) - 1.0) < 1e-12
            assert q.qw >= 0.0

    def test_zero_quaternion_rejected(self):
        with pytest.raises(ValueError):
            UnitQuaternion(0, 0, 0, 0)

    def test_matrix_path_agrees(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            e = EulerTriple(
                rng.uniform(-math.pi, math.pi),
                rng.uniform(-1.4, 1.4),
                rng.uniform(-math.pi, math.pi),
            )
            back = matrix_to_euler(euler_to_matrix(e))
            np.testing.assert_allclose(back.as_array(), e.as_array(), atol=1e-12)


class TestQuatAngularDistance:
    def test_same_quaternion(self):
        q = euler_to_quat(EulerTriple(0.3, -0.2, 1.0))
        assert quat_angular_distance(q, q) == pytest.approx(0.0, abs=1e-9)

    def test_double_cover(self):
        q = euler_to_quat(EulerTriple(0.3, -0.2, 1.0))
        neg = UnitQuaternion(-q.qx, -q.qy, -q.qz, -q.qw)
        assert quat_angular_distance(q, neg) == pytest.approx(0.0, abs=1e-9)

    def test_pure_90deg_yaw(self):
        identity = UnitQuaternion(0, 0, 0, 1)
        yaw90 = euler_to_quat(EulerTriple(0, 0, math.pi / 2))
        assert quat_angular_distance(identity, yaw90) == pytest.approx(math.pi / 2)

    def test_symmetry_and_triangle_inequality(self):
        rng = np.random.default_rng(8)
        for _ in range(500):
            qs = []
            for _ in range(3):
                v = rng.normal(size=4)
                qs.append(UnitQuaternion(*(v / np.linalg.norm(v))))
            a, b, c = qs
            dab = quat_angular_distance(a, b)
            dba = quat_angular_distance(b, a)
            assert abs(dab - dba) < 1e-9
            assert dab <= quat_angular_distance(a, c) + quat_angular_distance(c, b) + 1e-9


class TestPose6:
    def test_vector_roundtrip(self):
        p = Pose6(1.0, -2.0, 0.5, EulerTriple(0.1, -0.2, 0.3))
        np.testing.assert_allclose(Pose6.from_vector(p.as_vector()).as_vector(),
                                   p.as_vector(), atol=1e-15)

    def test_quaternion_form_euler_access(self):
        e = EulerTriple(0.2, 0.1, -0.4)
        p = Pose6(0, 0, 0, euler_to_quat(e))
        np.testing.assert_allclose(p.euler().as_array(), e.as_array(), atol=1e-12)

    def test_euler_wrapped_at_construction(self):
        e = EulerTriple(2 * math.pi + 0.25, 0.0, -math.pi)
        assert e.roll == pytest.approx(0.25)
        assert e.yaw == pytest.approx(math.pi)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            EulerTriple(math.nan, 0, 0)
        with pytest.raises(ValueError):
            Pose6(math.inf, 0, 0, EulerTriple(0, 0, 0))
