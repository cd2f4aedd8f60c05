import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from locomanip.spatial import (
    Frame,
    FrameError,
    Pose,
    Rotation,
    Twist,
    Wrench,
    pose_error_world,
    rotate_wrench,
    se3_exp,
    se3_log,
    skew,
    so3_exp,
    so3_log,
)


def random_pose(rng, max_angle=np.pi - 1e-3):
    return Pose(Rotation.random(rng, max_angle), rng.uniform(-2.0, 2.0, 3))


def matrix_log_oracle(pose):
    """Independent numerical matrix logarithm of the homogeneous 4x4."""
    xi_hat = scipy.linalg.logm(pose.as_matrix())
    return np.concatenate([np.real(xi_hat[:3, 3]), np.array([
        np.real(xi_hat[2, 1]), np.real(xi_hat[0, 2]), np.real(xi_hat[1, 0])])])


class TestSkew:
    def test_basis_cross_product(self):
        e = np.eye(3)
        assert_allclose(skew(e[0]) @ e[1], e[2])

    def test_zero(self):
        assert_allclose(skew(np.zeros(3)), np.zeros((3, 3)))

    def test_matches_cross(self):
        a, b = np.array([1.0, 2.0, 3.0]), np.array([4.0, 5.0, 6.0])
        assert_allclose(skew(a) @ b, np.cross(a, b))

    @given(st.lists(st.floats(-10, 10), min_size=6, max_size=6))
    def test_cross_property(self, vals):
        a, b = np.array(vals[:3]), np.array(vals[3:])
        assert_allclose(skew(a) @ b, np.cross(a, b), atol=1e-12)


class TestSe3Log:
    def test_identity(self):
        assert_allclose(se3_log(Pose.identity()), np.zeros(6))

    def test_pure_translation(self):
        p = Pose.from_translation([0.1, 0.0, 0.0])
        assert_allclose(se3_log(p), [0.1, 0, 0, 0, 0, 0])

    def test_quarter_turn_with_translation(self):
        # Frozen from the eigendecomposition-based matrix log oracle.
        p = Pose(Rotation.from_axis_angle([0, 0, 1], np.pi / 2), np.array([1.0, 0.0, 0.0]))
        expected = np.array([np.pi / 4, -np.pi / 4, 0.0, 0.0, 0.0, np.pi / 2])
        assert_allclose(se3_log(p), expected, atol=1e-12)
        assert_allclose(matrix_log_oracle(p), expected, atol=1e-9)

    def test_round_trip_bulk(self):
        # 1e4 random poses with |angular| <= 3.0 rad.
        rng = np.random.default_rng(7)
        for _ in range(10_000):
            w = rng.standard_normal(3)
            w *= rng.uniform(0.0, 3.0) / np.linalg.norm(w)
            xi = np.concatenate([rng.uniform(-2, 2, 3), w])
            assert np.linalg.norm(se3_log(se3_exp(xi)) - xi) <= 1e-8

    def test_inverse_negates_log(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            p = random_pose(rng, max_angle=3.0)
            assert_allclose(se3_log(p.inverse()), -se3_log(p), atol=1e-9)

    def test_near_pi_never_fails(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            axis = rng.standard_normal(3)
            axis /= np.linalg.norm(axis)
            for angle in (np.pi, np.pi - 5e-8, np.pi - 1e-9):
                r = Rotation.from_axis_angle(axis, angle)
                w = so3_log(r.matrix)
                assert np.linalg.norm(w) <= np.pi + 1e-9
                assert_allclose(so3_exp(w), r.matrix, atol=1e-6)

    def test_pi_axis_sign_convention_deterministic(self):
        r = Rotation.from_axis_angle([1, 0, 0], np.pi)
        w1 = so3_log(r.matrix)
        w2 = so3_log(r.matrix.copy())
        assert_allclose(w1, w2)
        assert w1[np.argmax(np.abs(w1))] > 0

    @settings(max_examples=200)
    @given(st.integers(0, 2**32 - 1))
    def test_round_trip_property(self, seed):
        rng = np.random.default_rng(seed)
        w = rng.standard_normal(3)
        w *= rng.uniform(0.0, 3.0) / np.linalg.norm(w)
        xi = np.concatenate([rng.uniform(-2, 2, 3), w])
        assert np.linalg.norm(se3_log(se3_exp(xi)) - xi) <= 1e-8


class TestRotation:
    def test_rejects_non_orthonormal(self):
        with pytest.raises(ValueError):
            Rotation(np.eye(3) * 2.0)

    def test_rejects_reflection(self):
        with pytest.raises(ValueError):
            Rotation(np.diag([1.0, 1.0, -1.0]))

    def test_orthonormalized_projects_back(self):
        rng = np.random.default_rng(0)
        r = Rotation.random(rng)
        drifted = r.matrix + 1e-8 * rng.standard_normal((3, 3))
        fixed = Rotation(drifted).orthonormalized()
        assert_allclose(fixed.matrix.T @ fixed.matrix, np.eye(3), atol=1e-12)


class TestRotateWrench:
    def test_identity(self):
        w = Wrench([1.0, 2, 3], [4, 5, 6.0], Frame.SENSOR)
        out = rotate_wrench(w, Rotation.identity(), Frame.SENSOR, Frame.WORLD)
        assert_allclose(out.force, w.force)
        assert_allclose(out.torque, w.torque)
        assert out.frame is Frame.WORLD

    def test_basis_rotation(self):
        r = Rotation.from_axis_angle([0, 0, 1], np.pi / 2)
        out = rotate_wrench(Wrench([1, 0, 0], [0, 0, 0], Frame.SENSOR), r, Frame.SENSOR, Frame.WORLD)
        assert_allclose(out.force, [0, 1, 0], atol=1e-12)

    def test_frame_mismatch_raises(self):
        w = Wrench([1, 0, 0], [0, 0, 0], Frame.WORLD)
        with pytest.raises(FrameError):
            rotate_wrench(w, Rotation.identity(), Frame.SENSOR, Frame.WORLD)

    @settings(max_examples=100)
    @given(st.integers(0, 2**32 - 1))
    def test_norm_preserved(self, seed):
        rng = np.random.default_rng(seed)
        w = Wrench(rng.standard_normal(3), rng.standard_normal(3), Frame.SENSOR)
        out = rotate_wrench(w, Rotation.random(rng), Frame.SENSOR, Frame.WORLD)
        assert abs(np.linalg.norm(out.force) - np.linalg.norm(w.force)) <= 1e-12
        assert abs(np.linalg.norm(out.torque) - np.linalg.norm(w.torque)) <= 1e-12


class TestVectorTypes:
    def test_twist_round_trip(self):
        t = Twist.from_vector(np.arange(6.0), Frame.BASE)
        assert_allclose(t.as_vector(), np.arange(6.0))
        assert t.frame is Frame.BASE

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            Twist([np.nan, 0, 0], [0, 0, 0])
        with pytest.raises(ValueError):
            Wrench([np.inf, 0, 0], [0, 0, 0])


class TestPoseErrorWorld:
    def test_zero_at_reference(self):
        rng = np.random.default_rng(1)
        p = random_pose(rng)
        assert_allclose(pose_error_world(p, p), np.zeros(6), atol=1e-12)

    def test_translation_only(self):
        ref = Pose.identity()
        cur = Pose.from_translation([0.1, -0.2, 0.3])
        assert_allclose(pose_error_world(cur, ref), [0.1, -0.2, 0.3, 0, 0, 0])

    def test_world_rotation_equivariance(self):
        rng = np.random.default_rng(5)
        ref, cur = random_pose(rng, 1.0), random_pose(rng, 1.0)
        e = pose_error_world(cur, ref)
        r = Rotation.random(rng)
        rp = Pose(r)
        e_rot = pose_error_world(rp @ cur, rp @ ref)
        assert_allclose(e_rot[:3], r.apply(e[:3]), atol=1e-9)
        assert_allclose(e_rot[3:], r.apply(e[3:]), atol=1e-9)
