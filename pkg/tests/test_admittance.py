import numpy as np
import pytest
from numpy.testing import assert_allclose

from locomanip.admittance import (
    AdmittanceGains,
    GravityModel,
    TwistLimits,
    closed_loop_step,
    compute_desired_twist,
    gravity_wrench,
    integrate_pose,
)
from locomanip.spatial import Frame, FrameError, Pose, Rotation, Twist, Wrench

NO_LIMITS = TwistLimits(linear=1e9, angular=1e9)
NO_GRAVITY = GravityModel(mass=0.0)


def pure_damping(d_lin=20.0, d_ang=4.0):
    return AdmittanceGains(np.zeros(6), np.array([d_lin] * 3 + [d_ang] * 3))


class TestGravityWrench:
    def test_zero_mass(self):
        w = gravity_wrench(GravityModel(mass=0.0), Rotation.identity())
        assert_allclose(w.force, np.zeros(3))
        assert_allclose(w.torque, np.zeros(3))

    def test_pure_weight_no_lever(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            w = gravity_wrench(GravityModel(mass=0.5), Rotation.random(rng))
            assert_allclose(w.force, [0.0, 0.0, -4.905])
            assert_allclose(w.torque, np.zeros(3), atol=1e-12)

    def test_com_lever_torque(self):
        # (0.05,0,0) x (0,0,-4.905) = (0, 0.24525, 0), by hand.
        gm = GravityModel(mass=0.5, com_offset=np.array([0.05, 0.0, 0.0]))
        w = gravity_wrench(gm, Rotation.identity())
        assert_allclose(w.torque, [0.0, 0.24525, 0.0], atol=1e-12)

    def test_negative_mass_rejected(self):
        with pytest.raises(ValueError):
            GravityModel(mass=-1.0)


class TestGains:
    def test_zero_damping_rejected(self):
        with pytest.raises(ValueError):
            AdmittanceGains(np.zeros(6), np.zeros(6))

    def test_negative_stiffness_rejected(self):
        with pytest.raises(ValueError):
            AdmittanceGains(-np.ones(6), np.ones(6))


class TestComputeDesiredTwist:
    def test_static_held_mass_is_zero_twist(self):
        # Sensor reads exactly the payload gravity; reference wrench zero,
        # pose at reference: the command must vanish.
        gm = GravityModel(mass=1.2, com_offset=np.array([0.03, -0.01, 0.02]))
        rng = np.random.default_rng(1)
        for _ in range(5):
            r = Rotation.random(rng)
            wg = gravity_wrench(gm, r)
            sensed = Wrench(r.inverse().apply(wg.force), r.inverse().apply(wg.torque), Frame.SENSOR)
            cmd = compute_desired_twist(
                AdmittanceGains.default(), sensed, r, gm,
                Pose.identity(), Wrench.zero(), Pose.identity(),
            )
            assert_allclose(cmd.twist.as_vector(), np.zeros(6), atol=1e-12)

    def test_force_over_damping(self):
        cmd = compute_desired_twist(
            pure_damping(), Wrench([10.0, 0, 0], [0, 0, 0], Frame.SENSOR),
            Rotation.identity(), NO_GRAVITY, Pose.identity(), Wrench.zero(), Pose.identity(),
        )
        assert_allclose(cmd.twist.linear, [0.5, 0.0, 0.0])
        assert_allclose(cmd.twist.angular, np.zeros(3))

    def test_spring_pull_back(self):
        gains = AdmittanceGains(np.array([100.0, 0, 0, 0, 0, 0]), np.full(6, 20.0))
        cmd = compute_desired_twist(
            gains, Wrench.zero(Frame.SENSOR), Rotation.identity(), NO_GRAVITY,
            Pose.identity(), Wrench.zero(), Pose.from_translation([0.1, 0, 0]),
        )
        assert_allclose(cmd.twist.linear, [-0.5, 0.0, 0.0], atol=1e-12)

    def test_saturation_and_presaturation(self):
        cmd = compute_desired_twist(
            pure_damping(d_lin=1.0), Wrench([50.0, 0, 0], [0, 0, 0], Frame.SENSOR),
            Rotation.identity(), NO_GRAVITY, Pose.identity(), Wrench.zero(), Pose.identity(),
            limits=TwistLimits(linear=1.0, angular=1.5),
        )
        assert_allclose(cmd.twist.linear, [1.0, 0.0, 0.0])
        assert_allclose(cmd.presaturation[:3], [50.0, 0.0, 0.0])

    def test_wrong_frame_rejected(self):
        with pytest.raises(FrameError):
            compute_desired_twist(
                pure_damping(), Wrench.zero(Frame.WORLD), Rotation.identity(),
                NO_GRAVITY, Pose.identity(), Wrench.zero(), Pose.identity(),
            )

    def test_superposition_in_pure_damping(self):
        # With K = 0 the map wrench -> twist is linear.
        rng = np.random.default_rng(3)
        gains = pure_damping()
        r = Rotation.random(rng)
        args = (r, NO_GRAVITY, Pose.identity(), Wrench.zero(), Pose.identity(), NO_LIMITS)
        w1 = rng.standard_normal(6)
        w2 = rng.standard_normal(6)
        c1 = compute_desired_twist(gains, Wrench.from_vector(w1, Frame.SENSOR), *args)
        c2 = compute_desired_twist(gains, Wrench.from_vector(w2, Frame.SENSOR), *args)
        c12 = compute_desired_twist(gains, Wrench.from_vector(w1 + w2, Frame.SENSOR), *args)
        assert_allclose(
            c12.twist.as_vector(), c1.twist.as_vector() + c2.twist.as_vector(), atol=1e-12
        )

    def test_world_rotation_invariance_of_body_command(self):
        # Rotating the whole world by R (poses, sensor mounting, gravity,
        # reference wrench) must rotate the commanded world twist by R, i.e.
        # leave the body-frame command unchanged. Needs blockwise-isotropic
        # gains; saturation chosen not to bind.
        rng = np.random.default_rng(12)
        gains = AdmittanceGains(np.array([50.0] * 3 + [8.0] * 3), np.array([20.0] * 3 + [4.0] * 3))
        r_ft = Rotation.random(rng)
        gm = GravityModel(mass=0.7, com_offset=np.array([0.02, 0.01, -0.03]))
        ref = Pose(Rotation.random(rng, 0.6), rng.uniform(-0.5, 0.5, 3))
        cur = Pose(Rotation.random(rng, 0.6), rng.uniform(-0.5, 0.5, 3))
        sensed = Wrench(rng.uniform(-5, 5, 3), rng.uniform(-1, 1, 3), Frame.SENSOR)
        ref_w = Wrench(rng.uniform(-2, 2, 3), rng.uniform(-0.5, 0.5, 3), Frame.WORLD)

        base = compute_desired_twist(gains, sensed, r_ft, gm, ref, ref_w, cur, NO_LIMITS)

        r = Rotation.random(rng)
        rp = Pose(r)
        gm_rot = GravityModel(gm.mass, gm.com_offset, r.apply(gm.gravity))
        ref_w_rot = Wrench(r.apply(ref_w.force), r.apply(ref_w.torque), Frame.WORLD)
        rotated = compute_desired_twist(
            gains, sensed, r @ r_ft, gm_rot, rp @ ref, ref_w_rot, rp @ cur, NO_LIMITS
        )
        assert_allclose(rotated.twist.linear, r.apply(base.twist.linear), atol=1e-9)
        assert_allclose(rotated.twist.angular, r.apply(base.twist.angular), atol=1e-9)


class TestClosedLoop:
    def test_zero_twist_keeps_pose(self):
        pose = Pose.from_translation([0.3, 0.1, -0.2])
        out = integrate_pose(pose, Twist.zero(), 0.025)
        assert_allclose(out.translation, pose.translation)
        assert_allclose(out.rotation.matrix, pose.rotation.matrix)

    def test_euler_step(self):
        out = integrate_pose(Pose.identity(), Twist([0.5, 0, 0], [0, 0, 0]), 0.025)
        assert_allclose(out.translation, [0.0125, 0.0, 0.0])

    def test_dt_bounds(self):
        with pytest.raises(ValueError):
            integrate_pose(Pose.identity(), Twist.zero(), 0.0)
        with pytest.raises(ValueError):
            integrate_pose(Pose.identity(), Twist.zero(), 0.2)

    def test_step_response_matches_rk4_oracle(self):
        # Constant force against a spring: D xdot = W - K x. The Euler
        # trajectory must approach the dense RK4 solution as O(dt).
        from scipy.integrate import solve_ivp

        k, d, w = 100.0, 20.0, 5.0
        gains = AdmittanceGains(
            np.array([k, 0, 0, 0, 0, 0]), np.array([d, d, d, 4.0, 4.0, 4.0])
        )
        sensed = Wrench([w, 0, 0], [0, 0, 0], Frame.SENSOR)

        def run_euler(dt, t_end):
            pose = Pose.identity()
            steps = int(round(t_end / dt))
            for _ in range(steps):
                pose, _ = closed_loop_step(
                    gains, sensed, Rotation.identity(), NO_GRAVITY,
                    Pose.identity(), Wrench.zero(), pose, dt, NO_LIMITS,
                )
            return pose.translation[0]

        sol = solve_ivp(
            lambda t, x: (w - k * x) / d, (0.0, 0.5), [0.0], rtol=1e-10, atol=1e-12
        )
        exact = sol.y[0, -1]
        err_coarse = abs(run_euler(0.01, 0.5) - exact)
        err_fine = abs(run_euler(0.001, 0.5) - exact)
        assert err_fine < err_coarse / 5  # first-order convergence
        assert err_fine < 5e-4

    def test_steady_state_spring_balance(self):
        # After 10 time constants under constant wrench, K * pose_error must
        # equal the applied wrench within 1% per axis.
        k = np.array([100.0, 80.0, 120.0, 10.0, 12.0, 8.0])
        d = np.array([20.0, 20.0, 20.0, 4.0, 4.0, 4.0])
        gains = AdmittanceGains(k, d)
        applied = np.array([4.0, -3.0, 2.0, 0.4, -0.3, 0.2])
        sensed = Wrench.from_vector(applied, Frame.SENSOR)
        dt = 0.002
        t_end = 10.0 * np.max(d / k)
        pose = Pose.identity()
        for _ in range(int(t_end / dt)):
            pose, _ = closed_loop_step(
                gains, sensed, Rotation.identity(), NO_GRAVITY,
                Pose.identity(), Wrench.zero(), pose, dt, NO_LIMITS,
            )
        from locomanip.spatial import pose_error_world

        residual = k * pose_error_world(pose, Pose.identity()) - applied
        assert np.all(np.abs(residual) <= 0.01 * np.abs(applied))
