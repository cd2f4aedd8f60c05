import numpy as np
import pytest
from numpy.testing import assert_allclose

from locomanip.estimator import (
    EstimatorState,
    LegMeasurement,
    ModelErrorNet,
    NoiseParams,
    RigidBodyParams,
    TrainConfig,
    dynamics_jacobian,
    feature_vector,
    kf_predict,
    kf_update,
    leg_odometry,
    low_pass,
    reduced_dynamics,
    sample_observation_noise,
    train_model_error_net,
)
from locomanip.estimator.network import NetFormatError
from locomanip.spatial import Rotation


def legs_with(contacts, foot_pos=None, foot_vel=None, grf=None, omega_imu=None, rot=None):
    z43 = np.zeros((4, 3))
    return LegMeasurement(
        contacts=np.asarray(contacts, dtype=bool),
        foot_pos=z43 if foot_pos is None else foot_pos,
        foot_vel=z43 if foot_vel is None else foot_vel,
        grf=z43 if grf is None else grf,
        omega_imu=np.zeros(3) if omega_imu is None else omega_imu,
        rot_wb=np.eye(3) if rot is None else rot,
    )


class TestReducedDynamics:
    def test_free_fall(self):
        params = RigidBodyParams(dt=0.002)
        x = np.array([0.1, -0.2, 0.3, 1.0, 0.0, 0.0])
        out = reduced_dynamics(x, legs_with([0, 0, 0, 0]), params)
        assert_allclose(out[:3], x[:3])
        assert_allclose(out[3:], x[3:] + 0.002 * params.gravity)

    def test_hover_equilibrium(self):
        params = RigidBodyParams(mass=15.0, dt=0.002)
        w = 15.0 * 9.81 / 4.0
        foot_pos = np.array([[0.2, 0.15, -0.3], [0.2, -0.15, -0.3], [-0.2, 0.15, -0.3], [-0.2, -0.15, -0.3]])
        grf = np.tile([0.0, 0.0, w], (4, 1))
        params = RigidBodyParams(mass=15.0, gravity=np.array([0, 0, -9.81]), dt=0.002)
        out = reduced_dynamics(np.zeros(6), legs_with([1, 1, 1, 1], foot_pos=foot_pos, grf=grf), params)
        assert_allclose(out, np.zeros(6), atol=1e-12)

    def test_single_foot_hand_oracle(self):
        # torque = (0.2,0,-0.3) x (0,0,60) = (0,-12,0); I^-1 torque = (0,-48,0)
        # dv = dt * ((0,0,60)/15 + (0,0,-9.81)) = (0,0,-0.01162)
        params = RigidBodyParams(mass=15.0, inertia=np.diag([0.1, 0.25, 0.3]), dt=0.002)
        foot_pos = np.zeros((4, 3))
        foot_pos[0] = [0.2, 0.0, -0.3]
        grf = np.zeros((4, 3))
        grf[0] = [0.0, 0.0, 60.0]
        out = reduced_dynamics(np.zeros(6), legs_with([1, 0, 0, 0], foot_pos=foot_pos, grf=grf), params)
        assert_allclose(out[:3], [0.0, -0.096, 0.0], atol=1e-15)
        assert_allclose(out[3:], [0.0, 0.0, 0.002 * (60.0 / 15.0 - 9.81)], atol=1e-15)

    def test_jacobian_is_identity_by_finite_difference(self):
        rng = np.random.default_rng(0)
        params = RigidBodyParams()
        legs = legs_with([1, 0, 1, 0], foot_pos=rng.uniform(-0.3, 0.3, (4, 3)),
                         grf=rng.uniform(-30, 30, (4, 3)), rot=Rotation.random(rng).matrix)
        x0 = rng.standard_normal(6)
        h = 1e-6
        fd = np.empty((6, 6))
        for i in range(6):
            dx = np.zeros(6)
            dx[i] = h
            fd[:, i] = (reduced_dynamics(x0 + dx, legs, params) - reduced_dynamics(x0 - dx, legs, params)) / (2 * h)
        assert_allclose(fd, dynamics_jacobian(params), atol=1e-6)

    def test_invalid_params_rejected(self):
        with pytest.raises(ValueError):
            RigidBodyParams(mass=0.0)
        with pytest.raises(ValueError):
            RigidBodyParams(inertia=np.diag([1.0, 1.0, -1.0]))


class TestLegOdometry:
    def test_no_contact_invalid(self):
        v, valid = leg_odometry(legs_with([0, 0, 0, 0]))
        assert not valid

    def test_direct_substitution(self):
        rng = np.random.default_rng(2)
        r = Rotation.random(rng).matrix
        foot_vel = np.tile(-(r.T @ np.array([0.0, 0.2, 0.0])), (4, 1))
        v, valid = leg_odometry(legs_with([1, 1, 1, 1], foot_vel=foot_vel, rot=r))
        assert valid
        assert_allclose(v, [0.0, 0.2, 0.0], atol=1e-12)

    def test_kinematic_construction_oracle(self):
        # Build body-frame foot kinematics from a known base twist with
        # world-stationary feet; the odometry must invert the construction.
        rng = np.random.default_rng(7)
        for _ in range(20):
            r = Rotation.random(rng).matrix
            v_base = rng.uniform(-0.5, 0.5, 3)
            omega = rng.uniform(-0.5, 0.5, 3)
            com = rng.uniform(-1, 1, 3)
            anchors = rng.uniform(-0.4, 0.4, (4, 3))
            foot_pos = (anchors - com) @ r  # R^T (a - c), rows
            omega_body = r.T @ omega
            foot_vel = np.array([-r.T @ v_base - np.cross(omega_body, p) for p in foot_pos])
            legs = legs_with([1, 1, 1, 1], foot_pos=foot_pos, foot_vel=foot_vel,
                             omega_imu=omega_body, rot=r)
            v, valid = leg_odometry(legs)
            assert valid
            assert_allclose(v, v_base, atol=1e-10)

    def test_partial_contact_averages_only_stance(self):
        r = np.eye(3)
        foot_vel = np.zeros((4, 3))
        foot_vel[0] = [-0.3, 0, 0]
        foot_vel[1] = [99.0, 99.0, 99.0]  # swing leg, must be ignored
        v, valid = leg_odometry(legs_with([1, 0, 0, 0], foot_vel=foot_vel, rot=r))
        assert valid
        assert_allclose(v, [0.3, 0, 0])


def predict_oracle(x, cov, legs, eps, params, q_floor):
    """Independent transcription of the prediction equations."""
    r = legs.rot_wb
    iw_inv = np.linalg.inv(r @ params.inertia @ r.T)
    tau = np.cross(r @ legs.foot_pos.T @ np.eye(4) @ np.ones(4) * 0, np.zeros(3))  # placeholder zero
    tau = np.sum(np.cross((legs.foot_pos @ r.T), legs.grf), axis=0)
    f = legs.grf.sum(axis=0)
    x_model = x + np.concatenate([params.dt * iw_inv @ tau, params.dt * (f / params.mass + params.gravity)])
    x_pred = x_model + eps
    q = np.outer(eps, eps) + q_floor * np.eye(6)
    return x_pred, cov + q


class TestKfPredict:
    def test_zeroed_net_is_pure_model(self):
        rng = np.random.default_rng(1)
        params = RigidBodyParams()
        noise = NoiseParams()
        legs = legs_with([1, 1, 0, 0], foot_pos=rng.uniform(-0.3, 0.3, (4, 3)),
                         grf=rng.uniform(-20, 20, (4, 3)))
        state = EstimatorState(rng.standard_normal(6), np.eye(6) * 0.01, np.zeros(6))
        out = kf_predict(state, legs, None, params, noise)
        assert_allclose(out.x, reduced_dynamics(state.x, legs, params))
        assert_allclose(out.cov, state.cov + noise.q_floor * np.eye(6))

    def test_outer_product_properties(self):
        rng = np.random.default_rng(3)
        eps = rng.standard_normal(6)
        q = np.outer(eps, eps)
        assert np.linalg.matrix_rank(q) <= 1
        assert_allclose(np.trace(q), np.linalg.norm(eps) ** 2)
        # covariance grows in PSD order
        assert np.linalg.eigvalsh(q)[0] >= -1e-12

    def test_matches_independent_oracle(self):
        class ConstNet:
            def __init__(self, eps):
                self.eps = eps

            def predict(self, phi):
                return self.eps

        rng = np.random.default_rng(4)
        params = RigidBodyParams(mass=12.0, inertia=np.diag([0.2, 0.5, 0.6]), dt=0.002)
        noise = NoiseParams()
        state = EstimatorState(rng.standard_normal(6), np.eye(6) * 0.05, np.zeros(6))
        for _ in range(20):
            legs = legs_with(
                rng.integers(0, 2, 4), foot_pos=rng.uniform(-0.3, 0.3, (4, 3)),
                grf=rng.uniform(-25, 25, (4, 3)), omega_imu=rng.uniform(-1, 1, 3),
                rot=Rotation.random(rng).matrix,
            )
            eps = rng.standard_normal(6) * 0.01
            out = kf_predict(state, legs, ConstNet(eps), params, noise)
            x_exp, p_exp = predict_oracle(state.x, state.cov, legs, eps, params, noise.q_floor)
            assert_allclose(out.x, x_exp, atol=1e-12)
            assert_allclose(out.cov, p_exp, atol=1e-12)
            state = out


class TestKfUpdate:
    def test_zero_innovation_keeps_state_shrinks_cov(self):
        state = EstimatorState(np.ones(6), np.eye(6) * 0.1, np.zeros(6))
        out = kf_update(state, np.ones(6), NoiseParams())
        assert_allclose(out.x, state.x, atol=1e-12)
        assert np.trace(out.cov) < np.trace(state.cov)

    def test_scalar_posterior_variance_identity(self):
        # Diagonal everything decouples into textbook scalars: PR/(P+R).
        p0, r0 = 0.04, 0.01
        state = EstimatorState(np.zeros(6), np.eye(6) * p0, np.zeros(6))
        noise = NoiseParams(meas_cov=np.eye(6) * r0)
        out = kf_update(state, np.zeros(6), noise)
        assert_allclose(np.diag(out.cov), np.full(6, p0 * r0 / (p0 + r0)), atol=1e-12)

    def test_invalid_leg_odometry_drops_velocity_rows(self):
        state = EstimatorState(np.zeros(6), np.eye(6), np.zeros(6))
        y = np.array([1.0, 1.0, 1.0, 99.0, 99.0, 99.0])
        out = kf_update(state, y, NoiseParams(), leg_odom_valid=False)
        # velocity part untouched by the bogus measurement
        assert_allclose(out.x[3:], np.zeros(3))
        assert np.all(out.x[:3] > 0.9)  # pulled toward omega measurement
        assert_allclose(out.cov[3:, 3:], np.eye(3), atol=1e-12)

    def test_monte_carlo_improves_on_measurements(self):
        # 200-step constant-velocity truth; gravity-free so the model is an
        # exact identity propagation.
        rng = np.random.default_rng(11)
        params = RigidBodyParams(gravity=np.zeros(3), dt=0.002)
        noise = NoiseParams(meas_cov=np.eye(6) * 0.05**2)
        truth = np.array([0.0, 0.0, 0.1, 0.4, -0.2, 0.0])
        legs = legs_with([1, 1, 1, 1])
        state = EstimatorState(np.zeros(6), np.eye(6) * 0.1, np.zeros(6))
        est_err, meas_err = [], []
        for _ in range(200):
            state = kf_predict(state, legs, None, params, noise)
            y = truth + rng.standard_normal(6) * 0.05
            state = kf_update(state, y, noise)
            est_err.append(state.x - truth)
            meas_err.append(y - truth)
        rmse = lambda e: np.sqrt(np.mean(np.square(e)))
        assert rmse(np.array(est_err)[50:]) < rmse(np.array(meas_err)[50:])

    def test_psd_over_many_cycles(self):
        rng = np.random.default_rng(5)
        params = RigidBodyParams()
        noise = NoiseParams()
        state = EstimatorState(np.zeros(6), np.eye(6) * 0.01, np.zeros(6))
        legs = legs_with([1, 1, 0, 0], grf=rng.uniform(-20, 20, (4, 3)),
                         foot_pos=rng.uniform(-0.3, 0.3, (4, 3)))
        min_eig = np.inf
        for k in range(2000):
            state = kf_predict(state, legs, None, params, noise)
            if k % 2 == 0:
                state = kf_update(state, rng.standard_normal(6) * 0.1, noise, leg_odom_valid=(k % 4 == 0))
            ev = np.linalg.eigvalsh(state.cov)
            min_eig = min(min_eig, ev[0])
            assert np.abs(state.cov - state.cov.T).max() <= 1e-10
        assert min_eig >= -1e-9

    def test_perfect_measurement_pins_state(self):
        # R -> 0: posterior equals the measurement.
        state = EstimatorState(np.ones(6), np.eye(6) * 0.5, np.zeros(6))
        noise = NoiseParams(meas_cov=np.eye(6) * 1e-14)
        y = np.array([0.3, -0.2, 0.1, 0.5, 0.0, -0.4])
        out = kf_update(state, y, noise)
        assert_allclose(out.x, y, atol=1e-8)


class TestLowPass:
    def test_passthrough(self):
        state = EstimatorState(np.ones(6) * 2.0, np.eye(6), np.zeros(6))
        assert_allclose(low_pass(state, 1.0), state.x)

    def test_hold(self):
        state = EstimatorState(np.ones(6), np.eye(6), np.full(6, 7.0))
        for _ in range(10):
            low_pass(state, 0.0)
        assert_allclose(state.x_filtered, np.full(6, 7.0))

    def test_geometric_series_closed_form(self):
        state = EstimatorState(np.ones(6), np.eye(6), np.zeros(6))
        for k in range(1, 30):
            low_pass(state, 0.2)
            assert_allclose(state.x_filtered, np.full(6, 1 - 0.8**k), atol=1e-12)

    def test_alpha_bounds(self):
        state = EstimatorState(np.zeros(6), np.eye(6), np.zeros(6))
        with pytest.raises(ValueError):
            low_pass(state, 1.5)


class TestObservationNoise:
    def test_zero_cov_zero_sample(self):
        rng = np.random.default_rng(0)
        assert_allclose(sample_observation_noise(np.zeros((6, 6)), rng), np.zeros(6))

    def test_identity_cov_variances(self):
        rng = np.random.default_rng(1)
        samples = sample_observation_noise(np.eye(6), rng, size=100_000)
        assert np.all(np.abs(samples.var(axis=0) - 1.0) < 0.03)

    def test_cross_correlations_preserved(self):
        rng = np.random.default_rng(2)
        p = np.eye(6) * 0.5 + np.full((6, 6), 0.5)
        samples = sample_observation_noise(p, rng, size=100_000)
        emp = np.cov(samples.T)
        assert np.all(np.abs(emp - p) < 0.05 * np.abs(p))

    def test_non_psd_rejected(self):
        with pytest.raises(ValueError):
            sample_observation_noise(-np.eye(6), np.random.default_rng(0))


class TestModelErrorNet:
    def test_zeroed_outputs_zero(self):
        net = ModelErrorNet.zeroed()
        rng = np.random.default_rng(0)
        assert_allclose(net.predict(rng.standard_normal(37)), np.zeros(6))

    def test_fit_zero_function(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((512, 37))
        y = np.zeros((512, 6))
        net, _ = train_model_error_net(x, y, TrainConfig(hidden=64, max_epochs=40, seed=1))
        assert np.linalg.norm(net.predict_batch(x), axis=1).max() <= 1e-3

    def test_fit_constant(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((512, 37))
        c = np.array([0.05, -0.02, 0.01, 0.1, -0.07, 0.03])
        y = np.tile(c, (512, 1))
        net, _ = train_model_error_net(
            x, y, TrainConfig(hidden=64, max_epochs=200, batch_size=128, seed=1)
        )
        err = np.abs(net.predict_batch(x) - c)
        assert err.mean() <= 1e-2
        assert err.max() <= 5e-2

    def test_sin_bias_reduces_mse(self):
        rng = np.random.default_rng(5)
        x = rng.uniform(-2, 2, (2000, 37))
        y = np.zeros((2000, 6))
        y[:, 0] = 0.1 * np.sin(x[:, 10])
        pre = float(np.mean(np.sum(y**2, axis=1)))  # zero-predictor baseline
        net, history = train_model_error_net(x, y, TrainConfig(hidden=64, max_epochs=60, seed=2))
        assert history[-1] <= 0.1 * pre

    def test_training_deterministic_per_seed(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal((256, 37))
        y = rng.standard_normal((256, 6)) * 0.1
        cfg = TrainConfig(hidden=32, max_epochs=5, seed=9)
        n1, h1 = train_model_error_net(x, y, cfg)
        n2, h2 = train_model_error_net(x, y, cfg)
        assert h1 == h2
        for w1, w2 in zip(n1.weights, n2.weights):
            assert_allclose(w1, w2)

    def test_save_load_round_trip(self, tmp_path):
        rng = np.random.default_rng(7)
        net = ModelErrorNet.initialized(rng, hidden=32)
        net.x_mean = rng.standard_normal(37)
        net.x_std = np.abs(rng.standard_normal(37)) + 0.5
        path = tmp_path / "net.bin"
        net.save(path, metadata={"loss_final": 0.123})
        loaded = ModelErrorNet.load(path)
        phi = rng.standard_normal(37)
        assert_allclose(loaded.predict(phi), net.predict(phi))
        assert (tmp_path / "net.bin.json").exists()

    def test_truncated_file_rejected(self, tmp_path):
        rng = np.random.default_rng(8)
        net = ModelErrorNet.initialized(rng, hidden=16)
        path = tmp_path / "net.bin"
        net.save(path)
        raw = path.read_bytes()
        path.write_bytes(raw[: len(raw) // 2])
        with pytest.raises(NetFormatError):
            ModelErrorNet.load(path)

    def test_feature_vector_layout(self):
        rng = np.random.default_rng(9)
        legs = legs_with([1, 0, 1, 0], foot_pos=rng.uniform(-1, 1, (4, 3)),
                         grf=rng.uniform(-1, 1, (4, 3)), omega_imu=rng.uniform(-1, 1, 3))
        x = rng.standard_normal(6)
        phi = feature_vector(x, legs)
        assert phi.shape == (37,)
        assert_allclose(phi[:6], x)
        assert_allclose(phi[6:10], [1, 0, 1, 0])
