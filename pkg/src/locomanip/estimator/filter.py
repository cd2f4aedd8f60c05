"""Kalman filter over the base twist with a reduced rigid-body process model,
a learned model-error correction that doubles as the process-noise source
(Q = eps eps^T), leg-odometry + gyro measurements, and an output low-pass.

State ordering here is [omega(3); v(3)] — angular first, matching the reduced
model — unlike the package-wide spatial 6-vectors which are [linear; angular].
Conversions happen at the harness boundary, never implicitly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..spatial import cross3

log = logging.getLogger(__name__)

OMEGA = slice(0, 3)
VEL = slice(3, 6)

N_LEGS = 4
# phi layout: prior state (6), contact flags (4), per-leg GRFs (12), IMU
# angular velocity (3), per-leg foot positions in body frame (12).
N_FEATURES = 37


@dataclass(frozen=True)
class RigidBodyParams:
    """Reduced rigid-body model parameters."""

    mass: float = 15.0
    inertia: np.ndarray = field(default_factory=lambda: np.diag([0.25, 1.0, 1.0]))
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))
    dt: float = 0.002

    def __post_init__(self):
        inertia = np.asarray(self.inertia, dtype=float)
        if self.mass <= 0.0:
            raise ValueError("mass must be > 0")
        if np.abs(inertia - inertia.T).max() > 1e-12 or np.linalg.eigvalsh(inertia)[0] <= 0.0:
            raise ValueError("inertia must be symmetric positive definite")
        object.__setattr__(self, "inertia", inertia)
        object.__setattr__(self, "gravity", np.asarray(self.gravity, dtype=float))


@dataclass(frozen=True)
class NoiseParams:
    """Measurement covariance for [omega_imu(3); v_leg_odom(3)] and the PSD
    floor added to eps eps^T so unexcited subspaces keep process noise."""

    meas_cov: np.ndarray = field(
        default_factory=lambda: np.diag([1e-4] * 3 + [2.5e-3] * 3)
    )
    q_floor: float = 1e-8

    def __post_init__(self):
        r = np.asarray(self.meas_cov, dtype=float)
        if np.abs(r - r.T).max() > 1e-12 or np.linalg.eigvalsh(r)[0] <= 0.0:
            raise ValueError("measurement covariance must be symmetric PD")
        object.__setattr__(self, "meas_cov", r)


@dataclass
class LegMeasurement:
    """Per-step leg/IMU inputs.

    Frame convention (fixed here, used consistently by the gait synthesizer
    and the odometry): foot positions are relative to the base com in the
    body frame; foot velocities are relative to the base in the body frame;
    GRFs are in the world frame; omega_imu is in the body frame; rot_wb is
    the base-to-world rotation matrix.
    """

    contacts: np.ndarray
    foot_pos: np.ndarray
    foot_vel: np.ndarray
    grf: np.ndarray
    omega_imu: np.ndarray
    rot_wb: np.ndarray

    def __post_init__(self):
        self.contacts = np.asarray(self.contacts, dtype=bool)
        self.foot_pos = np.asarray(self.foot_pos, dtype=float)
        self.foot_vel = np.asarray(self.foot_vel, dtype=float)
        self.grf = np.asarray(self.grf, dtype=float)
        self.omega_imu = np.asarray(self.omega_imu, dtype=float)
        self.rot_wb = np.asarray(self.rot_wb, dtype=float)
        if self.contacts.shape != (N_LEGS,):
            raise ValueError("expected 4 contact flags")
        for name in ("foot_pos", "foot_vel", "grf"):
            if getattr(self, name).shape != (N_LEGS, 3):
                raise ValueError(f"{name} must be (4, 3)")

    @property
    def n_contacts(self) -> int:
        return int(self.contacts.sum())


@dataclass
class EstimatorState:
    """Filter state: x = [omega; v] in world, covariance, low-passed output."""

    x: np.ndarray
    cov: np.ndarray
    x_filtered: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.cov = np.asarray(self.cov, dtype=float)
        self.x_filtered = np.asarray(self.x_filtered, dtype=float)

    @classmethod
    def initial(cls, cov_scale: float = 1e-2) -> "EstimatorState":
        return cls(np.zeros(6), np.eye(6) * cov_scale, np.zeros(6), 0.0)


def reduced_dynamics(x: np.ndarray, legs: LegMeasurement, params: RigidBodyParams) -> np.ndarray:
    """One step of the reduced rigid-body model.

    omega += dt * sum_i Iw^{-1} (p_i x f_i), v += dt * (sum_i f_i / m + g),
    with p_i the world-frame foot position relative to the base com and the
    inertia rotated into the world frame.
    """
    x = np.asarray(x, dtype=float)
    r = legs.rot_wb
    inertia_w = r @ params.inertia @ r.T
    torque = np.zeros(3)
    force = np.zeros(3)
    for i in range(N_LEGS):
        p_world = r @ legs.foot_pos[i]
        torque += cross3(p_world, legs.grf[i])
        force += legs.grf[i]
    out = x.copy()
    out[OMEGA] += params.dt * np.linalg.solve(inertia_w, torque)
    out[VEL] += params.dt * (force / params.mass + params.gravity)
    return out


def dynamics_jacobian(params: RigidBodyParams) -> np.ndarray:
    """A_d = dDyn/dx. The reduced model adds only input-dependent terms to
    the state, so the state block is exactly the identity."""
    return np.eye(6)


def leg_odometry(legs: LegMeasurement) -> tuple[np.ndarray, bool]:
    """Base linear velocity from stance feet under the no-slip assumption:
    v = -(1/n_c) sum_contact R (pdot_i + omega_imu x p_i). Invalid with no
    contacts; the caller then drops the linear-velocity measurement rows.
    """
    n_c = legs.n_contacts
    if n_c == 0:
        return np.zeros(3), False
    acc = np.zeros(3)
    for i in range(N_LEGS):
        if legs.contacts[i]:
            acc += legs.rot_wb @ (legs.foot_vel[i] + cross3(legs.omega_imu, legs.foot_pos[i]))
    return -acc / n_c, True


def feature_vector(x_prior: np.ndarray, legs: LegMeasurement) -> np.ndarray:
    """Model-error network input: everything the reduced model consumes plus
    contact context. Layout pinned by N_FEATURES."""
    phi = np.concatenate(
        [
            np.asarray(x_prior, dtype=float),
            legs.contacts.astype(float),
            legs.grf.ravel(),
            legs.omega_imu,
            legs.foot_pos.ravel(),
        ]
    )
    assert phi.shape == (N_FEATURES,)
    return phi


def kf_predict(
    state: EstimatorState,
    legs: LegMeasurement,
    net,
    params: RigidBodyParams,
    noise: NoiseParams,
) -> EstimatorState:
    """Prediction step: model propagation, learned correction eps, process
    noise Q = eps eps^T + floor, covariance through A_d = I.

    ``net`` may be None (pure-model filter); it only needs a
    ``predict(phi) -> (6,)`` method. eps is exogenous: A_d excludes it.
    """
    x_model = reduced_dynamics(state.x, legs, params)
    if net is None:
        eps = np.zeros(6)
    else:
        eps = np.asarray(net.predict(feature_vector(state.x, legs)), dtype=float)
    x_pred = x_model + eps
    q = np.outer(eps, eps) + noise.q_floor * np.eye(6)
    a = dynamics_jacobian(params)
    cov = a @ state.cov @ a.T + q
    cov = (cov + cov.T) / 2.0
    return EstimatorState(x_pred, cov, state.x_filtered.copy(), state.t + params.dt)


def kf_update(
    state: EstimatorState,
    y: np.ndarray,
    noise: NoiseParams,
    leg_odom_valid: bool = True,
) -> EstimatorState:
    """Measurement update with y = [omega_imu_world(3); v_leg_odom(3)].

    C = I over the stacked measurement; rows 3:6 are removed when the leg
    odometry is invalid that step. Implemented in Joseph form (algebraically
    identical to P - K S K^T, numerically PSD-safe).
    """
    y = np.asarray(y, dtype=float)
    rows = np.arange(6) if leg_odom_valid else np.arange(3)
    c = np.eye(6)[rows]
    r = noise.meas_cov[np.ix_(rows, rows)]
    p = state.cov
    s = c @ p @ c.T + r
    s = (s + s.T) / 2.0
    cond = np.linalg.cond(s)
    if not np.isfinite(cond) or cond > 1e12:
        reg = 1e-9 * max(1.0, float(np.trace(s)) / s.shape[0])
        log.warning("innovation covariance ill-conditioned (cond=%.3g); adding %.3g*I", cond, reg)
        s = s + reg * np.eye(s.shape[0])
    gain = np.linalg.solve(s, c @ p).T
    innovation = y[rows] - c @ state.x
    x_post = state.x + gain @ innovation
    ikc = np.eye(6) - gain @ c
    cov = ikc @ p @ ikc.T + gain @ r @ gain.T
    cov = (cov + cov.T) / 2.0
    return EstimatorState(x_post, cov, state.x_filtered.copy(), state.t)


def low_pass(state: EstimatorState, alpha_lp: float) -> np.ndarray:
    """First-order output smoothing: x_f <- alpha x + (1-alpha) x_f.

    Mutates and returns the state's filtered output.
    """
    if not 0.0 <= alpha_lp <= 1.0:
        raise ValueError("smoothing coefficient must be in [0, 1]")
    state.x_filtered = alpha_lp * state.x + (1.0 - alpha_lp) * state.x_filtered
    return state.x_filtered


def sample_observation_noise(
    p: np.ndarray, rng: np.random.Generator, size: int | None = None
) -> np.ndarray:
    """Draw from N(0, P) through the eigenvalue square root, preserving the
    variances and cross-correlations of the estimated state.

    Eigenvalues within tolerance below zero are clamped to zero (P is PSD up
    to roundoff); anything more negative is an error.
    """
    p = np.asarray(p, dtype=float)
    p = (p + p.T) / 2.0
    evals, evecs = np.linalg.eigh(p)
    if evals[0] < -1e-9 * max(1.0, abs(evals[-1])):
        raise ValueError(f"covariance is not PSD (min eigenvalue {evals[0]:.3e})")
    root = evecs @ np.diag(np.sqrt(np.clip(evals, 0.0, None)))
    if size is None:
        return root @ rng.standard_normal(p.shape[0])
    return rng.standard_normal((size, p.shape[0])) @ root.T
