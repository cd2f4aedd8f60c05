"""Synthetic trot gait: deterministic foot kinematics and ground reaction
forces consistent with the commanded base motion, feeding the estimator the
same kind of signals real leg odometry would see, without contact physics.

Diagonal pairs (FL+RR, FR+RL) alternate. Stance feet are pinned to world
anchors (zero world velocity by construction); swing feet follow a smoothed
cycloid with a sinusoidal height bump. GRFs are allocated over stance feet
by a least-squares force/torque balance so they sum to m(a - g) and produce
the base's angular acceleration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..estimator import LegMeasurement

LEG_NAMES = ("FL", "FR", "RL", "RR")
_PHASE_OFFSETS = np.array([0.0, 0.5, 0.5, 0.0])  # trot pairing


@dataclass(frozen=True)
class GaitSynthParams:
    period: float = 0.5
    duty: float = 0.6
    step_height: float = 0.08
    stance_x: float = 0.19
    stance_y: float = 0.12
    body_height: float = 0.30
    grf_scale: float = 1.0       # process-model bias knob: scales GRFs fed to the filter
    grf_noise_std: float = 0.0   # N, per component, on the fed GRFs
    foot_vel_noise_std: float = 0.0  # m/s on fed foot velocities
    imu_noise_std: float = 0.0   # rad/s on fed gyro

    def __post_init__(self):
        if not 0.0 < self.duty <= 1.0:
            raise ValueError("duty factor must be in (0, 1]")
        if self.period <= 0.0:
            raise ValueError("gait period must be > 0")

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "duty": self.duty,
            "step_height": self.step_height,
            "stance_x": self.stance_x,
            "stance_y": self.stance_y,
            "body_height": self.body_height,
            "grf_scale": self.grf_scale,
            "grf_noise_std": self.grf_noise_std,
            "foot_vel_noise_std": self.foot_vel_noise_std,
            "imu_noise_std": self.imu_noise_std,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GaitSynthParams":
        return cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})

    def nominal_offsets(self) -> np.ndarray:
        """Foot positions under the hips, body frame, relative to the com."""
        sx, sy, h = self.stance_x, self.stance_y, self.body_height
        return np.array(
            [[sx, sy, -h], [sx, -sy, -h], [-sx, sy, -h], [-sx, -sy, -h]]
        )


@dataclass
class GaitState:
    """Swing bookkeeping: where each foot lifted off and where it will land."""

    anchors: np.ndarray  # (4, 3) world touchdown anchors for stance feet
    liftoff: np.ndarray  # (4, 3) world positions at the last liftoff
    was_stance: np.ndarray  # (4,) contact at the previous query

    @classmethod
    def initial(cls, params: GaitSynthParams, base_pos: np.ndarray, rot_wb: np.ndarray) -> "GaitState":
        anchors = base_pos + params.nominal_offsets() @ rot_wb.T
        anchors[:, 2] = 0.0
        return cls(anchors.copy(), anchors.copy(), np.ones(4, dtype=bool))


def _swing_xy_blend(s: float) -> tuple[float, float]:
    """Cycloid-style blend with zero velocity at both ends; returns value and
    derivative with respect to s."""
    return s - np.sin(2 * np.pi * s) / (2 * np.pi), 1.0 - np.cos(2 * np.pi * s)


def gait_synthesize(
    params: GaitSynthParams,
    state: GaitState,
    t: float,
    base_pos: np.ndarray,
    rot_wb: np.ndarray,
    v_base: np.ndarray,
    omega_base: np.ndarray,
    accel: np.ndarray,
    omega_dot: np.ndarray,
    mass: float,
    inertia: np.ndarray,
    gravity: np.ndarray,
    rng: np.random.Generator | None = None,
) -> tuple[LegMeasurement, LegMeasurement, dict]:
    """One gait sample.

    Returns (clean, fed, info): ``clean`` is noise-free and force-consistent
    with the true base motion; ``fed`` is what the estimator sees (GRF scale
    bias plus sensor noise); ``info`` carries reward plumbing (foot heights,
    world xy velocities, airtime at touchdown, peak swing height).
    """
    phase = (t / params.period) % 1.0
    leg_phase = (phase + _PHASE_OFFSETS) % 1.0
    in_stance = leg_phase < params.duty
    swing_time = (1.0 - params.duty) * params.period

    foot_pos_w = np.empty((4, 3))
    foot_vel_w = np.empty((4, 3))
    heights = np.zeros(4)
    peaks = np.zeros(4)
    nominal = params.nominal_offsets()

    for i in range(4):
        if in_stance[i]:
            if not state.was_stance[i]:  # touchdown: pin a fresh anchor
                target = base_pos + rot_wb @ nominal[i]
                target[2] = 0.0
                state.anchors[i] = target
            foot_pos_w[i] = state.anchors[i]
            foot_vel_w[i] = 0.0
        else:
            if state.was_stance[i]:  # liftoff
                state.liftoff[i] = state.anchors[i]
            s = (leg_phase[i] - params.duty) / (1.0 - params.duty)
            target = base_pos + rot_wb @ nominal[i] + v_base * swing_time * 0.5
            target[2] = 0.0
            blend, dblend = _swing_xy_blend(s)
            ds_dt = 1.0 / swing_time
            foot_pos_w[i] = state.liftoff[i] + (target - state.liftoff[i]) * blend
            foot_pos_w[i, 2] = params.step_height * np.sin(np.pi * s)
            foot_vel_w[i] = (target - state.liftoff[i]) * dblend * ds_dt
            foot_vel_w[i, 2] = params.step_height * np.pi * np.cos(np.pi * s) * ds_dt
            heights[i] = foot_pos_w[i, 2]
            peaks[i] = params.step_height * np.sin(np.pi * min(s, 0.5))

    first_contact = in_stance & ~state.was_stance
    state.was_stance = in_stance.copy()

    # Stance-force allocation: sum f = m (a - g), sum p x f = Iw wdot.
    grf = np.zeros((4, 3))
    stance_idx = np.flatnonzero(in_stance)
    if len(stance_idx) > 0:
        f_total = mass * (accel - gravity)
        iw = rot_wb @ inertia @ rot_wb.T
        tau_total = iw @ omega_dot
        a_mat = np.zeros((6, 3 * len(stance_idx)))
        for j, i in enumerate(stance_idx):
            p_rel = foot_pos_w[i] - base_pos
            a_mat[:3, 3 * j : 3 * j + 3] = np.eye(3)
            px, py, pz = p_rel
            a_mat[3:, 3 * j : 3 * j + 3] = np.array(
                [[0.0, -pz, py], [pz, 0.0, -px], [-py, px, 0.0]]
            )
        sol = np.linalg.lstsq(a_mat, np.concatenate([f_total, tau_total]), rcond=None)[0]
        for j, i in enumerate(stance_idx):
            grf[i] = sol[3 * j : 3 * j + 3]

    # Body-frame foot kinematics relative to the base com.
    foot_pos_b = (foot_pos_w - base_pos) @ rot_wb
    omega_body = rot_wb.T @ omega_base
    foot_vel_b = (foot_vel_w - v_base) @ rot_wb - np.cross(omega_body, foot_pos_b)

    clean = LegMeasurement(
        contacts=in_stance,
        foot_pos=foot_pos_b,
        foot_vel=foot_vel_b,
        grf=grf,
        omega_imu=omega_body,
        rot_wb=rot_wb.copy(),
    )

    grf_fed = grf * params.grf_scale
    vel_fed = foot_vel_b
    imu_fed = omega_body
    if rng is not None:
        if params.grf_noise_std > 0.0:
            grf_fed = grf_fed + params.grf_noise_std * rng.standard_normal((4, 3))
            grf_fed[~in_stance] = 0.0
        if params.foot_vel_noise_std > 0.0:
            vel_fed = vel_fed + params.foot_vel_noise_std * rng.standard_normal((4, 3))
        if params.imu_noise_std > 0.0:
            imu_fed = imu_fed + params.imu_noise_std * rng.standard_normal(3)
    fed = LegMeasurement(
        contacts=in_stance,
        foot_pos=foot_pos_b,
        foot_vel=vel_fed,
        grf=grf_fed,
        omega_imu=imu_fed,
        rot_wb=rot_wb.copy(),
    )

    info = {
        "foot_heights": heights,
        "foot_peaks": np.where(first_contact, params.step_height, peaks),
        "foot_vel_xy_world": foot_vel_w[:, :2].copy(),
        "first_contact": first_contact,
        "airtime": np.where(first_contact, swing_time, 0.0),
    }
    return clean, fed, info
