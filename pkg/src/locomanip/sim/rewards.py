"""Locomotion reward terms, evaluated per control step as run metrics.

Tracking terms use phi(x) = exp(-||x||^2 / sigma). Joint torques here are
synthesized from stance GRFs through a fixed lever approximation (no joint
dynamics exist in this simulator); they feed the energy metrics only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TERM_NAMES = (
    "ee_lin_vel_tracking",
    "ee_ang_vel_tracking",
    "joint_torque",
    "action_rate",
    "energy",
    "pose_deviation",
    "stand_still",
    "lin_vel_z",
    "ang_vel_xy",
    "feet_airtime",
    "swing_clearance",
    "swing_height",
    "feet_slip",
    "termination",
)


@dataclass(frozen=True)
class RewardParams:
    sigma: float = 0.25
    h_max: float = 0.08
    k_a: float = 0.5
    vel_active_threshold: float = 0.01  # ||v_ee|| gate shared by several terms
    airtime_target: float = 0.1

    def to_dict(self) -> dict:
        return {"sigma": self.sigma, "h_max": self.h_max, "k_a": self.k_a}

    @classmethod
    def from_dict(cls, d: dict) -> "RewardParams":
        return cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})


@dataclass
class RewardContext:
    q_leg: np.ndarray          # (12,)
    q_default: np.ndarray      # (12,)
    qd_leg: np.ndarray         # (12,)
    torques: np.ndarray        # (12,)
    action: np.ndarray         # (12,)
    action_prev: np.ndarray    # (12,)
    contacts: np.ndarray       # (4,) bool
    first_contact: np.ndarray  # (4,) bool
    airtime: np.ndarray        # (4,) s, air-phase duration, reported at touchdown
    foot_heights: np.ndarray   # (4,) m
    foot_peaks: np.ndarray     # (4,) m, max height of the current swing
    foot_vel_xy: np.ndarray    # (4, 2) world
    base_lin_vel: np.ndarray   # (3,) world
    base_ang_vel: np.ndarray   # (3,) world
    z_b_dot_z_w: float         # cosine between base and world z axes
    cmd_ee_lin: np.ndarray     # (3,) commanded end-effector linear velocity
    cmd_ee_ang: np.ndarray     # (3,)
    cur_ee_lin: np.ndarray     # (3,) achieved
    cur_ee_ang: np.ndarray     # (3,)


def _phi(x: np.ndarray, sigma: float) -> float:
    return float(np.exp(-np.dot(x, x) / sigma))


def eval_rewards(ctx: RewardContext, params: RewardParams = RewardParams()) -> dict[str, float]:
    moving = float(np.linalg.norm(ctx.cur_ee_lin) > params.vel_active_threshold)
    still = float(np.linalg.norm(ctx.cur_ee_lin) < params.vel_active_threshold)
    dq = ctx.q_leg - ctx.q_default
    u = ctx.torques
    out = {
        "ee_lin_vel_tracking": _phi(ctx.cmd_ee_lin - ctx.cur_ee_lin, params.sigma),
        "ee_ang_vel_tracking": _phi(ctx.cmd_ee_ang - ctx.cur_ee_ang, params.sigma),
        "joint_torque": float(np.linalg.norm(u) + np.abs(u).sum()),
        "action_rate": float(np.sum((ctx.action - ctx.action_prev) ** 2)),
        "energy": float(np.abs(ctx.qd_leg) @ np.abs(u)),
        "pose_deviation": _phi(dq, params.sigma),
        "stand_still": float(np.abs(dq).sum()) * still,
        "lin_vel_z": float(ctx.base_lin_vel[2] ** 2),
        "ang_vel_xy": float(ctx.base_ang_vel[0] ** 2 + ctx.base_ang_vel[1] ** 2),
        "feet_airtime": float(
            (ctx.airtime - params.airtime_target) @ ctx.first_contact.astype(float)
        ) * moving,
        "swing_clearance": float(
            np.sum(np.abs(ctx.foot_heights - params.h_max) * np.linalg.norm(ctx.foot_vel_xy, axis=1))
        ),
        "swing_height": float(
            np.sum(
                (ctx.foot_peaks / params.h_max - 1.0) ** 2 * ctx.first_contact.astype(float)
            )
        ) * moving,
        "feet_slip": float(
            np.sum(ctx.contacts * np.sum(ctx.foot_vel_xy**2, axis=1))
        ) * moving,
        "termination": float(ctx.z_b_dot_z_w < 0.0),
    }
    return out


def synth_leg_state(
    info: dict,
    grf: np.ndarray,
    rot_wb: np.ndarray,
    foot_pos_body: np.ndarray,
    params: RewardParams,
    q_default: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Synthesize (q_leg, qd_leg, torques, action) for reward evaluation.

    Joint angles flex with swing height; torques come from a stance-lever
    approximation u = [r x f]_{hip roll, hip pitch}, knee = half hip pitch,
    with GRFs taken to the body frame. Metric plumbing only.
    """
    heights = info["foot_heights"]
    q_leg = q_default.copy()
    qd_leg = np.zeros(12)
    torques = np.zeros(12)
    ratio = np.clip(heights / max(params.h_max, 1e-9), 0.0, 1.5)
    for i in range(4):
        q_leg[3 * i + 1] -= 0.2 * ratio[i]
        q_leg[3 * i + 2] += 0.4 * ratio[i]
        qd_leg[3 * i + 1] = -0.2 * info["foot_vel_xy_world"][i].sum()
        qd_leg[3 * i + 2] = 0.4 * np.linalg.norm(info["foot_vel_xy_world"][i])
        f_body = rot_wb.T @ grf[i]
        lever = np.cross(foot_pos_body[i], f_body)
        torques[3 * i] = lever[0]
        torques[3 * i + 1] = lever[1]
        torques[3 * i + 2] = 0.5 * lever[1]
    action = (q_leg - q_default) / params.k_a
    return q_leg, qd_leg, torques, action
