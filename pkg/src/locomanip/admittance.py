"""Admittance law: sensed end-effector wrenches become commanded twists.

The controller realizes  W - W' = K log(err) + D [v; w]  by solving for the
twist:  [v; w] = D^{-1}( R_ft_w [F; tau] - W' - W_G - K err ), with err the
world-frame spring error between the current and reference pose, W_G the
payload gravity wrench, and the result clamped per axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spatial import (
    ANG,
    LIN,
    Frame,
    FrameError,
    Pose,
    Rotation,
    Twist,
    Wrench,
    cross3,
    pose_error_world,
    so3_exp,
)


@dataclass(frozen=True)
class AdmittanceGains:
    """Diagonal stiffness K and damping D, ordered [linear(3); angular(3)].

    D must be strictly positive (it is inverted); K must be nonnegative.
    """

    stiffness: np.ndarray
    damping: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.stiffness, dtype=float)
        d = np.asarray(self.damping, dtype=float)
        if k.shape != (6,) or d.shape != (6,):
            raise ValueError("gains are 6-vectors of diagonal entries")
        if np.any(d <= 0.0):
            raise ValueError("all damping entries must be > 0")
        if np.any(k < 0.0):
            raise ValueError("stiffness entries must be >= 0")
        object.__setattr__(self, "stiffness", k)
        object.__setattr__(self, "damping", d)

    @classmethod
    def default(cls) -> "AdmittanceGains":
        # Compliant in xy (K=0), stiff in z and rotation; free about the
        # gripper-normal (z) rotation axis. Config-exposed, tuned not cited.
        return cls(
            stiffness=np.array([0.0, 0.0, 200.0, 30.0, 30.0, 0.0]),
            damping=np.array([20.0, 20.0, 20.0, 4.0, 4.0, 4.0]),
        )


@dataclass(frozen=True)
class GravityModel:
    """End-effector payload: mass, com offset in the sensor frame, gravity."""

    mass: float = 0.0
    com_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))

    def __post_init__(self):
        if self.mass < 0.0:
            raise ValueError("mass must be >= 0")
        object.__setattr__(self, "com_offset", np.asarray(self.com_offset, dtype=float))
        object.__setattr__(self, "gravity", np.asarray(self.gravity, dtype=float))


@dataclass(frozen=True)
class TwistLimits:
    """Per-axis saturation of the commanded twist."""

    linear: float = 1.0
    angular: float = 1.5

    def clamp(self, v6: np.ndarray) -> np.ndarray:
        out = v6.copy()
        out[LIN] = np.clip(out[LIN], -self.linear, self.linear)
        out[ANG] = np.clip(out[ANG], -self.angular, self.angular)
        return out


@dataclass(frozen=True)
class AdmittanceCommand:
    """Saturated desired twist plus the references and raw value it came from."""

    twist: Twist
    presaturation: np.ndarray
    ref_pose: Pose
    ref_wrench: Wrench


def gravity_wrench(gm: GravityModel, r_ft_w: Rotation) -> Wrench:
    """World-frame wrench the payload's weight exerts: force m*g, torque from
    the rotated com lever arm."""
    force = gm.mass * gm.gravity
    torque = cross3(r_ft_w.apply(gm.com_offset), force)
    return Wrench(force, torque, Frame.WORLD)


def compute_desired_twist(
    gains: AdmittanceGains,
    sensed: Wrench,
    r_ft_w: Rotation,
    gm: GravityModel,
    ref_pose: Pose,
    ref_wrench: Wrench,
    current_pose: Pose,
    limits: TwistLimits = TwistLimits(),
) -> AdmittanceCommand:
    """Admittance step: world twist from the sensed sensor-frame wrench."""
    if sensed.frame is not Frame.SENSOR:
        raise FrameError("sensed wrench must be in the sensor frame")
    if ref_wrench.frame is not Frame.WORLD:
        raise FrameError("reference wrench must be in the world frame")
    sensed_world = np.concatenate([r_ft_w.apply(sensed.force), r_ft_w.apply(sensed.torque)])
    net = (
        sensed_world
        - ref_wrench.as_vector()
        - gravity_wrench(gm, r_ft_w).as_vector()
        - gains.stiffness * pose_error_world(current_pose, ref_pose)
    )
    presat = net / gains.damping
    sat = limits.clamp(presat)
    return AdmittanceCommand(
        twist=Twist(sat[LIN], sat[ANG], Frame.WORLD),
        presaturation=presat,
        ref_pose=ref_pose,
        ref_wrench=ref_wrench,
    )


def integrate_pose(pose: Pose, twist: Twist, dt: float) -> Pose:
    """One Euler step of the commanded twist: translation advances linearly,
    rotation through the exponential map (stays on SO(3))."""
    if not 0.0 < dt <= 0.1:
        raise ValueError("dt must be in (0, 0.1]")
    rot = Rotation(so3_exp(twist.angular * dt)) @ pose.rotation
    return Pose(rot, pose.translation + twist.linear * dt)


def closed_loop_step(
    gains: AdmittanceGains,
    sensed: Wrench,
    r_ft_w: Rotation,
    gm: GravityModel,
    ref_pose: Pose,
    ref_wrench: Wrench,
    current_pose: Pose,
    dt: float,
    limits: TwistLimits = TwistLimits(),
) -> tuple[Pose, AdmittanceCommand]:
    """Compute the command at the current pose and integrate one step.

    This is the fixed-step closed loop the tests, the MOAS build, and the
    simulator all share.
    """
    cmd = compute_desired_twist(gains, sensed, r_ft_w, gm, ref_pose, ref_wrench, current_pose, limits)
    return integrate_pose(current_pose, cmd.twist, dt), cmd
