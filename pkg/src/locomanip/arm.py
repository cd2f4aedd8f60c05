"""Serial-arm kinematics: FK, geometric Jacobian, damped pseudo-inverse, and
the whole-body joint-velocity map that makes the arm cover whatever part of a
commanded end-effector twist the base does not provide.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .spatial import ANG, LIN, Frame, Pose, Rotation, Twist, cross3, skew, so3_exp


class SingularityError(RuntimeError):
    """Jacobian was singular and no damping was requested."""


@dataclass(frozen=True)
class Joint:
    """Revolute joint: unit rotation axis in its own frame, placed by a fixed
    parent-frame offset, limited to [limits[0], limits[1]] rad."""

    axis: np.ndarray
    offset: Pose
    limits: tuple[float, float] = (-np.pi, np.pi)

    def __post_init__(self):
        a = np.asarray(self.axis, dtype=float)
        n = np.linalg.norm(a)
        if abs(n - 1.0) > 1e-9:
            raise ValueError(f"joint axis must be unit norm, got |a|={n}")
        if not self.limits[0] < self.limits[1]:
            raise ValueError("joint limits must satisfy lower < upper")
        object.__setattr__(self, "axis", a)


@dataclass(frozen=True)
class ArmModel:
    """Kinematic chain of revolute joints plus a fixed tool offset."""

    joints: tuple[Joint, ...]
    ee_offset: Pose = field(default_factory=Pose.identity)

    def __post_init__(self):
        if len(self.joints) < 1:
            raise ValueError("arm needs at least one joint")
        object.__setattr__(self, "joints", tuple(self.joints))
        # Raw-array views of the chain for the hot kinematics sweeps.
        object.__setattr__(self, "_off_r", np.array([j.offset.rotation.matrix for j in self.joints]))
        object.__setattr__(self, "_off_t", np.array([j.offset.translation for j in self.joints]))
        object.__setattr__(self, "_axes", np.array([j.axis for j in self.joints]))
        object.__setattr__(self, "_ee_r", self.ee_offset.rotation.matrix)
        object.__setattr__(self, "_ee_t", self.ee_offset.translation)

    @property
    def n(self) -> int:
        return len(self.joints)

    @property
    def lower_limits(self) -> np.ndarray:
        return np.array([j.limits[0] for j in self.joints])

    @property
    def upper_limits(self) -> np.ndarray:
        return np.array([j.limits[1] for j in self.joints])

    @classmethod
    def from_dict(cls, d: dict) -> "ArmModel":
        joints = []
        for j in d["joints"]:
            offset = Pose(
                Rotation.from_rpy(*j.get("offset_rpy", (0.0, 0.0, 0.0))),
                np.asarray(j.get("offset_translation", (0.0, 0.0, 0.0)), dtype=float),
            )
            joints.append(
                Joint(
                    axis=np.asarray(j["axis"], dtype=float),
                    offset=offset,
                    limits=tuple(j.get("limits", (-np.pi, np.pi))),
                )
            )
        ee = d.get("ee_offset", {})
        ee_offset = Pose(
            Rotation.from_rpy(*ee.get("rpy", (0.0, 0.0, 0.0))),
            np.asarray(ee.get("translation", (0.0, 0.0, 0.0)), dtype=float),
        )
        return cls(tuple(joints), ee_offset)

    @classmethod
    def load_json(cls, path: str | Path) -> "ArmModel":
        with open(path) as f:
            return cls.from_dict(json.load(f))

    @classmethod
    def default(cls) -> "ArmModel":
        """6-DoF chain with D1-class link lengths (0.12 riser, 0.30 upper,
        0.28 fore, 0.10 wrist stack). These are config defaults only."""
        t = Pose.from_translation
        joints = (
            Joint(np.array([0.0, 0.0, 1.0]), t([0.0, 0.0, 0.12]), (-2.6, 2.6)),
            Joint(np.array([0.0, 1.0, 0.0]), t([0.0, 0.0, 0.0]), (-1.8, 1.8)),
            Joint(np.array([0.0, 1.0, 0.0]), t([0.30, 0.0, 0.0]), (-2.8, 2.8)),
            Joint(np.array([1.0, 0.0, 0.0]), t([0.28, 0.0, 0.0]), (-2.6, 2.6)),
            Joint(np.array([0.0, 1.0, 0.0]), t([0.05, 0.0, 0.0]), (-1.8, 1.8)),
            Joint(np.array([0.0, 0.0, 1.0]), t([0.05, 0.0, 0.0]), (-2.6, 2.6)),
        )
        return cls(joints)


@dataclass
class JointState:
    positions: np.ndarray
    velocities: np.ndarray

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.velocities = np.asarray(self.velocities, dtype=float)
        if self.positions.shape != self.velocities.shape:
            raise ValueError("positions and velocities must have equal length")

    @classmethod
    def zero(cls, n: int) -> "JointState":
        return cls(np.zeros(n), np.zeros(n))


@dataclass
class WholeBodyState:
    """Base pose/twist in world plus the arm joint state.

    ``base_rotation_rate`` is dR/dt of the base rotation; when built from a
    twist it equals skew(omega) @ R.
    """

    base_pose: Pose
    base_twist: Twist
    base_rotation_rate: np.ndarray
    joints: JointState

    @classmethod
    def from_twist(cls, base_pose: Pose, base_twist: Twist, joints: JointState) -> "WholeBodyState":
        if base_twist.frame is not Frame.WORLD:
            raise ValueError("base twist must be expressed in the world frame")
        rdot = skew(base_twist.angular) @ base_pose.rotation.matrix
        return cls(base_pose, base_twist, rdot, joints)


def _sweep(model: ArmModel, q: np.ndarray):
    """Raw-matrix chain walk: world-ified joint axes and origins plus the
    end-effector rotation/translation. One pass feeds FK and the Jacobian."""
    r = np.eye(3)
    p = np.zeros(3)
    axes = np.empty((model.n, 3))
    origins = np.empty((model.n, 3))
    for i in range(model.n):
        p = p + r @ model._off_t[i]
        r = r @ model._off_r[i]
        axes[i] = r @ model._axes[i]
        origins[i] = p
        r = r @ so3_exp(model._axes[i] * q[i])
    p_ee = p + r @ model._ee_t
    r_ee = r @ model._ee_r
    return axes, origins, r_ee, p_ee


def forward_kinematics(model: ArmModel, q) -> Pose:
    """End-effector pose in the arm base frame."""
    q = np.asarray(q, dtype=float)
    _, _, r_ee, p_ee = _sweep(model, q)
    return Pose(Rotation(r_ee), p_ee)


def jacobian(model: ArmModel, q) -> np.ndarray:
    """Geometric Jacobian in the arm base frame, rows [linear; angular]."""
    q = np.asarray(q, dtype=float)
    axes, origins, _, p_ee = _sweep(model, q)
    jac = np.empty((6, model.n))
    for i in range(model.n):
        jac[LIN, i] = cross3(axes[i], p_ee - origins[i])
        jac[ANG, i] = axes[i]
    return jac


def damped_pinv(jac: np.ndarray, lambda_dls: float) -> np.ndarray:
    """J^T (J J^T + lambda^2 I)^{-1}; bounded at singularities for lambda > 0."""
    if lambda_dls < 0.0:
        raise ValueError("damping must be >= 0")
    jac = np.asarray(jac, dtype=float)
    gram = jac @ jac.T
    if lambda_dls == 0.0:
        eig = np.linalg.eigvalsh(gram)
        if eig[0] <= eig[-1] * 1e-12:
            raise SingularityError("J J^T is singular; use lambda_dls > 0")
        return jac.T @ np.linalg.inv(gram)
    return jac.T @ np.linalg.inv(gram + lambda_dls**2 * np.eye(gram.shape[0]))


def whole_body_joint_velocities(
    state: WholeBodyState,
    desired_ee_twist_world: Twist,
    model: ArmModel,
    lambda_dls: float = 1e-4,
) -> np.ndarray:
    """Arm joint velocities realizing the part of a world-frame end-effector
    twist that the base motion does not already provide.

    Computes J# @ R_world_to_base @ [v - v_b - dR x_ee^b ; w - w_b]: the base
    contributes its own twist plus the rotation-induced sweep of the arm, and
    the arm covers the remainder through the damped pseudo-inverse.
    """
    if desired_ee_twist_world.frame is not Frame.WORLD:
        raise ValueError("desired twist must be expressed in the world frame")
    q = state.joints.positions
    axes, origins, _, p_ee = _sweep(model, q)
    jac = np.empty((6, model.n))
    for i in range(model.n):
        jac[LIN, i] = cross3(axes[i], p_ee - origins[i])
        jac[ANG, i] = axes[i]
    r_wb = state.base_pose.rotation.matrix.T
    lin = desired_ee_twist_world.linear - state.base_twist.linear - state.base_rotation_rate @ p_ee
    ang = desired_ee_twist_world.angular - state.base_twist.angular
    body = np.concatenate([r_wb @ lin, r_wb @ ang])
    return damped_pinv(jac, lambda_dls) @ body


def ee_twist_world(state: WholeBodyState, model: ArmModel, qd=None) -> Twist:
    """World-frame end-effector twist from base motion plus arm joint rates."""
    q = state.joints.positions
    qd = state.joints.velocities if qd is None else np.asarray(qd, dtype=float)
    axes, origins, _, p_ee = _sweep(model, q)
    jac = np.empty((6, model.n))
    for i in range(model.n):
        jac[LIN, i] = cross3(axes[i], p_ee - origins[i])
        jac[ANG, i] = axes[i]
    body = jac @ qd
    r = state.base_pose.rotation.matrix
    lin = state.base_twist.linear + state.base_rotation_rate @ p_ee + r @ body[LIN]
    ang = state.base_twist.angular + r @ body[ANG]
    return Twist(lin, ang, Frame.WORLD)


def clamp_to_limits(model: ArmModel, q: np.ndarray, qd: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Clamp integrated positions to limits and zero the violating velocity
    component. Safety net only; constraint handling proper lives in the MOAS."""
    lo, hi = model.lower_limits, model.upper_limits
    clamped = np.clip(q, lo, hi)
    qd = np.where((q < lo) & (qd < 0.0), 0.0, qd)
    qd = np.where((q > hi) & (qd > 0.0), 0.0, qd)
    return clamped, qd
