"""Frame-aware SO(3)/SE(3) primitives shared by the whole controller stack.

Conventions used everywhere in this package:

* 6-vectors are ordered ``[linear; angular]`` (see :data:`LIN` / :data:`ANG`).
* Rotations are stored as 3x3 matrices; quaternions appear only at I/O
  boundaries.
* Twists and wrenches carry a :class:`Frame` tag so frame mixups fail loudly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

# Slices of the canonical 6-vector ordering. Keeping a single constant pair
# prevents silent linear/angular transposition bugs across modules.
LIN = slice(0, 3)
ANG = slice(3, 6)

_ORTHO_TOL = 1e-9
# Below this angle the closed-form log/exp coefficients switch to their
# Taylor expansions; near pi the rotation log switches to axis extraction.
_SMALL_ANGLE = 1e-7
_NEAR_PI = 1e-6


class FrameError(ValueError):
    """Raised when an operation mixes quantities from different frames."""


class Frame(enum.Enum):
    WORLD = "world"
    BASE = "base"
    SENSOR = "sensor"


def skew(v) -> np.ndarray:
    """Cross-product operator: skew(a) @ b == cross(a, b)."""
    x, y, z = np.asarray(v, dtype=float)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def cross3(a, b) -> np.ndarray:
    """Cross product of two 3-vectors; np.cross has ~30x overhead here."""
    return np.array([
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])


def _unskew(m: np.ndarray) -> np.ndarray:
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


@dataclass(frozen=True)
class Rotation:
    """SO(3) element, validated to be orthonormal with det +1."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"rotation matrix must be 3x3, got {m.shape}")
        if np.abs(m.T @ m - np.eye(3)).max() > 1e-6:
            raise ValueError("matrix is not orthonormal")
        if abs(np.linalg.det(m) - 1.0) > 1e-6:
            raise ValueError("matrix determinant is not +1")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls) -> "Rotation":
        return cls(np.eye(3))

    @classmethod
    def from_axis_angle(cls, axis, angle: float) -> "Rotation":
        axis = np.asarray(axis, dtype=float)
        n = np.linalg.norm(axis)
        if n == 0.0:
            raise ValueError("axis must be nonzero")
        return cls(so3_exp(axis / n * angle))

    @classmethod
    def from_rpy(cls, roll: float, pitch: float, yaw: float) -> "Rotation":
        """Intrinsic z-y-x (yaw @ pitch @ roll) convention."""
        rz = so3_exp(np.array([0.0, 0.0, yaw]))
        ry = so3_exp(np.array([0.0, pitch, 0.0]))
        rx = so3_exp(np.array([roll, 0.0, 0.0]))
        return cls(rz @ ry @ rx)

    @classmethod
    def random(cls, rng: np.random.Generator, max_angle: float = np.pi) -> "Rotation":
        axis = rng.standard_normal(3)
        axis /= np.linalg.norm(axis)
        return cls(so3_exp(axis * rng.uniform(0.0, max_angle)))

    def inverse(self) -> "Rotation":
        return Rotation(self.matrix.T)

    def apply(self, v) -> np.ndarray:
        return self.matrix @ np.asarray(v, dtype=float)

    def __matmul__(self, other: "Rotation") -> "Rotation":
        return Rotation(self.matrix @ other.matrix)

    def orthonormalized(self) -> "Rotation":
        """Project back onto SO(3); use after long chains of compositions."""
        u, _, vt = np.linalg.svd(self.matrix)
        d = np.sign(np.linalg.det(u @ vt))
        return Rotation(u @ np.diag([1.0, 1.0, d]) @ vt)


@dataclass(frozen=True)
class Pose:
    """SE(3) element: rotation plus translation (meters)."""

    rotation: Rotation
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        t = np.asarray(self.translation, dtype=float)
        if t.shape != (3,):
            raise ValueError(f"translation must be a 3-vector, got {t.shape}")
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "Pose":
        return cls(Rotation.identity(), np.zeros(3))

    @classmethod
    def from_translation(cls, t) -> "Pose":
        return cls(Rotation.identity(), np.asarray(t, dtype=float))

    def inverse(self) -> "Pose":
        rt = self.rotation.matrix.T
        return Pose(Rotation(rt), -rt @ self.translation)

    def apply(self, p) -> np.ndarray:
        return self.rotation.matrix @ np.asarray(p, dtype=float) + self.translation

    def __matmul__(self, other: "Pose") -> "Pose":
        return Pose(
            self.rotation @ other.rotation,
            self.rotation.matrix @ other.translation + self.translation,
        )

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation.matrix
        m[:3, 3] = self.translation
        return m


def _check_finite(name: str, v: np.ndarray):
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries: {v}")


@dataclass(frozen=True)
class Twist:
    """Linear (m/s) and angular (rad/s) velocity with a frame tag."""

    linear: np.ndarray
    angular: np.ndarray
    frame: Frame = Frame.WORLD

    def __post_init__(self):
        lin = np.asarray(self.linear, dtype=float)
        ang = np.asarray(self.angular, dtype=float)
        _check_finite("twist linear", lin)
        _check_finite("twist angular", ang)
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "angular", ang)

    @classmethod
    def zero(cls, frame: Frame = Frame.WORLD) -> "Twist":
        return cls(np.zeros(3), np.zeros(3), frame)

    @classmethod
    def from_vector(cls, v, frame: Frame = Frame.WORLD) -> "Twist":
        v = np.asarray(v, dtype=float)
        return cls(v[LIN], v[ANG], frame)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.linear, self.angular])


@dataclass(frozen=True)
class Wrench:
    """Force (N) and torque (N*m) with a frame tag."""

    force: np.ndarray
    torque: np.ndarray
    frame: Frame = Frame.WORLD

    def __post_init__(self):
        f = np.asarray(self.force, dtype=float)
        tau = np.asarray(self.torque, dtype=float)
        _check_finite("wrench force", f)
        _check_finite("wrench torque", tau)
        object.__setattr__(self, "force", f)
        object.__setattr__(self, "torque", tau)

    @classmethod
    def zero(cls, frame: Frame = Frame.WORLD) -> "Wrench":
        return cls(np.zeros(3), np.zeros(3), frame)

    @classmethod
    def from_vector(cls, v, frame: Frame = Frame.WORLD) -> "Wrench":
        v = np.asarray(v, dtype=float)
        return cls(v[LIN], v[ANG], frame)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.force, self.torque])


def rotate_wrench(w: Wrench, rot: Rotation, from_frame: Frame, to_frame: Frame) -> Wrench:
    """Re-express a wrench through ``rot`` (maps from_frame vectors into to_frame).

    Force and torque rotate independently; any sensor/end-effector lever
    offset is handled upstream (gravity model), not here.
    """
    if w.frame is not from_frame:
        raise FrameError(f"wrench is in {w.frame}, rotation expects {from_frame}")
    return Wrench(rot.apply(w.force), rot.apply(w.torque), to_frame)


def so3_exp(w) -> np.ndarray:
    """Rodrigues formula; Taylor fallback below the small-angle threshold."""
    w = np.asarray(w, dtype=float)
    theta = np.linalg.norm(w)
    k = skew(w)
    if theta < _SMALL_ANGLE:
        # sin(t)/t ~ 1 - t^2/6, (1-cos t)/t^2 ~ 1/2 - t^2/24
        return np.eye(3) + (1.0 - theta**2 / 6.0) * k + (0.5 - theta**2 / 24.0) * (k @ k)
    a = np.sin(theta) / theta
    b = (1.0 - np.cos(theta)) / theta**2
    return np.eye(3) + a * k + b * (k @ k)


def so3_log(r: np.ndarray) -> np.ndarray:
    """Rotation-vector log of an orthonormal matrix; angle in [0, pi].

    Near pi, where ``R - R^T`` loses the axis, the axis is recovered from the
    largest diagonal element of ``(R + I)/2``; its sign is fixed by making the
    largest-magnitude component positive (ties resolved by lowest index via
    numpy argmax). Deterministic, never fails.
    """
    r = np.asarray(r, dtype=float)
    cos_theta = np.clip((np.trace(r) - 1.0) / 2.0, -1.0, 1.0)
    theta = np.arccos(cos_theta)
    if theta < _SMALL_ANGLE:
        return 0.5 * _unskew(r - r.T)
    if np.pi - theta < _NEAR_PI:
        m = (r + np.eye(3)) / 2.0
        i = int(np.argmax(np.diag(m)))
        axis = m[:, i] / np.sqrt(max(m[i, i], np.finfo(float).tiny))
        axis /= np.linalg.norm(axis)
        if axis[i] < 0.0:
            axis = -axis
        return theta * axis
    return theta / (2.0 * np.sin(theta)) * _unskew(r - r.T)


def _so3_left_jacobian(w: np.ndarray) -> np.ndarray:
    """V such that the SE(3) exp translation is V @ u."""
    theta = np.linalg.norm(w)
    k = skew(w)
    if theta < _SMALL_ANGLE:
        return np.eye(3) + 0.5 * k + (k @ k) / 6.0
    a = (1.0 - np.cos(theta)) / theta**2
    b = (theta - np.sin(theta)) / theta**3
    return np.eye(3) + a * k + b * (k @ k)


def _so3_left_jacobian_inv(w: np.ndarray) -> np.ndarray:
    theta = np.linalg.norm(w)
    k = skew(w)
    if theta < _SMALL_ANGLE:
        return np.eye(3) - 0.5 * k + (k @ k) / 12.0
    # 1/theta^2 * (1 - theta/2 * cot(theta/2)); cot is finite for theta in (0, pi]
    half = theta / 2.0
    coeff = (1.0 - half * np.cos(half) / np.sin(half)) / theta**2
    return np.eye(3) - 0.5 * k + coeff * (k @ k)


def se3_exp(xi) -> Pose:
    """Exponential of a [linear; angular] 6-vector."""
    xi = np.asarray(xi, dtype=float)
    u, w = xi[LIN], xi[ANG]
    return Pose(Rotation(so3_exp(w)), _so3_left_jacobian(w) @ u)


def se3_log(pose: Pose) -> np.ndarray:
    """[linear; angular] 6-vector with exp(se3_log(T)) == T; |angular| <= pi."""
    w = so3_log(pose.rotation.matrix)
    u = _so3_left_jacobian_inv(w) @ pose.translation
    return np.concatenate([u, w])


def pose_error_world(current: Pose, reference: Pose) -> np.ndarray:
    """World-frame pose error used by the admittance spring term.

    The relative error ``se3_log(reference⁻¹ ∘ current)`` lives in the
    reference frame; both halves are rotated by the reference rotation so the
    result transforms like a world-frame twist (rotating the world frame of
    both poses rotates the error accordingly). Equals the plain relative log
    whenever the reference rotation is identity.
    """
    e = se3_log(reference.inverse() @ current)
    rm = reference.rotation.matrix
    return np.concatenate([rm @ e[LIN], rm @ e[ANG]])
