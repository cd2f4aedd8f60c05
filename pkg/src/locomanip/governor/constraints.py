"""Per-axis constraint intervals and the 5-D sample grids the admissible-set
construction scans. Axes are decoupled by construction: x, y, z translation
plus rotation about the gripper-base normal axis, each with its own scalar
closed loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Grid dimension order, everywhere: current position, reference position,
# current velocity, external wrench, reference wrench.
DIM_NAMES = ("x", "x_ref", "v", "w", "w_ref")
AXIS_NAMES = ("x", "y", "z", "rot_normal")


def _interval(name, lo, hi):
    if not lo < hi:
        raise ValueError(f"{name} bounds must satisfy lower < upper, got ({lo}, {hi})")
    return (float(lo), float(hi))


@dataclass(frozen=True)
class AxisConstraints:
    """Scalar bounds for one decoupled axis. Units are m / m/s / N for the
    translation axes and rad / rad/s / N*m for the rotation axis."""

    position: tuple[float, float]
    velocity: tuple[float, float]
    wrench: tuple[float, float]
    kinematic: tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "position", _interval("position", *self.position))
        object.__setattr__(self, "velocity", _interval("velocity", *self.velocity))
        object.__setattr__(self, "wrench", _interval("wrench", *self.wrench))
        object.__setattr__(self, "kinematic", _interval("kinematic", *self.kinematic))

    def shrunk(self, margin: float) -> "AxisConstraints":
        """Shrink the governed-output intervals (position, velocity,
        kinematic) by ``margin`` (fraction of width) per side. The wrench
        interval stays full: it bounds an exogenous disturbance the sampled
        set must cover, not an output the governor shapes. Used only inside
        the admissibility simulation so the gridded set stays safe between
        samples."""
        def sh(iv):
            width = iv[1] - iv[0]
            return (iv[0] + margin * width, iv[1] - margin * width)

        return AxisConstraints(sh(self.position), sh(self.velocity), self.wrench, sh(self.kinematic))

    def to_dict(self) -> dict:
        return {
            "position": list(self.position),
            "velocity": list(self.velocity),
            "wrench": list(self.wrench),
            "kinematic": list(self.kinematic),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AxisConstraints":
        return cls(
            tuple(d["position"]), tuple(d["velocity"]),
            tuple(d["wrench"]), tuple(d["kinematic"]),
        )


@dataclass(frozen=True)
class ConstraintSet:
    """Constraints for whichever axes are governed (subset of AXIS_NAMES)."""

    axes: dict[str, AxisConstraints] = field(default_factory=dict)

    def __post_init__(self):
        for name in self.axes:
            if name not in AXIS_NAMES:
                raise ValueError(f"unknown axis {name!r}; expected one of {AXIS_NAMES}")

    def to_dict(self) -> dict:
        return {name: c.to_dict() for name, c in self.axes.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "ConstraintSet":
        return cls({name: AxisConstraints.from_dict(c) for name, c in d.items()})


@dataclass(frozen=True)
class GridSpec:
    """Regular grid over the 5 sample dimensions (DIM_NAMES order)."""

    mins: np.ndarray
    maxs: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        mins = np.asarray(self.mins, dtype=float)
        maxs = np.asarray(self.maxs, dtype=float)
        counts = np.asarray(self.counts, dtype=int)
        if mins.shape != (5,) or maxs.shape != (5,) or counts.shape != (5,):
            raise ValueError("grid spec needs 5 dimensions")
        if np.any(counts < 2):
            raise ValueError("each dimension needs at least 2 points")
        if np.any(mins >= maxs):
            raise ValueError("grid mins must be < maxs")
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)
        object.__setattr__(self, "counts", counts)

    @property
    def total_points(self) -> int:
        return int(np.prod(self.counts))

    def dim_values(self, d: int) -> np.ndarray:
        return np.linspace(self.mins[d], self.maxs[d], self.counts[d])

    def points_for_indices(self, flat_indices: np.ndarray) -> np.ndarray:
        """Grid points for flat row-major indices, shape (n, 5). Row-major
        over DIM_NAMES order fixes the deterministic output ordering."""
        idx = np.asarray(flat_indices, dtype=np.int64)
        out = np.empty((len(idx), 5))
        rem = idx
        for d in reversed(range(5)):
            c = self.counts[d]
            out[:, d] = self.dim_values(d)[rem % c]
            rem = rem // c
        return out

    def normalize(self, points: np.ndarray) -> np.ndarray:
        """Scale each dimension to [0, 1] by its grid range; the distance
        metric of the governor query lives in this space."""
        return (np.asarray(points, dtype=float) - self.mins) / (self.maxs - self.mins)

    def membership_radius(self) -> float:
        """Half the normalized grid-cell diagonal. Diagnostic scale only;
        membership itself is the per-dimension half-cell test (see
        AdmissibleSet.contains_cell), since a Euclidean ball of this radius
        admits reference deviations large enough to break the velocity
        guarantee."""
        cell = 1.0 / (self.counts - 1)
        return 0.5 * float(np.linalg.norm(cell))

    def to_dict(self) -> dict:
        return {"mins": self.mins.tolist(), "maxs": self.maxs.tolist(), "counts": self.counts.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        return cls(np.asarray(d["mins"]), np.asarray(d["maxs"]), np.asarray(d["counts"]))

    @classmethod
    def from_constraints(cls, cons: AxisConstraints, count: int = 21) -> "GridSpec":
        """Default grid: spans each constraint interval; references span the
        same ranges as their measured counterparts."""
        return cls(
            mins=np.array([cons.position[0], cons.position[0], cons.velocity[0], cons.wrench[0], cons.wrench[0]]),
            maxs=np.array([cons.position[1], cons.position[1], cons.velocity[1], cons.wrench[1], cons.wrench[1]]),
            counts=np.full(5, count),
        )
