"""Base-velocity tracker standing in for the locomotion policy: a per-axis
first-order lag toward the commanded base twist, plus seeded noise and
saturation. The exact exponential discretization makes step responses match
the continuous 1 - exp(-t/tau) closed form at sample times.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class BaseTrackerParams:
    time_constants: np.ndarray = field(default_factory=lambda: np.full(6, 0.25))
    saturation: np.ndarray = field(default_factory=lambda: np.array([1.0] * 3 + [1.5] * 3))
    noise_std: np.ndarray = field(default_factory=lambda: np.full(6, 0.0))
    # Which command axes the base tracks: x/y translation and yaw by default
    # (a quadruped base cannot hold z/roll/pitch offsets); the arm covers the
    # rest through the whole-body map.
    axis_mask: np.ndarray = field(
        default_factory=lambda: np.array([1.0, 1.0, 0.0, 0.0, 0.0, 1.0])
    )
    rate_hz: int = 50

    def __post_init__(self):
        for name in ("time_constants", "saturation", "noise_std", "axis_mask"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (6,):
                raise ValueError(f"{name} must be a 6-vector")
            object.__setattr__(self, name, v)
        if np.any(self.time_constants <= 0.0):
            raise ValueError("time constants must be > 0")
        if self.rate_hz <= 0:
            raise ValueError("tracker rate must be > 0")

    def to_dict(self) -> dict:
        return {
            "time_constants": self.time_constants.tolist(),
            "saturation": self.saturation.tolist(),
            "noise_std": self.noise_std.tolist(),
            "axis_mask": self.axis_mask.tolist(),
            "rate_hz": self.rate_hz,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BaseTrackerParams":
        kwargs = {}
        for name in ("time_constants", "saturation", "noise_std", "axis_mask"):
            if name in d:
                kwargs[name] = np.asarray(d[name], dtype=float)
        if "rate_hz" in d:
            kwargs["rate_hz"] = int(d["rate_hz"])
        return cls(**kwargs)


def base_tracker_step(
    params: BaseTrackerParams,
    achieved: np.ndarray,
    commanded: np.ndarray,
    dt: float,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Advance the achieved base twist one tracker period toward the command."""
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    alpha = 1.0 - np.exp(-dt / params.time_constants)
    out = achieved + alpha * (np.asarray(commanded, dtype=float) - achieved)
    if rng is not None and np.any(params.noise_std > 0.0):
        out = out + params.noise_std * rng.standard_normal(6)
    out = out * params.axis_mask
    return np.clip(out, -params.saturation, params.saturation)
