"""Scenario configuration: everything a reproducible run needs, loadable
from versioned JSON. Wrench/reference schedules are piecewise per-axis
profiles (constant / ramp / sine) that must tile [0, duration] exactly on
every axis they define.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..admittance import AdmittanceGains, GravityModel, TwistLimits
from ..arm import ArmModel
from ..estimator import NoiseParams, RigidBodyParams
from ..governor.constraints import ConstraintSet
from .gait import GaitSynthParams
from .rewards import RewardParams
from .tracker import BaseTrackerParams

SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class ProfileSegment:
    t0: float
    t1: float
    kind: str  # constant | ramp | sine
    params: dict

    def __post_init__(self):
        if self.t1 <= self.t0:
            raise ScenarioError(f"segment must have t1 > t0, got [{self.t0}, {self.t1}]")
        if self.kind not in ("constant", "ramp", "sine"):
            raise ScenarioError(f"unknown segment kind {self.kind!r}")

    def value(self, t: float) -> float:
        if self.kind == "constant":
            return float(self.params["value"])
        if self.kind == "ramp":
            s = (t - self.t0) / (self.t1 - self.t0)
            return float(self.params["start"] + s * (self.params["end"] - self.params["start"]))
        amp = self.params["amplitude"]
        freq = self.params["frequency"]
        phase = self.params.get("phase", 0.0)
        return float(amp * np.sin(2.0 * np.pi * freq * (t - self.t0) + phase))


@dataclass(frozen=True)
class PiecewiseProfile:
    """6-axis piecewise schedule; axes without segments are zero."""

    segments: dict[int, tuple[ProfileSegment, ...]] = field(default_factory=dict)

    def validate(self, duration: float):
        for axis, segs in self.segments.items():
            if not 0 <= axis < 6:
                raise ScenarioError(f"profile axis {axis} out of range 0..5")
            ordered = sorted(segs, key=lambda s: s.t0)
            if abs(ordered[0].t0) > 1e-12 or abs(ordered[-1].t1 - duration) > 1e-9:
                raise ScenarioError(f"axis {axis}: segments must cover [0, {duration}] exactly")
            for a, b in zip(ordered[:-1], ordered[1:]):
                if abs(a.t1 - b.t0) > 1e-9:
                    raise ScenarioError(
                        f"axis {axis}: segments must be contiguous; gap/overlap at t={a.t1}"
                    )

    def value(self, t: float) -> np.ndarray:
        out = np.zeros(6)
        for axis, segs in self.segments.items():
            for seg in segs:
                if seg.t0 <= t < seg.t1 or (t >= seg.t1 and seg is segs[-1]):
                    out[axis] = seg.value(min(t, seg.t1))
                    break
        return out

    def to_dict(self) -> dict:
        return {
            str(axis): [
                {"t0": s.t0, "t1": s.t1, "kind": s.kind, **s.params} for s in segs
            ]
            for axis, segs in self.segments.items()
        }

    @classmethod
    def from_dict(cls, d: dict | None) -> "PiecewiseProfile":
        if not d:
            return cls()
        segments = {}
        for axis, segs in d.items():
            parsed = []
            for s in segs:
                params = {k: v for k, v in s.items() if k not in ("t0", "t1", "kind")}
                parsed.append(ProfileSegment(s["t0"], s["t1"], s["kind"], params))
            segments[int(axis)] = tuple(sorted(parsed, key=lambda seg: seg.t0))
        return cls(segments)


@dataclass
class Scenario:
    name: str = "unnamed"
    duration: float = 10.0
    controller_hz: int = 40
    estimator_hz: int = 500
    estimator_mode: str = "truth"  # truth | kf | kf+nn
    governor_enabled: bool = False
    inject_observation_noise: bool = False
    # Frame the scripted wrench profile is expressed in. "sensor" follows the
    # end-effector (a grasped handle); "world" models a fixed-direction push.
    wrench_frame: str = "sensor"

    wrench_profile: PiecewiseProfile = field(default_factory=PiecewiseProfile)
    reference_profile: PiecewiseProfile = field(default_factory=PiecewiseProfile)
    ref_wrench_profile: PiecewiseProfile = field(default_factory=PiecewiseProfile)

    gains: AdmittanceGains = field(default_factory=AdmittanceGains.default)
    gravity_model: GravityModel = field(default_factory=GravityModel)
    twist_limits: TwistLimits = field(default_factory=TwistLimits)
    constraints: ConstraintSet | None = None
    tracker: BaseTrackerParams = field(default_factory=BaseTrackerParams)
    gait: GaitSynthParams = field(default_factory=GaitSynthParams)
    rigid_body: RigidBodyParams = field(default_factory=RigidBodyParams)
    noise: NoiseParams = field(default_factory=NoiseParams)
    rewards: RewardParams = field(default_factory=RewardParams)

    alpha_lp: float = 0.3
    split_crossover: float = 0.5  # s; base takes frequencies below ~1/(2 pi tau)
    lambda_dls: float = 1e-4
    max_joint_speed: float = 6.0  # rad/s servo rate limit; also tames DLS spikes near singularity
    arm_model: ArmModel = field(default_factory=ArmModel.default)
    arm_q0: np.ndarray = field(
        default_factory=lambda: np.array([0.0, 0.45, -0.9, 0.0, 0.6, 0.0])
    )
    seeds: dict[str, int] = field(
        default_factory=lambda: {"tracker": 1, "sensors": 2, "observation": 3}
    )
    degradation_mse_factor: float = 3.0  # regression guard: kf+nn vs truth MSE ratio bound

    def __post_init__(self):
        if self.duration <= 0:
            raise ScenarioError("duration must be > 0")
        if self.controller_hz <= 0 or self.estimator_hz <= 0:
            raise ScenarioError("rates must be > 0")
        if self.estimator_mode not in ("truth", "kf", "kf+nn"):
            raise ScenarioError(f"unknown estimator mode {self.estimator_mode!r}")
        if self.wrench_frame not in ("sensor", "world"):
            raise ScenarioError(f"unknown wrench frame {self.wrench_frame!r}")
        self.arm_q0 = np.asarray(self.arm_q0, dtype=float)
        for profile in (self.wrench_profile, self.reference_profile, self.ref_wrench_profile):
            profile.validate(self.duration)

    def to_dict(self) -> dict:
        return {
            "version": SCHEMA_VERSION,
            "name": self.name,
            "duration": self.duration,
            "rates": {"controller_hz": self.controller_hz, "estimator_hz": self.estimator_hz},
            "estimator_mode": self.estimator_mode,
            "governor_enabled": self.governor_enabled,
            "inject_observation_noise": self.inject_observation_noise,
            "wrench_frame": self.wrench_frame,
            "wrench_profile": self.wrench_profile.to_dict(),
            "reference_profile": self.reference_profile.to_dict(),
            "ref_wrench_profile": self.ref_wrench_profile.to_dict(),
            "gains": {
                "stiffness": self.gains.stiffness.tolist(),
                "damping": self.gains.damping.tolist(),
            },
            "gravity_model": {
                "mass": self.gravity_model.mass,
                "com_offset": self.gravity_model.com_offset.tolist(),
                "gravity": self.gravity_model.gravity.tolist(),
            },
            "twist_limits": {
                "linear": self.twist_limits.linear,
                "angular": self.twist_limits.angular,
            },
            "constraints": self.constraints.to_dict() if self.constraints else None,
            "tracker": self.tracker.to_dict(),
            "gait": self.gait.to_dict(),
            "rigid_body": {
                "mass": self.rigid_body.mass,
                "inertia_diag": np.diag(self.rigid_body.inertia).tolist(),
                "dt": self.rigid_body.dt,
            },
            "estimator": {
                "meas_cov_diag": np.diag(self.noise.meas_cov).tolist(),
                "q_floor": self.noise.q_floor,
                "alpha_lp": self.alpha_lp,
            },
            "rewards": self.rewards.to_dict(),
            "split_crossover": self.split_crossover,
            "lambda_dls": self.lambda_dls,
            "max_joint_speed": self.max_joint_speed,
            "arm_q0": self.arm_q0.tolist(),
            "seeds": dict(self.seeds),
            "degradation_mse_factor": self.degradation_mse_factor,
        }

    @classmethod
    def from_dict(cls, d: dict, arm_model: ArmModel | None = None) -> "Scenario":
        version = d.get("version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ScenarioError(f"unsupported scenario schema version {version}")
        rates = d.get("rates", {})
        gains = d.get("gains")
        gravity = d.get("gravity_model", {})
        limits = d.get("twist_limits", {})
        rb = d.get("rigid_body", {})
        est = d.get("estimator", {})
        est_hz = int(rates.get("estimator_hz", 500))
        kwargs = dict(
            name=d.get("name", "unnamed"),
            duration=float(d["duration"]),
            controller_hz=int(rates.get("controller_hz", 40)),
            estimator_hz=est_hz,
            estimator_mode=d.get("estimator_mode", "truth"),
            governor_enabled=bool(d.get("governor_enabled", False)),
            inject_observation_noise=bool(d.get("inject_observation_noise", False)),
            wrench_frame=d.get("wrench_frame", "sensor"),
            wrench_profile=PiecewiseProfile.from_dict(d.get("wrench_profile")),
            reference_profile=PiecewiseProfile.from_dict(d.get("reference_profile")),
            ref_wrench_profile=PiecewiseProfile.from_dict(d.get("ref_wrench_profile")),
            alpha_lp=float(est.get("alpha_lp", 0.3)),
            split_crossover=float(d.get("split_crossover", 0.5)),
            lambda_dls=float(d.get("lambda_dls", 1e-4)),
            max_joint_speed=float(d.get("max_joint_speed", 6.0)),
            seeds={k: int(v) for k, v in d.get(
                "seeds", {"tracker": 1, "sensors": 2, "observation": 3}).items()},
            degradation_mse_factor=float(d.get("degradation_mse_factor", 3.0)),
        )
        if gains:
            kwargs["gains"] = AdmittanceGains(
                np.asarray(gains["stiffness"]), np.asarray(gains["damping"])
            )
        if gravity:
            kwargs["gravity_model"] = GravityModel(
                mass=float(gravity.get("mass", 0.0)),
                com_offset=np.asarray(gravity.get("com_offset", [0, 0, 0]), dtype=float),
                gravity=np.asarray(gravity.get("gravity", [0, 0, -9.81]), dtype=float),
            )
        if limits:
            kwargs["twist_limits"] = TwistLimits(
                linear=float(limits.get("linear", 1.0)), angular=float(limits.get("angular", 1.5))
            )
        if d.get("constraints"):
            kwargs["constraints"] = ConstraintSet.from_dict(d["constraints"])
        if d.get("tracker"):
            kwargs["tracker"] = BaseTrackerParams.from_dict(d["tracker"])
        if d.get("gait"):
            kwargs["gait"] = GaitSynthParams.from_dict(d["gait"])
        if rb:
            kwargs["rigid_body"] = RigidBodyParams(
                mass=float(rb.get("mass", 15.0)),
                inertia=np.diag(rb.get("inertia_diag", [0.25, 1.0, 1.0])),
                dt=float(rb.get("dt", 1.0 / est_hz)),
            )
        else:
            kwargs["rigid_body"] = RigidBodyParams(dt=1.0 / est_hz)
        if est.get("meas_cov_diag"):
            kwargs["noise"] = NoiseParams(
                meas_cov=np.diag(est["meas_cov_diag"]), q_floor=float(est.get("q_floor", 1e-8))
            )
        if d.get("rewards"):
            kwargs["rewards"] = RewardParams.from_dict(d["rewards"])
        if arm_model is not None:
            kwargs["arm_model"] = arm_model
        if d.get("arm_q0") is not None:
            kwargs["arm_q0"] = np.asarray(d["arm_q0"], dtype=float)
        return cls(**kwargs)

    @classmethod
    def load_json(cls, path: str | Path) -> "Scenario":
        with open(path) as f:
            doc = json.load(f)
        arm = None
        if isinstance(doc.get("arm_model"), dict):
            arm = ArmModel.from_dict(doc["arm_model"])
        elif isinstance(doc.get("arm_model"), str) and doc["arm_model"] != "default":
            arm = ArmModel.load_json(Path(path).parent / doc["arm_model"])
        return cls.from_dict(doc, arm_model=arm)

    def save_json(self, path: str | Path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))
