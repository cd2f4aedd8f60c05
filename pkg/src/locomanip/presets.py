"""Shipped scenario and governor configurations.

These are the pinned experiment definitions the acceptance suite, the CLI
examples, and the scripts share. JSON exports of the same objects live in
configs/ (regenerate with scripts/export_configs.py).
"""

from __future__ import annotations

import numpy as np

from .admittance import AdmittanceGains
from .estimator import NoiseParams
from .governor import AxisConstraints, ConstraintSet, GridSpec
from .sim import GaitSynthParams, Scenario
from .sim.scenario import PiecewiseProfile, ProfileSegment
from .sim.tracker import BaseTrackerParams


def _seg(t0, t1, kind, **params):
    return ProfileSegment(t0, t1, kind, params)


def _const_profile(axis_values: dict[int, float], duration: float) -> PiecewiseProfile:
    return PiecewiseProfile(
        {a: (_seg(0.0, duration, "constant", value=v),) for a, v in axis_values.items()}
    )


NOISY_GAIT = GaitSynthParams(
    grf_noise_std=3.0, foot_vel_noise_std=0.02, imu_noise_std=0.01
)


def compliance_step() -> Scenario:
    """Constant 10 N world-x wrench against pure damping on x.

    Commanded twist settles at exactly 0.5 m/s; the achieved twist follows
    within the tracker lag.
    """
    return Scenario(
        name="compliance_step",
        duration=4.0,
        estimator_mode="truth",
        wrench_frame="world",
        gains=AdmittanceGains(
            np.array([0.0, 0.0, 200.0, 30.0, 30.0, 0.0]),
            np.array([20.0, 20.0, 20.0, 4.0, 4.0, 4.0]),
        ),
        wrench_profile=_const_profile({0: 10.0}, 4.0),
    )


def tracking_25s() -> Scenario:
    """25 s multi-axis interaction profile, kf+nn estimator, default tracker.

    Desk-scale analog of the hardware tracking experiment: compliant xy
    plane, stiff z and rotation, wrenches exercising all six axes.
    """
    d = 25.0
    wrench = PiecewiseProfile({
        0: (
            _seg(0.0, 5.0, "constant", value=8.0),
            _seg(5.0, 10.0, "ramp", start=8.0, end=-6.0),
            _seg(10.0, 18.0, "sine", amplitude=7.0, frequency=0.25),
            _seg(18.0, 25.0, "constant", value=0.0),
        ),
        1: (
            _seg(0.0, 6.0, "sine", amplitude=6.0, frequency=0.2),
            _seg(6.0, 14.0, "constant", value=4.0),
            _seg(14.0, 25.0, "sine", amplitude=5.0, frequency=0.15, phase=0.7),
        ),
        2: (
            _seg(0.0, 12.0, "sine", amplitude=4.0, frequency=0.3),
            _seg(12.0, 25.0, "ramp", start=4.0, end=0.0),
        ),
        3: (
            _seg(0.0, 25.0, "sine", amplitude=0.6, frequency=0.2, phase=0.3),
        ),
        4: (
            _seg(0.0, 25.0, "sine", amplitude=0.6, frequency=0.17),
        ),
        5: (
            _seg(0.0, 10.0, "constant", value=0.4),
            _seg(10.0, 25.0, "sine", amplitude=0.5, frequency=0.12),
        ),
    })
    return Scenario(
        name="tracking_25s",
        duration=d,
        estimator_mode="kf+nn",
        wrench_frame="sensor",
        gains=AdmittanceGains(
            np.array([0.0, 0.0, 200.0, 30.0, 30.0, 0.0]),
            np.array([20.0, 20.0, 20.0, 4.0, 4.0, 4.0]),
        ),
        gait=GaitSynthParams(
            grf_scale=0.85, grf_noise_std=3.0, foot_vel_noise_std=0.02, imu_noise_std=0.01
        ),
        noise=NoiseParams(q_floor=1e-4),
        wrench_profile=wrench,
        degradation_mse_factor=3.0,
    )


def estimator_bias() -> Scenario:
    """Strongly biased process model (GRFs under-reported by 30%) for the
    kf-only vs kf+nn comparison; wrenches keep the base moving so the bias
    is exercised across contact phases."""
    d = 12.0
    return Scenario(
        name="estimator_bias",
        duration=d,
        estimator_mode="kf",
        wrench_frame="world",
        gait=GaitSynthParams(
            grf_scale=0.7, grf_noise_std=3.0, foot_vel_noise_std=0.02, imu_noise_std=0.01
        ),
        noise=NoiseParams(q_floor=1e-4),
        gains=AdmittanceGains(
            np.array([0.0, 0.0, 200.0, 30.0, 30.0, 0.0]),
            np.array([20.0, 20.0, 20.0, 4.0, 4.0, 4.0]),
        ),
        wrench_profile=PiecewiseProfile({
            0: (_seg(0.0, d, "sine", amplitude=8.0, frequency=0.2),),
            1: (_seg(0.0, d, "sine", amplitude=6.0, frequency=0.13, phase=1.0),),
        }),
    )


# Governor experiment: gains, constraints, and grid pinned together.
GOVERNOR_GAINS = {"x": (80.0, 20.0)}
GOVERNOR_CONSTRAINTS = ConstraintSet({
    "x": AxisConstraints(
        position=(-0.25, 0.25), velocity=(-0.6, 0.6), wrench=(-12.0, 12.0),
        kinematic=(-0.3, 0.3),
    )
})
GOVERNOR_GRID = {
    "x": GridSpec(
        mins=np.array([-0.25, -0.25, -0.6, -12.0, -6.0]),
        maxs=np.array([0.25, 0.25, 0.6, 12.0, 6.0]),
        counts=np.array([17, 17, 9, 13, 7]),
    )
}
# Margin absorbs grid quantization: within one cell of a stored sample, the
# commanded velocity can shift by K*(dx/2)/D + (dw/2)/D plus the one-step
# entry-velocity term, ~0.155 here against the 0.18 the margin reserves.
GOVERNOR_MARGIN = 0.15
GOVERNOR_HORIZON = 400
GOVERNOR_DT = 0.025


def governor_scenario(
    seed: int, governed: bool, duration: float = 3.0
) -> Scenario:
    """One randomized constraint-tight run for the safety suite.

    Reference steps intentionally jump beyond the position bound and the
    wrench switches sign hard, reproducing the overshoot that constraint
    enforcement must prevent.
    """
    rng = np.random.default_rng(seed)
    n_steps = 3
    edges = np.linspace(0.0, duration, n_steps + 1)
    ref_segs = []
    wrench_segs = []
    for i in range(n_steps):
        amp = rng.uniform(0.15, 0.4) * rng.choice([-1.0, 1.0])
        ref_segs.append(_seg(edges[i], edges[i + 1], "constant", value=float(amp)))
        w = rng.uniform(2.0, 10.0) * rng.choice([-1.0, 1.0])
        wrench_segs.append(_seg(edges[i], edges[i + 1], "constant", value=float(w)))
    return Scenario(
        name=f"governor_{seed}",
        duration=duration,
        estimator_mode="truth",
        wrench_frame="world",
        governor_enabled=governed,
        gains=AdmittanceGains(
            np.array([GOVERNOR_GAINS["x"][0], 0.0, 200.0, 30.0, 30.0, 0.0]),
            np.array([GOVERNOR_GAINS["x"][1], 20.0, 20.0, 4.0, 4.0, 4.0]),
        ),
        constraints=GOVERNOR_CONSTRAINTS,
        reference_profile=PiecewiseProfile({0: tuple(ref_segs)}),
        wrench_profile=PiecewiseProfile({0: tuple(wrench_segs)}),
        split_crossover=0.15,
        tracker=BaseTrackerParams(time_constants=np.full(6, 0.12)),
        seeds={"tracker": seed * 3 + 1, "sensors": seed * 3 + 2, "observation": seed * 3 + 3},
    )


def fig5_replica(governed: bool) -> Scenario:
    """Deterministic reference-step trajectory with tight position and
    velocity bounds: ungoverned, the step changes overshoot both; governed,
    the references are pulled back into the admissible set."""
    d = 10.0
    refs = PiecewiseProfile({0: (
        _seg(0.0, 2.5, "constant", value=0.0),
        _seg(2.5, 5.0, "constant", value=0.35),
        _seg(5.0, 7.5, "constant", value=-0.35),
        _seg(7.5, 10.0, "constant", value=0.0),
    )})
    wrench = PiecewiseProfile({0: (
        _seg(0.0, 4.0, "constant", value=6.0),
        _seg(4.0, 7.0, "constant", value=-8.0),
        _seg(7.0, 10.0, "constant", value=0.0),
    )})
    return Scenario(
        name="fig5_replica",
        duration=d,
        estimator_mode="truth",
        wrench_frame="world",
        governor_enabled=governed,
        gains=AdmittanceGains(
            np.array([GOVERNOR_GAINS["x"][0], 0.0, 200.0, 30.0, 30.0, 0.0]),
            np.array([GOVERNOR_GAINS["x"][1], 20.0, 20.0, 4.0, 4.0, 4.0]),
        ),
        constraints=GOVERNOR_CONSTRAINTS,
        reference_profile=refs,
        wrench_profile=wrench,
        split_crossover=0.15,
        tracker=BaseTrackerParams(time_constants=np.full(6, 0.12)),
    )


def live_demo() -> Scenario:
    """Idle-at-equilibrium session for interactive steering; wrenches come
    from the UI."""
    return Scenario(
        name="live_demo",
        duration=3600.0,
        estimator_mode="truth",
        governor_enabled=False,
        gains=AdmittanceGains(
            np.array([0.0, 0.0, 200.0, 30.0, 30.0, 0.0]),
            np.array([20.0, 20.0, 20.0, 4.0, 4.0, 4.0]),
        ),
        constraints=GOVERNOR_CONSTRAINTS,
        tracker=BaseTrackerParams(),
    )


PRESETS = {
    "compliance_step": compliance_step,
    "tracking_25s": tracking_25s,
    "estimator_bias": estimator_bias,
    "fig5_replica_governed": lambda: fig5_replica(True),
    "fig5_replica_ungoverned": lambda: fig5_replica(False),
    "live_demo": live_demo,
}
