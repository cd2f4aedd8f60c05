"""Deterministic fixed-step closed-loop simulation.

One master tick grid at lcm(active component rates) Hz drives three clocks:
the admittance controller (40 Hz default), the base-velocity tracker
(50 Hz), and the estimator (500 Hz, skipped in truth mode). Each controller
step: sense wrench -> govern references -> admittance twist -> split into
base command + arm joint velocities -> log. Tracker ticks advance the base
twist; every master tick integrates poses. Identical scenario + seeds give
bit-identical logs.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..admittance import compute_desired_twist, gravity_wrench
from ..arm import JointState, WholeBodyState, clamp_to_limits, ee_twist_world, forward_kinematics, jacobian, whole_body_joint_velocities
from ..estimator import (
    EstimatorState,
    ModelErrorNet,
    NoiseParams,
    RigidBodyParams,
    feature_vector,
    kf_predict,
    kf_update,
    leg_odometry,
    low_pass,
    reduced_dynamics,
    sample_observation_noise,
)
from ..estimator.dataset import EstimatorDataset
from ..governor import AdmissibleSet, query_governor
from ..spatial import ANG, LIN, Frame, Pose, Rotation, Twist, Wrench, skew, so3_exp, so3_log
from .gait import GaitState, gait_synthesize
from .rewards import TERM_NAMES, RewardContext, eval_rewards, synth_leg_state
from .scenario import Scenario
from .tracker import base_tracker_step

# 6-vector index each governed axis controls; the gripper-base normal is the
# world z rotation axis (level gripper at start).
AXIS_INDEX = {"x": 0, "y": 1, "z": 2, "rot_normal": 5}

Q_LEG_DEFAULT = np.tile([0.0, 0.8, -1.5], 4)


class SimulationNaNError(RuntimeError):
    def __init__(self, step: int, t: float, quantity: str):
        super().__init__(f"non-finite {quantity} at step {step} (t={t:.4f}s)")
        self.step = step
        self.quantity = quantity


@dataclass
class StepLog:
    columns: list[str]
    data: np.ndarray

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    def __len__(self) -> int:
        return len(self.data)


@dataclass
class RunMetrics:
    mse_linear: np.ndarray
    mse_angular: np.ndarray
    violations: dict[str, int]
    reward_totals: dict[str, float]
    estimator_rmse: np.ndarray | None
    n_steps: int

    @property
    def total_violations(self) -> int:
        return sum(self.violations.values())

    def summary(self) -> str:
        lines = [
            f"steps: {self.n_steps}",
            "tracking MSE linear  [m^2/s^2]: "
            + " ".join(f"{axis}={v:.6f}" for axis, v in zip("xyz", self.mse_linear)),
            "tracking MSE angular [rad^2/s^2]: "
            + " ".join(f"{axis}={v:.6f}" for axis, v in zip("xyz", self.mse_angular)),
            "constraint violations: "
            + " ".join(f"{k}={v}" for k, v in self.violations.items()),
        ]
        if self.estimator_rmse is not None:
            lines.append(
                "estimator RMSE [om; v]: "
                + " ".join(f"{v:.4f}" for v in self.estimator_rmse)
            )
        return "\n".join(lines)


@dataclass
class RunResult:
    metrics: RunMetrics
    log: StepLog
    training: EstimatorDataset | None = None


def _log_columns() -> list[str]:
    cols = ["t[s]"]
    cols += [f"cmd_v{a}[m/s]" for a in "xyz"] + [f"cmd_w{a}[rad/s]" for a in "xyz"]
    cols += [f"ach_v{a}[m/s]" for a in "xyz"] + [f"ach_w{a}[rad/s]" for a in "xyz"]
    cols += [f"ee_p{a}[m]" for a in "xyz"] + [f"ee_r{a}[rad]" for a in "xyz"]
    cols += [f"base_p{a}[m]" for a in "xyz"] + [f"base_r{a}[rad]" for a in "xyz"]
    cols += [f"wrench_f{a}[N]" for a in "xyz"] + [f"wrench_t{a}[N*m]" for a in "xyz"]
    cols += [f"ref_off_{i}[mixed]" for i in range(6)]
    cols += [f"gov_off_{i}[mixed]" for i in range(6)]
    cols += [f"refw_{i}[mixed]" for i in range(6)]
    cols += [f"govw_{i}[mixed]" for i in range(6)]
    cols += [f"est_om_{a}[rad/s]" for a in "xyz"] + [f"est_v_{a}[m/s]" for a in "xyz"]
    cols += [f"cov_d{i}[var]" for i in range(6)]
    cols += [f"rw_{name}[-]" for name in TERM_NAMES]
    cols += ["viol_pos[flag]", "viol_vel[flag]", "viol_wrench[flag]"]
    return cols


LOG_COLUMNS = _log_columns()


def _axis_position(axis: str, ee_pos_off: np.ndarray, rot_off: np.ndarray) -> float:
    if axis == "rot_normal":
        return float(rot_off[2])
    return float(ee_pos_off[AXIS_INDEX[axis]])


def run_scenario(
    scenario: Scenario,
    moas_sets: dict[str, AdmissibleSet] | None = None,
    net: ModelErrorNet | None = None,
    collect_training: bool = False,
    wrench_source=None,
    step_callback=None,
) -> RunResult:
    """Run one scenario to completion.

    ``wrench_source(t) -> (6,) or None`` optionally adds a live sensor-frame
    wrench on top of the scripted profile (interactive sessions).
    ``step_callback(snapshot: dict)`` fires after every controller step.
    """
    sc = scenario
    estimating = sc.estimator_mode in ("kf", "kf+nn")
    if sc.estimator_mode == "kf+nn" and net is None:
        raise ValueError("estimator mode kf+nn requires a trained model-error net")
    if sc.governor_enabled and not moas_sets:
        raise ValueError("governor enabled but no admissible sets supplied")
    if collect_training and not estimating:
        raise ValueError("training collection needs an estimating mode (kf or kf+nn)")

    rates = [sc.controller_hz, sc.tracker.rate_hz]
    if estimating:
        rates.append(sc.estimator_hz)
    master_hz = math.lcm(*rates)
    dt_m = 1.0 / master_hz
    dt_ctrl = 1.0 / sc.controller_hz
    dt_trk = 1.0 / sc.tracker.rate_hz
    ctrl_div = master_hz // sc.controller_hz
    trk_div = master_hz // sc.tracker.rate_hz
    est_div = master_hz // sc.estimator_hz if estimating else 0
    total_ticks = round(sc.duration * master_hz)

    rng_tracker = np.random.default_rng(sc.seeds.get("tracker", 1))
    rng_sensors = np.random.default_rng(sc.seeds.get("sensors", 2))
    rng_obs = np.random.default_rng(sc.seeds.get("observation", 3))

    model = sc.arm_model
    gm = sc.gravity_model
    rb = RigidBodyParams(
        mass=sc.rigid_body.mass,
        inertia=sc.rigid_body.inertia,
        gravity=sc.rigid_body.gravity,
        dt=1.0 / sc.estimator_hz,
    )
    noise = sc.noise

    base_rot = np.eye(3)
    base_pos = np.array([0.0, 0.0, sc.gait.body_height])
    q = sc.arm_q0.copy()
    qd = np.zeros(model.n)
    ee0 = Pose(Rotation(base_rot), base_pos) @ forward_kinematics(model, q)
    ee0_pos = ee0.translation.copy()
    rot0 = ee0.rotation.matrix.copy()

    base_twist = np.zeros(6)  # actual, [lin; ang]
    base_cmd_filt = np.zeros(6)
    cmd_sat = np.zeros(6)
    accel = np.zeros(3)
    omega_dot = np.zeros(3)
    alpha_split = 1.0 - math.exp(-dt_ctrl / sc.split_crossover)

    gait_est = GaitState.initial(sc.gait, base_pos, base_rot)
    gait_rw = GaitState.initial(sc.gait, base_pos, base_rot)
    est = EstimatorState.initial()
    use_net = net if sc.estimator_mode == "kf+nn" else None

    rows: list[list[float]] = []
    train_rows: list[tuple[float, np.ndarray, np.ndarray, np.ndarray]] = []
    violations = {"position": 0, "velocity": 0, "wrench": 0}
    reward_totals = {name: 0.0 for name in TERM_NAMES}
    action_prev = np.zeros(12)
    est_err_sq = np.zeros(6)
    est_err_n = 0

    for k in range(total_ticks + 1):
        t = k * dt_m
        x_true = np.concatenate([base_twist[ANG], base_twist[LIN]])  # [omega; v]

        if estimating and k % est_div == 0:
            clean, fed, _ = gait_synthesize(
                sc.gait, gait_est, t, base_pos, base_rot, base_twist[LIN], base_twist[ANG],
                accel, omega_dot, rb.mass, rb.inertia, rb.gravity, rng_sensors,
            )
            if collect_training:
                train_rows.append(
                    (t, reduced_dynamics(x_true, fed, rb), x_true.copy(), feature_vector(x_true, fed))
                )
            est = kf_predict(est, fed, use_net, rb, noise)
            v_odom, odom_valid = leg_odometry(fed)
            y = np.concatenate([base_rot @ fed.omega_imu, v_odom])
            est = kf_update(est, y, noise, leg_odom_valid=odom_valid)
            low_pass(est, sc.alpha_lp)
            est_err_sq += (est.x_filtered - x_true) ** 2
            est_err_n += 1

        if k % ctrl_div == 0:
            base_pose = Pose(Rotation(base_rot).orthonormalized(), base_pos.copy())
            base_rot = base_pose.rotation.matrix
            ee_pose = base_pose @ forward_kinematics(model, q)
            rot_ee = ee_pose.rotation
            ee_off = ee_pose.translation - ee0_pos
            rot_off = so3_log(rot_ee.matrix @ rot0.T)

            ref_off = sc.reference_profile.value(t)
            raw_refw = sc.ref_wrench_profile.value(t)
            sensed6 = sc.wrench_profile.value(t)
            if sc.wrench_frame == "world":
                rt = rot_ee.matrix.T
                sensed6 = np.concatenate([rt @ sensed6[LIN], rt @ sensed6[ANG]])
            if wrench_source is not None:
                extra = wrench_source(t)  # live input, always sensor frame
                if extra is not None:
                    sensed6 = sensed6 + np.asarray(extra, dtype=float)
            if not np.all(np.isfinite(sensed6)):
                raise SimulationNaNError(k, t, "sensed wrench")
            sensed = Wrench.from_vector(sensed6, Frame.SENSOR)
            wg = gravity_wrench(gm, rot_ee).as_vector()
            net_w6 = np.concatenate(
                [rot_ee.apply(sensed6[LIN]), rot_ee.apply(sensed6[ANG])]
            ) - wg

            gov_off = ref_off.copy()
            gov_w6 = raw_refw.copy()
            if sc.governor_enabled:
                for axis, aset in moas_sets.items():
                    i6 = AXIS_INDEX[axis]
                    res = query_governor(
                        aset,
                        np.array([
                            _axis_position(axis, ee_off, rot_off),
                            ref_off[i6], cmd_sat[i6], net_w6[i6], raw_refw[i6],
                        ]),
                    )
                    if not res.admissible:
                        gov_off[i6] = res.x_ref
                        gov_w6[i6] = res.w_ref

            gov_ref_pose = Pose(
                Rotation(so3_exp(gov_off[ANG])) @ Rotation(rot0), ee0_pos + gov_off[LIN]
            )
            cmd = compute_desired_twist(
                sc.gains, sensed, rot_ee, gm, gov_ref_pose,
                Wrench.from_vector(gov_w6, Frame.WORLD), ee_pose, sc.twist_limits,
            )
            cmd_sat = cmd.twist.as_vector()
            if not np.all(np.isfinite(cmd_sat)):
                raise SimulationNaNError(k, t, "commanded twist")

            viol_pos = viol_vel = viol_wrench = 0
            if sc.constraints is not None:
                for axis, cons in sc.constraints.axes.items():
                    i6 = AXIS_INDEX[axis]
                    x_val = _axis_position(axis, ee_off, rot_off)
                    lo = max(cons.position[0], cons.kinematic[0])
                    hi = min(cons.position[1], cons.kinematic[1])
                    if not lo <= x_val <= hi:
                        viol_pos += 1
                    if not cons.velocity[0] <= cmd_sat[i6] <= cons.velocity[1]:
                        viol_vel += 1
                    if not cons.wrench[0] <= net_w6[i6] <= cons.wrench[1]:
                        viol_wrench += 1
                violations["position"] += viol_pos
                violations["velocity"] += viol_vel
                violations["wrench"] += viol_wrench

            base_cmd_filt = base_cmd_filt + alpha_split * (cmd_sat - base_cmd_filt)

            if sc.estimator_mode == "truth":
                est_twist6 = base_twist.copy()
            else:
                xf = est.x_filtered
                if sc.inject_observation_noise:
                    xf = xf + sample_observation_noise(est.cov, rng_obs)
                est_twist6 = np.concatenate([xf[3:6], xf[0:3]])  # to [lin; ang]
            wb_est = WholeBodyState(
                base_pose,
                Twist(est_twist6[LIN], est_twist6[ANG], Frame.WORLD),
                skew(est_twist6[ANG]) @ base_rot,
                JointState(q, qd),
            )
            qd = whole_body_joint_velocities(wb_est, cmd.twist, model, sc.lambda_dls)
            qd = np.clip(qd, -sc.max_joint_speed, sc.max_joint_speed)
            q, qd = clamp_to_limits(model, q, qd)
            if not np.all(np.isfinite(qd)):
                raise SimulationNaNError(k, t, "arm joint velocities")

            wb_actual = WholeBodyState.from_twist(
                base_pose, Twist(base_twist[LIN], base_twist[ANG], Frame.WORLD), JointState(q, qd)
            )
            ach = ee_twist_world(wb_actual, model, qd).as_vector()

            _, _, info_rw = gait_synthesize(
                sc.gait, gait_rw, t, base_pos, base_rot, base_twist[LIN], base_twist[ANG],
                accel, omega_dot, rb.mass, rb.inertia, rb.gravity, None,
            )
            q_leg, qd_leg, torques, action = synth_leg_state(
                info_rw, _last_grf(info_rw, gait_rw, sc, base_pos, base_rot), base_rot,
                (np.array(gait_rw.anchors) - base_pos) @ base_rot, sc.rewards, Q_LEG_DEFAULT,
            )
            ctx = RewardContext(
                q_leg=q_leg, q_default=Q_LEG_DEFAULT, qd_leg=qd_leg, torques=torques,
                action=action, action_prev=action_prev,
                contacts=gait_rw.was_stance, first_contact=info_rw["first_contact"],
                airtime=info_rw["airtime"], foot_heights=info_rw["foot_heights"],
                foot_peaks=info_rw["foot_peaks"], foot_vel_xy=info_rw["foot_vel_xy_world"],
                base_lin_vel=base_twist[LIN], base_ang_vel=base_twist[ANG],
                z_b_dot_z_w=float(base_rot[2, 2]),
                cmd_ee_lin=cmd_sat[LIN], cmd_ee_ang=cmd_sat[ANG],
                cur_ee_lin=ach[LIN], cur_ee_ang=ach[ANG],
            )
            rewards = eval_rewards(ctx, sc.rewards)
            for name, val in rewards.items():
                reward_totals[name] += val
            action_prev = action

            row = [t]
            row += list(cmd_sat)
            row += list(ach)
            row += list(ee_pose.translation) + list(so3_log(rot_ee.matrix))
            row += list(base_pos) + list(so3_log(base_rot))
            row += list(net_w6 + wg)  # sensed wrench in world, gravity included
            row += list(ref_off)
            row += list(gov_off)
            row += list(raw_refw)
            row += list(gov_w6)
            row += list(est.x_filtered if estimating else x_true)
            row += list(np.diag(est.cov))
            row += [rewards[name] for name in TERM_NAMES]
            row += [float(viol_pos > 0), float(viol_vel > 0), float(viol_wrench > 0)]
            rows.append(row)

            if step_callback is not None:
                step_callback({
                    "t": t,
                    "cmd_twist": cmd_sat.copy(),
                    "achieved_twist": ach.copy(),
                    "ee_pos": ee_pose.translation.copy(),
                    "ee_off": ee_off.copy(),
                    "base_pos": base_pos.copy(),
                    "base_yaw": float(so3_log(base_rot)[2]),
                    "arm_q": q.copy(),
                    "wrench_world": (net_w6 + wg).copy(),
                    "ref_off": ref_off.copy(),
                    "gov_off": gov_off.copy(),
                    "gov_wrench": gov_w6.copy(),
                    "governed": bool(np.any(gov_off != ref_off) or np.any(gov_w6 != raw_refw)),
                    "estimate": (est.x_filtered if estimating else x_true).copy(),
                    "cov_diag": np.diag(est.cov).copy(),
                    "violations": dict(violations),
                })

        if k % trk_div == 0:
            base_target = base_cmd_filt * sc.tracker.axis_mask
            new_twist = base_tracker_step(sc.tracker, base_twist, base_target, dt_trk, rng_tracker)
            accel = (new_twist[LIN] - base_twist[LIN]) / dt_trk
            omega_dot = (new_twist[ANG] - base_twist[ANG]) / dt_trk
            base_twist = new_twist

        base_pos = base_pos + base_twist[LIN] * dt_m
        base_rot = so3_exp(base_twist[ANG] * dt_m) @ base_rot
        q = q + qd * dt_m
        q, qd = clamp_to_limits(model, q, qd)

    data = np.asarray(rows)
    cmd_cols = data[:, 1:7]
    ach_cols = data[:, 7:13]
    err = cmd_cols - ach_cols
    metrics = RunMetrics(
        mse_linear=np.mean(err[:, 0:3] ** 2, axis=0),
        mse_angular=np.mean(err[:, 3:6] ** 2, axis=0),
        violations=violations,
        reward_totals=reward_totals,
        estimator_rmse=np.sqrt(est_err_sq / est_err_n) if est_err_n else None,
        n_steps=len(rows),
    )
    log = StepLog(columns=list(LOG_COLUMNS), data=data)
    training = None
    if collect_training and train_rows:
        training = EstimatorDataset(
            t=np.array([r[0] for r in train_rows]),
            model_pred=np.array([r[1] for r in train_rows]),
            truth=np.array([r[2] for r in train_rows]),
            phi=np.array([r[3] for r in train_rows]),
        )
    return RunResult(metrics=metrics, log=log, training=training)


def _last_grf(info_rw, gait_state, sc, base_pos, base_rot):
    """Static weight-share GRFs for reward torque synthesis (metric only)."""
    n_c = max(int(gait_state.was_stance.sum()), 1)
    grf = np.zeros((4, 3))
    grf[gait_state.was_stance] = [0.0, 0.0, sc.rigid_body.mass * 9.81 / n_c]
    return grf


def export_log(log: StepLog, path: str | Path):
    """CSV with unit-annotated header; floats at full round-trip precision."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(log.columns)
        for row in log.data:
            writer.writerow([repr(float(v)) for v in row])


def load_log(path: str | Path) -> StepLog:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        columns = next(reader)
        data = np.asarray([[float(v) for v in row] for row in reader])
    if data.size == 0:
        data = data.reshape(0, len(columns))
    return StepLog(columns=columns, data=data)


def recompute_mse(log: StepLog) -> tuple[np.ndarray, np.ndarray]:
    cmd = np.stack([log.column(f"cmd_v{a}[m/s]") for a in "xyz"] +
                   [log.column(f"cmd_w{a}[rad/s]") for a in "xyz"], axis=1)
    ach = np.stack([log.column(f"ach_v{a}[m/s]") for a in "xyz"] +
                   [log.column(f"ach_w{a}[rad/s]") for a in "xyz"], axis=1)
    err = cmd - ach
    return np.mean(err[:, 0:3] ** 2, axis=0), np.mean(err[:, 3:6] ** 2, axis=0)
