"""Training-dataset CSV: one row per estimator step.

Columns: t, the one-step model prediction from ground truth (6), ground
truth (6), and the 37 feature values. Ground truth is the simulator's base
twist (a mocap stand-in). Training pairs are formed from consecutive rows:
phi_k -> eps_k = true_{k+1} - model_k.

Because the reduced model is affine with identity state block, the
input-dependent term of each step is recoverable as model_k - true_k; replay
re-runs the filter from the file alone, synthesizing measurements as truth
plus seeded noise (the schema carries no measurement columns).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .filter import N_FEATURES, EstimatorState, NoiseParams, kf_update, low_pass

_STATE_NAMES = ["om_x", "om_y", "om_z", "v_x", "v_y", "v_z"]

COLUMNS = (
    ["t"]
    + [f"model_{n}" for n in _STATE_NAMES]
    + [f"true_{n}" for n in _STATE_NAMES]
    + [f"phi_{i:02d}" for i in range(N_FEATURES)]
)


class DatasetSchemaError(RuntimeError):
    pass


@dataclass
class EstimatorDataset:
    t: np.ndarray          # (N,)
    model_pred: np.ndarray  # (N, 6) one-step prediction from truth at t
    truth: np.ndarray       # (N, 6) ground-truth state at t
    phi: np.ndarray         # (N, 37)

    def __len__(self) -> int:
        return len(self.t)

    def training_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """(phi_k, eps_k = true_{k+1} - model_k) over consecutive rows."""
        eps = self.truth[1:] - self.model_pred[:-1]
        return self.phi[:-1], eps

    def model_inputs(self) -> np.ndarray:
        """Per-step input-dependent term u_k with Dyn(x, f) = x + u_k."""
        return self.model_pred - self.truth


def save_dataset(ds: EstimatorDataset, path: str | Path):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(COLUMNS)
        for k in range(len(ds)):
            row = [repr(float(ds.t[k]))]
            row += [repr(float(v)) for v in ds.model_pred[k]]
            row += [repr(float(v)) for v in ds.truth[k]]
            row += [repr(float(v)) for v in ds.phi[k]]
            writer.writerow(row)


def load_dataset(path: str | Path) -> EstimatorDataset:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != COLUMNS:
            missing = sorted(set(COLUMNS) - set(header or []))
            extra = sorted(set(header or []) - set(COLUMNS))
            raise DatasetSchemaError(
                f"dataset columns do not match schema; missing={missing} unexpected={extra}"
            )
        rows = [[float(v) for v in row] for row in reader]
    if not rows:
        raise DatasetSchemaError("dataset has no data rows")
    data = np.asarray(rows)
    return EstimatorDataset(
        t=data[:, 0],
        model_pred=data[:, 1:7],
        truth=data[:, 7:13],
        phi=data[:, 13:],
    )


def replay_filter(
    ds: EstimatorDataset,
    net,
    noise: NoiseParams = NoiseParams(),
    alpha_lp: float = 0.3,
    meas_seed: int = 0,
) -> np.ndarray:
    """Run the filter over a recorded dataset; returns the (N, 6) estimate
    trajectory (low-passed). Measurements are truth plus seeded noise drawn
    from the measurement covariance."""
    rng = np.random.default_rng(meas_seed)
    meas_root = np.linalg.cholesky(noise.meas_cov)
    u = ds.model_inputs()
    state = EstimatorState(ds.truth[0].copy(), np.eye(6) * 1e-2, ds.truth[0].copy(), ds.t[0])
    estimates = np.empty_like(ds.truth)
    estimates[0] = state.x_filtered
    q_eye = np.eye(6)
    for k in range(1, len(ds)):
        x_model = state.x + u[k - 1]
        if net is None:
            eps = np.zeros(6)
        else:
            eps = net.predict(ds.phi[k - 1])
        state.x = x_model + eps
        state.cov = state.cov + np.outer(eps, eps) + noise.q_floor * q_eye
        y = ds.truth[k] + meas_root @ rng.standard_normal(6)
        state = kf_update(state, y, noise)
        low_pass(state, alpha_lp)
        estimates[k] = state.x_filtered
    return estimates


def error_statistics(estimates: np.ndarray, truth: np.ndarray) -> dict[str, np.ndarray]:
    """Per-component MAE / RMSE / STD of the estimation error."""
    err = estimates - truth
    return {
        "MAE": np.mean(np.abs(err), axis=0),
        "RMSE": np.sqrt(np.mean(err**2, axis=0)),
        "STD": np.std(err, axis=0),
    }


def format_statistics_table(stats: dict[str, np.ndarray]) -> str:
    """Angular block then linear block, MAE/RMSE/STD rows per block."""
    lines = []
    header = ("Metric", "om_x (rad/s)", "om_y (rad/s)", "om_z (rad/s)")
    lines.append("{:<8}{:>14}{:>14}{:>14}".format(*header))
    for name in ("MAE", "RMSE", "STD"):
        vals = stats[name][:3]
        lines.append("{:<8}{:>14.4f}{:>14.4f}{:>14.4f}".format(name, *vals))
    header = ("Metric", "v_x (m/s)", "v_y (m/s)", "v_z (m/s)")
    lines.append("{:<8}{:>14}{:>14}{:>14}".format(*header))
    for name in ("MAE", "RMSE", "STD"):
        vals = stats[name][3:]
        lines.append("{:<8}{:>14.4f}{:>14.4f}{:>14.4f}".format(name, *vals))
    return "\n".join(lines)
