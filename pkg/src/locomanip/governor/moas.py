"""Sampled maximal admissible set for the per-axis admittance closed loop.

Each grid point is a 5-vector [x, x_ref, v, w, w_ref]. A point is admissible
when the scalar closed loop  v_k = (w - w_ref - k (x_k - x_ref)) / d,
x_{k+1} = x_k + v_k dt  (commanded velocity equals achieved, per the offline
construction) satisfies every bound from the initial condition until it
settles or the horizon cap is reached. The stored v dimension is the
velocity the system currently has: it is bounds-checked at entry but, with
commanded-equals-achieved dynamics, cannot influence the trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .constraints import AxisConstraints, ConstraintSet, GridSpec
from .kdtree import KDTree

SETTLE_TOL = 1e-3
SETTLE_STEPS = 20


class InfeasibleConstraintsError(RuntimeError):
    """No grid point survived the admissibility check."""


@dataclass
class MoasBuildReport:
    axis: str
    n_total: int = 0
    n_retained: int = 0
    n_entry_rejected: int = 0
    n_trajectory_rejected: int = 0
    n_unsettled: int = 0

    def summary(self) -> str:
        return (
            f"axis {self.axis}: retained {self.n_retained}/{self.n_total} "
            f"(entry rejects {self.n_entry_rejected}, trajectory rejects "
            f"{self.n_trajectory_rejected}, unsettled-but-clean {self.n_unsettled})"
        )


@dataclass
class AdmissibleSet:
    """Admissible samples for one axis plus the KD-tree over normalized
    coordinates and the build metadata that produced them."""

    axis: str
    grid: GridSpec
    points: np.ndarray
    metadata: dict = field(default_factory=dict)
    _tree: KDTree | None = field(default=None, repr=False, compare=False)
    _norm: np.ndarray | None = field(default=None, repr=False, compare=False)
    _cells: frozenset | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 5)

    @property
    def normalized_points(self) -> np.ndarray:
        if self._norm is None:
            self._norm = self.grid.normalize(self.points)
        return self._norm

    @property
    def tree(self) -> KDTree:
        if self._tree is None:
            self._tree = KDTree(self.normalized_points)
        return self._tree

    @property
    def cell_set(self) -> frozenset:
        """Grid index tuples of the stored points (exact membership lookup)."""
        if self._cells is None:
            steps = (self.grid.maxs - self.grid.mins) / (self.grid.counts - 1)
            idx = np.rint((self.points - self.grid.mins) / steps).astype(np.int64)
            self._cells = frozenset(map(tuple, idx))
        return self._cells

    def contains_cell(self, o_q: np.ndarray) -> bool:
        """True when the query's nearest grid cell is an admissible sample:
        every dimension within half a grid cell of a stored point (ties at
        cell midpoints round half-to-even, deterministically)."""
        steps = (self.grid.maxs - self.grid.mins) / (self.grid.counts - 1)
        rel = (np.asarray(o_q, dtype=float) - self.grid.mins) / steps
        idx = np.rint(rel)
        if np.any(idx < 0) or np.any(idx > self.grid.counts - 1):
            return False
        return tuple(idx.astype(np.int64)) in self.cell_set

    def __len__(self) -> int:
        return len(self.points)


def _effective(cons: AxisConstraints, margin: float) -> AxisConstraints:
    return cons.shrunk(margin) if margin > 0.0 else cons


def simulate_admissible(
    point: np.ndarray,
    stiffness: float,
    damping: float,
    cons: AxisConstraints,
    horizon: int = 400,
    dt: float = 0.025,
    margin: float = 0.0,
    settle_tol: float = SETTLE_TOL,
    settle_steps: int = SETTLE_STEPS,
) -> bool:
    """Scalar reference implementation of the admissibility check.

    Entry checks: x within position and kinematic bounds, v within velocity
    bounds, w within wrench bounds. Then the closed loop runs until the
    velocity stays below settle_tol for settle_steps consecutive steps (or
    the horizon cap); any bound violation along the way rejects the point.
    """
    x, x_ref, v, w, w_ref = (float(s) for s in point)
    eff = _effective(cons, margin)
    lo_p = max(eff.position[0], eff.kinematic[0])
    hi_p = min(eff.position[1], eff.kinematic[1])
    if not (lo_p <= x <= hi_p):
        return False
    if not (eff.velocity[0] <= v <= eff.velocity[1]):
        return False
    if not (eff.wrench[0] <= w <= eff.wrench[1]):
        return False
    calm = 0
    for _ in range(horizon):
        v_cmd = (w - w_ref - stiffness * (x - x_ref)) / damping
        if not (eff.velocity[0] <= v_cmd <= eff.velocity[1]):
            return False
        x = x + v_cmd * dt
        if not (lo_p <= x <= hi_p):
            return False
        calm = calm + 1 if abs(v_cmd) < settle_tol else 0
        if calm >= settle_steps:
            return True
    return True  # horizon cap without violation; settling counted in reports


def _simulate_batch(
    points: np.ndarray,
    stiffness: float,
    damping: float,
    cons: AxisConstraints,
    horizon: int,
    dt: float,
    margin: float,
    settle_tol: float,
    settle_steps: int,
) -> tuple[np.ndarray, dict]:
    """Vectorized admissibility over a chunk of points. Must agree with
    simulate_admissible point-for-point (tested); it exists because exhaustive
    grids run millions of trajectories."""
    pts = np.asarray(points, dtype=float)
    x = pts[:, 0].copy()
    x_ref = pts[:, 1]
    v0 = pts[:, 2]
    w = pts[:, 3]
    w_ref = pts[:, 4]
    eff = _effective(cons, margin)
    lo_p = max(eff.position[0], eff.kinematic[0])
    hi_p = min(eff.position[1], eff.kinematic[1])

    ok_entry = (
        (x >= lo_p) & (x <= hi_p)
        & (v0 >= eff.velocity[0]) & (v0 <= eff.velocity[1])
        & (w >= eff.wrench[0]) & (w <= eff.wrench[1])
    )
    alive = ok_entry.copy()          # still simulating, no violation yet
    admissible = ok_entry.copy()     # becomes False on violation
    settled = np.zeros(len(pts), dtype=bool)
    calm = np.zeros(len(pts), dtype=np.int64)

    for _ in range(horizon):
        if not alive.any():
            break
        v_cmd = (w - w_ref - stiffness * (x - x_ref)) / damping
        bad_v = alive & ((v_cmd < eff.velocity[0]) | (v_cmd > eff.velocity[1]))
        x = np.where(alive, x + v_cmd * dt, x)
        bad_x = alive & ((x < lo_p) | (x > hi_p))
        bad = bad_v | bad_x
        admissible &= ~bad
        alive &= ~bad
        calm = np.where(alive & (np.abs(v_cmd) < settle_tol), calm + 1, 0)
        done = alive & (calm >= settle_steps)
        settled |= done
        alive &= ~done

    stats = {
        "entry_rejected": int((~ok_entry).sum()),
        "trajectory_rejected": int((ok_entry & ~admissible).sum()),
        "unsettled": int((admissible & ~settled).sum()),
    }
    return admissible, stats


def build_moas_axis(
    axis: str,
    stiffness: float,
    damping: float,
    cons: AxisConstraints,
    grid: GridSpec,
    horizon: int = 400,
    dt: float = 0.025,
    margin: float = 0.0,
    chunk_size: int = 65536,
    progress: Callable[[int, int], None] | None = None,
    chunk_results: dict[int, np.ndarray] | None = None,
) -> tuple[AdmissibleSet, MoasBuildReport]:
    """Exhaustive scan of one axis grid in deterministic row-major order.

    ``chunk_results`` maps chunk index -> retained flat indices; prefilled
    entries are reused (resume support) and the dict is updated in place so
    callers can checkpoint.
    """
    total = grid.total_points
    report = MoasBuildReport(axis=axis, n_total=total)
    n_chunks = (total + chunk_size - 1) // chunk_size
    retained: list[np.ndarray] = []
    if chunk_results is None:
        chunk_results = {}
    for ci in range(n_chunks):
        start = ci * chunk_size
        stop = min(start + chunk_size, total)
        if ci in chunk_results:
            kept = chunk_results[ci]
        else:
            flat = np.arange(start, stop, dtype=np.int64)
            pts = grid.points_for_indices(flat)
            ok, stats = _simulate_batch(
                pts, stiffness, damping, cons, horizon, dt, margin, SETTLE_TOL, SETTLE_STEPS
            )
            kept = flat[ok]
            chunk_results[ci] = kept
            report.n_entry_rejected += stats["entry_rejected"]
            report.n_trajectory_rejected += stats["trajectory_rejected"]
            report.n_unsettled += stats["unsettled"]
        retained.append(kept)
        if progress is not None:
            progress(stop, total)
    flat_kept = np.concatenate(retained) if retained else np.empty(0, dtype=np.int64)
    report.n_retained = len(flat_kept)
    if len(flat_kept) == 0:
        raise InfeasibleConstraintsError(
            f"axis {axis}: constraints are infeasible for these gains; report: {report.summary()}"
        )
    points = grid.points_for_indices(flat_kept)
    metadata = {
        "stiffness": stiffness,
        "damping": damping,
        "horizon": horizon,
        "dt": dt,
        "margin": margin,
        "settle_tol": SETTLE_TOL,
        "settle_steps": SETTLE_STEPS,
        "constraints": cons.to_dict(),
        "n_total": total,
        "n_retained": int(len(flat_kept)),
    }
    return AdmissibleSet(axis, grid, points, metadata), report


def build_moas(
    gains: dict[str, tuple[float, float]],
    constraints: ConstraintSet,
    grids: dict[str, GridSpec],
    horizon: int = 400,
    dt: float = 0.025,
    margin: float = 0.0,
    chunk_size: int = 65536,
    progress: Callable[[str, int, int], None] | None = None,
    axes: Iterable[str] | None = None,
) -> tuple[dict[str, AdmissibleSet], list[MoasBuildReport]]:
    """Build admissible sets for every constrained axis. ``gains`` maps axis
    name to (stiffness, damping)."""
    sets: dict[str, AdmissibleSet] = {}
    reports: list[MoasBuildReport] = []
    names = list(axes) if axes is not None else list(constraints.axes)
    for axis in names:
        cb = (lambda done, total, a=axis: progress(a, done, total)) if progress else None
        aset, report = build_moas_axis(
            axis,
            *gains[axis],
            constraints.axes[axis],
            grids[axis],
            horizon=horizon,
            dt=dt,
            margin=margin,
            chunk_size=chunk_size,
            progress=cb,
        )
        sets[axis] = aset
        reports.append(report)
    return sets, reports
