"""Online reference adjustment against a loaded admissible set.

A query is the current 5-vector [x, x_ref, v, w, w_ref] in raw units.
Membership means the query lies within half a grid cell of a stored sample
in every dimension (equivalently: its nearest grid cell is admissible);
admissible queries keep their references untouched. Inadmissible queries
hold the state dimensions [x, v, w] fixed and take the references of the
closest admissible sample (state-distance first, then reference-distance to
the raw references, then lowest stored index). The KD-tree nearest neighbor
in normalized coordinates is reported alongside either way.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .moas import AdmissibleSet

_STATE_DIMS = np.array([0, 2, 3])
_REF_DIMS = np.array([1, 4])


@dataclass(frozen=True)
class GovernorQuery:
    x: float
    x_ref: float
    v: float
    w: float
    w_ref: float

    def as_vector(self) -> np.ndarray:
        return np.array([self.x, self.x_ref, self.v, self.w, self.w_ref])


@dataclass(frozen=True)
class GovernorResult:
    admissible: bool
    x_ref: float
    w_ref: float
    distance: float        # normalized nearest-neighbor distance
    nearest_index: int
    fallback_index: int    # -1 when the query was admissible

    @property
    def governed(self) -> bool:
        return not self.admissible


def query_governor(aset: AdmissibleSet, query: GovernorQuery | np.ndarray) -> GovernorResult:
    if len(aset) == 0:
        raise ValueError("admissible set is empty")
    o_q = query.as_vector() if isinstance(query, GovernorQuery) else np.asarray(query, dtype=float)
    q_norm = aset.grid.normalize(o_q)
    d2, idx = aset.tree.query(q_norm)
    dist = float(np.sqrt(d2))
    if aset.contains_cell(o_q):
        return GovernorResult(True, float(o_q[1]), float(o_q[4]), dist, int(idx), -1)

    pts_norm = aset.normalized_points
    d_state = ((pts_norm[:, _STATE_DIMS] - q_norm[_STATE_DIMS]) ** 2).sum(axis=1)
    best_state = d_state.min()
    cand = np.flatnonzero(d_state == best_state)
    if len(cand) > 1:
        d_ref = ((pts_norm[np.ix_(cand, _REF_DIMS)] - q_norm[_REF_DIMS]) ** 2).sum(axis=1)
        cand = cand[d_ref == d_ref.min()]
    chosen = int(cand[0])  # lowest index among remaining ties
    point = aset.points[chosen]
    return GovernorResult(False, float(point[1]), float(point[4]), dist, int(idx), chosen)
