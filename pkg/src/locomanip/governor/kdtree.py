"""Exact nearest-neighbor KD-tree with deterministic tie-breaking.

Hand-rolled rather than scipy's cKDTree because the query contract pins
distance ties to the lowest stored index; leaf buckets keep the per-query
Python overhead small. Distances are squared Euclidean computed with the
same numpy expression a linear scan would use, so results are bit-comparable
with the scan oracle.
"""

from __future__ import annotations

import numpy as np


class _Node:
    __slots__ = ("dim", "split", "left", "right", "indices")

    def __init__(self, dim=-1, split=0.0, left=None, right=None, indices=None):
        self.dim = dim
        self.split = split
        self.left = left
        self.right = right
        self.indices = indices  # leaf only, ascending


class KDTree:
    def __init__(self, points: np.ndarray, leaf_size: int = 32):
        pts = np.ascontiguousarray(points, dtype=float)
        if pts.ndim != 2 or len(pts) == 0:
            raise ValueError("points must be a nonempty (n, d) array")
        if leaf_size < 1:
            raise ValueError("leaf_size must be >= 1")
        self.points = pts
        self.leaf_size = leaf_size
        self.root = self._build(np.arange(len(pts), dtype=np.int64))

    def _build(self, indices: np.ndarray) -> _Node:
        if len(indices) <= self.leaf_size:
            return _Node(indices=np.sort(indices))
        sub = self.points[indices]
        dim = int(np.argmax(sub.max(axis=0) - sub.min(axis=0)))
        order = np.argsort(sub[:, dim], kind="stable")
        mid = len(order) // 2
        split = float(sub[order[mid], dim])
        left_idx = indices[order[:mid]]
        right_idx = indices[order[mid:]]
        if len(left_idx) == 0 or len(right_idx) == 0:
            # Degenerate (all equal along dim): keep as a leaf.
            return _Node(indices=np.sort(indices))
        return _Node(dim=dim, split=split, left=self._build(left_idx), right=self._build(right_idx))

    def query(self, q: np.ndarray) -> tuple[float, int]:
        """Nearest stored point: (squared distance, index). Ties go to the
        lowest index, exactly as np.argmin over a full scan would."""
        q = np.asarray(q, dtype=float)
        best_d2 = np.inf
        best_idx = -1
        stack = [self.root]
        pts = self.points
        while stack:
            node = stack.pop()
            if node.indices is not None:
                idx = node.indices
                d2 = ((pts[idx] - q) ** 2).sum(axis=1)
                j = int(np.argmin(d2))  # first (= lowest index) minimum
                d, i = float(d2[j]), int(idx[j])
                if d < best_d2 or (d == best_d2 and i < best_idx):
                    best_d2, best_idx = d, i
                continue
            delta = q[node.dim] - node.split
            near, far = (node.left, node.right) if delta < 0.0 else (node.right, node.left)
            # Visit the far side when the splitting plane is within (or at)
            # the current best distance: an equal-distance, lower-index point
            # could live there.
            if delta * delta <= best_d2:
                stack.append(far)
            stack.append(near)
        return best_d2, best_idx

    def query_batch(self, qs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        qs = np.asarray(qs, dtype=float)
        d2 = np.empty(len(qs))
        idx = np.empty(len(qs), dtype=np.int64)
        for k, q in enumerate(qs):
            d2[k], idx[k] = self.query(q)
        return d2, idx
