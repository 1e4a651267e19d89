"""Classic DBSCAN on 2-D embedded coordinates.

Core points have at least min_pts neighbors (self included) within eps;
clusters are the connected components of core points under eps-reachability,
numbered by their lowest-index core point. A border point joins the cluster
of its lowest-index core neighbor, which pins down the one case the original
algorithm leaves unspecified.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DbscanParams:
    eps: float
    min_pts: int

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.min_pts < 1:
            raise ValueError("min_pts must be >= 1")


def _neighbor_lists(Y: np.ndarray, eps: float, block: int = 512) -> list[np.ndarray]:
    """Indices within Euclidean eps of each row (self included)."""
    n = Y.shape[0]
    eps2 = eps * eps
    out: list[np.ndarray] = []
    for start in range(0, n, block):
        stop = min(start + block, n)
        diff = Y[start:stop, None, :] - Y[None, :, :]
        d2 = (diff * diff).sum(axis=2)
        for i in range(stop - start):
            out.append(np.flatnonzero(d2[i] <= eps2))
    return out


def dbscan(Y: np.ndarray, params: DbscanParams) -> np.ndarray:
    """Labels: -1 for noise, else dense cluster ids 0..C-1."""
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2:
        raise ValueError("coordinates must be 2-D")
    n = Y.shape[0]
    neighbors = _neighbor_lists(Y, params.eps)
    core = np.array([nb.size >= params.min_pts for nb in neighbors], dtype=bool)

    labels = np.full(n, -1, dtype=np.int64)
    cluster = 0
    for i in range(n):
        if not core[i] or labels[i] != -1:
            continue
        labels[i] = cluster
        frontier = [i]
        while frontier:
            j = frontier.pop()
            for k in neighbors[j]:
                if core[k] and labels[k] == -1:
                    labels[k] = cluster
                    frontier.append(k)
        cluster += 1

    for i in range(n):
        if core[i] or labels[i] != -1:
            continue
        core_neighbors = neighbors[i][core[neighbors[i]]]
        if core_neighbors.size:
            labels[i] = labels[core_neighbors.min()]
    return labels
