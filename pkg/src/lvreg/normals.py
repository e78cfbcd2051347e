"""Exact k-nearest-neighbor queries and PCA normal estimation for point clouds.

The spatial index wraps a kd-tree for candidate generation but defines the
result order itself: ascending squared distance computed in float64, ties
broken by lower point index. This keeps query results identical to a
brute-force scan on every platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateNeighborhood, EmptyCloud


@dataclass(frozen=True, eq=False)
class PointCloud:
    """An ordered set of 3D points, shape (N, 3) float64."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if pts.size and not np.all(np.isfinite(pts)):
            raise ValueError("point cloud contains non-finite coordinates")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)


class SpatialIndex:
    """Immutable exact k-NN index over a point cloud."""

    def __init__(self, cloud: PointCloud):
        if len(cloud) == 0:
            raise EmptyCloud("cannot index an empty point cloud")
        self._points = cloud.points
        self._tree = cKDTree(self._points)

    @property
    def points(self) -> np.ndarray:
        return self._points

    def knn(self, query, k: int) -> np.ndarray:
        """Indices of the k nearest points, ascending distance, ties by lower index.

        Returns min(k, N) indices when k exceeds the cloud size.
        """
        if k < 1:
            raise ValueError("k must be positive")
        q = np.asarray(query, dtype=np.float64).reshape(3)
        n = len(self._points)
        k_eff = min(k, n)
        # Fetch a small pad of extra candidates so boundary ties can be
        # resolved by index; expand until the cut is strict or exhausted.
        m = min(n, k_eff + 4)
        while True:
            _, idx = self._tree.query(q, k=m)
            idx = np.atleast_1d(idx)
            d2 = np.sum((self._points[idx] - q) ** 2, axis=1)
            order = np.lexsort((idx, d2))
            idx, d2 = idx[order], d2[order]
            if m == n or d2[k_eff - 1] < d2[k_eff]:
                return idx[:k_eff]
            m = min(n, 2 * m)


def build_index(cloud: PointCloud) -> SpatialIndex:
    """Build an immutable exact k-NN index; raises EmptyCloud on empty input."""
    return SpatialIndex(cloud)


def knn(index: SpatialIndex, query, k: int) -> np.ndarray:
    return index.knn(query, k)


def smallest_eigenvector(cov: np.ndarray) -> tuple[np.ndarray, float]:
    """Unit eigenvector of the smallest eigenvalue of a symmetric 3x3 matrix."""
    eigvals, eigvecs = np.linalg.eigh(cov)
    return eigvecs[:, 0], float(eigvals[0])


def canonicalize_sign(v: np.ndarray) -> np.ndarray:
    """Flip v so its largest-magnitude component is positive (deterministic sign)."""
    j = int(np.argmax(np.abs(v)))
    return -v if v[j] < 0 else v


def estimate_normal(index: SpatialIndex, point, k: int = 20) -> np.ndarray:
    """Surface normal at `point` from PCA over its k-neighborhood.

    The normal is the unit eigenvector of the neighborhood covariance with
    the smallest eigenvalue, sign-canonicalized so the largest-magnitude
    component is positive. The query point itself is part of the
    neighborhood whenever it belongs to the cloud (distance 0).

    Raises DegenerateNeighborhood when all neighbors coincide (rank 0).
    """
    nbrs = index.points[index.knn(point, k)]
    centered = nbrs - nbrs.mean(axis=0)
    cov = centered.T @ centered / len(nbrs)
    if not np.any(np.abs(cov) > 0):
        raise DegenerateNeighborhood("all neighbors coincide; normal undefined")
    vec, _ = smallest_eigenvector(cov)
    vec = vec / np.linalg.norm(vec)
    return canonicalize_sign(vec)


def annotate_normals(corrs, source_cloud: PointCloud, target_cloud: PointCloud, k: int = 20):
    """Return a copy of `corrs` with per-endpoint normals estimated from the clouds.

    Raises DegenerateNeighborhood tagged with the offending correspondence index.
    """
    if len(corrs) == 0:
        return corrs.with_normals(
            np.empty((0, 3), dtype=np.float64), np.empty((0, 3), dtype=np.float64)
        )
    src_index = build_index(source_cloud)
    tgt_index = build_index(target_cloud)
    src_normals = np.empty((len(corrs), 3), dtype=np.float64)
    tgt_normals = np.empty((len(corrs), 3), dtype=np.float64)
    for row in range(len(corrs)):
        try:
            src_normals[row] = estimate_normal(src_index, corrs.source[row], k)
            tgt_normals[row] = estimate_normal(tgt_index, corrs.target[row], k)
        except DegenerateNeighborhood as exc:
            raise DegenerateNeighborhood(f"correspondence {row}: {exc}") from exc
    return corrs.with_normals(src_normals, tgt_normals)
