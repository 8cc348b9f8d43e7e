"""
Point Cloud Service

Core data types for point clouds and deterministic Euclidean distance
computation. Every loss, metric and optimizer in the toolkit acts on a
PointCloud.
"""
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
from scipy.spatial.distance import pdist, squareform

from app.core.exceptions import InputValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PointCloud:
    """
    An ordered set of n points in R^d stored as a read-only float64 matrix.
    """
    points: np.ndarray

    def __post_init__(self):
        points = np.array(self.points, dtype=np.float64, copy=True)
        if points.ndim != 2:
            raise InputValidationError(f"Point cloud must be an n x d matrix, got shape {points.shape}")
        if points.shape[0] < 1 or points.shape[1] < 1:
            raise InputValidationError(f"Point cloud needs n >= 1 and d >= 1, got shape {points.shape}")
        if not np.all(np.isfinite(points)):
            raise InputValidationError("Point cloud contains NaN or infinite coordinates")
        points.setflags(write=False)
        object.__setattr__(self, "points", points)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def norms(self) -> np.ndarray:
        """Euclidean norm of every point."""
        return np.linalg.norm(self.points, axis=1)

    def with_points(self, points: np.ndarray) -> "PointCloud":
        return PointCloud(points)

    def permuted(self, permutation: Sequence[int]) -> "PointCloud":
        """Reorder the points; row k of the result is row permutation[k] of this cloud."""
        permutation = np.asarray(permutation)
        if sorted(permutation.tolist()) != list(range(self.n)):
            raise InputValidationError("permutation must be a rearrangement of range(n)")
        return PointCloud(self.points[permutation])

    def duplicated(self) -> "PointCloud":
        """The 2n-point cloud (z_1..z_n, z_1..z_n)."""
        return PointCloud(np.vstack([self.points, self.points]))

    def feature_cloned(self) -> "PointCloud":
        """Every point concatenated with itself, living in R^(2d)."""
        return PointCloud(np.hstack([self.points, self.points]))

    def with_zero_features(self, k: int) -> "PointCloud":
        """Every point padded with k zero coordinates."""
        if k < 1:
            raise InputValidationError(f"k must be >= 1, got {k}")
        return PointCloud(np.hstack([self.points, np.zeros((self.n, k))]))


@dataclass(frozen=True)
class DistanceMatrix:
    """
    Pairwise Euclidean distances of a point cloud.

    The condensed vector holds entries (i, j), i < j, in row-major order:
    (0,1), (0,2), ..., (0,n-1), (1,2), ... The square matrix is built on demand.
    """
    condensed: np.ndarray
    n: int

    def __post_init__(self):
        expected = self.n * (self.n - 1) // 2
        if self.condensed.shape != (expected,):
            raise InputValidationError(
                f"Condensed distances for n={self.n} need {expected} entries, got {self.condensed.shape}"
            )
        if np.any(self.condensed < 0) or not np.all(np.isfinite(self.condensed)):
            raise InputValidationError("Distances must be finite and non-negative")

    @cached_property
    def entries(self) -> np.ndarray:
        if self.n == 1:
            return np.zeros((1, 1))
        return squareform(self.condensed, checks=False)

    @classmethod
    def from_square(cls, entries: np.ndarray) -> "DistanceMatrix":
        entries = np.asarray(entries, dtype=np.float64)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise InputValidationError(f"Distance matrix must be square, got {entries.shape}")
        n = entries.shape[0]
        if not np.array_equal(entries, entries.T) or np.any(np.diag(entries) != 0):
            raise InputValidationError("Distance matrix must be symmetric with a zero diagonal")
        rows, cols = np.triu_indices(n, k=1)
        return cls(condensed=entries[rows, cols].copy(), n=n)


def pairwise_distances(cloud: PointCloud) -> DistanceMatrix:
    """
    Exact Euclidean distances between all pairs of points.

    Each entry is the square root of the sum of squared coordinate differences
    accumulated in coordinate order.

    Args:
        cloud: The point cloud

    Returns:
        DistanceMatrix over the cloud's points
    """
    if cloud.n == 1:
        return DistanceMatrix(condensed=np.zeros(0), n=1)
    condensed = pdist(cloud.points, metric="euclidean")
    return DistanceMatrix(condensed=condensed, n=cloud.n)


def center_of_mass(cloud: PointCloud) -> np.ndarray:
    """Coordinate-wise mean of the points."""
    return cloud.points.mean(axis=0)


def sum_pairwise_distances(dist: DistanceMatrix) -> float:
    """Sum of ||z_i - z_j|| over all pairs i < j."""
    return float(np.sum(dist.condensed))


def as_point_cloud(points, name: Optional[str] = None) -> PointCloud:
    """Accept either a PointCloud or anything array-like."""
    if isinstance(points, PointCloud):
        return points
    try:
        return PointCloud(np.asarray(points, dtype=np.float64))
    except (TypeError, ValueError) as e:
        label = f" for {name}" if name else ""
        raise InputValidationError(f"Could not build a point cloud{label}: {e}")
