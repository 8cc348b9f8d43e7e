"""
MST Engine

Minimum spanning tree construction (Kruskal), tree length, the exact
subgradient of the tree length with respect to the point coordinates, the
alpha-powered tree length, and an exhaustive spanning-tree oracle for small n.
"""
import heapq
import itertools
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Sequence, Tuple

import numpy as np

from app.core.config import TREG_CONFIG
from app.core.exceptions import InputValidationError, InvariantViolationError
from app.services.point_cloud import DistanceMatrix, PointCloud, pairwise_distances
from app.services.utils.union_find import kruskal_select

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MstEdge:
    """Tree edge between points i < j."""
    i: int
    j: int
    length: float


@dataclass(frozen=True)
class Mst:
    """
    Minimum spanning tree of an n-point cloud; edges sorted by (length, i, j).
    """
    edges: Tuple[MstEdge, ...]
    total_length: float
    n: int

    @property
    def edge_index(self) -> np.ndarray:
        """(n-1, 2) integer array of endpoints."""
        if not self.edges:
            return np.zeros((0, 2), dtype=np.int64)
        return np.array([(e.i, e.j) for e in self.edges], dtype=np.int64)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([e.length for e in self.edges], dtype=np.float64)

    @property
    def min_edge_length(self) -> float:
        return min((e.length for e in self.edges), default=0.0)


@dataclass(frozen=True)
class MstGradient:
    """
    Gradient of a tree-length objective: row i is the derivative with respect to z_i.
    duplicate_flags marks points incident to a zero-length edge.
    """
    grads: np.ndarray
    duplicate_flags: np.ndarray

    @property
    def has_duplicates(self) -> bool:
        return bool(np.any(self.duplicate_flags))

    def scaled(self, factor: float) -> "MstGradient":
        return MstGradient(grads=factor * self.grads, duplicate_flags=self.duplicate_flags)


def _build_mst(n: int, pairs: Sequence[Tuple[int, int]], dist: DistanceMatrix) -> Mst:
    entries = dist.entries
    edges = [MstEdge(int(i), int(j), float(entries[i, j])) for i, j in pairs]
    edges.sort(key=lambda e: (e.length, e.i, e.j))
    total = math.fsum(e.length for e in edges)
    if len(edges) != n - 1:
        raise InvariantViolationError(f"Spanning tree on {n} points has {len(edges)} edges")
    return Mst(edges=tuple(edges), total_length=total, n=n)


def kruskal_mst(dist: DistanceMatrix) -> Mst:
    """
    Kruskal's algorithm on a dense distance matrix.

    Candidate edges are ordered by (length, i, j), so the returned tree is
    deterministic when several minimum spanning trees exist. The total length is
    the same for every minimum spanning tree.

    Args:
        dist: Pairwise distances of the cloud

    Returns:
        The minimum spanning tree
    """
    n = dist.n
    if n == 1:
        return Mst(edges=(), total_length=0.0, n=1)
    # Condensed order is already (i, j) lexicographic; a stable sort on length keeps it for ties
    order = np.argsort(dist.condensed, kind="stable")
    picked = kruskal_select(order, n)
    if picked.shape[0] != n - 1:
        raise InvariantViolationError(f"Kruskal accepted {picked.shape[0]} edges for {n} points")
    edges = [MstEdge(int(i), int(j), float(dist.condensed[k])) for (i, j), k in
             zip(picked, _condensed_index(picked, n))]
    total = math.fsum(e.length for e in edges)
    return Mst(edges=tuple(edges), total_length=total, n=n)


def _condensed_index(pairs: np.ndarray, n: int) -> np.ndarray:
    i = pairs[:, 0]
    j = pairs[:, 1]
    return i * n - (i * (i + 1)) // 2 + (j - i - 1)


def compute_mst(cloud: PointCloud) -> Mst:
    """Kruskal MST of a point cloud."""
    return kruskal_mst(pairwise_distances(cloud))


def _decode_prufer(sequence: Sequence[int], n: int) -> List[Tuple[int, int]]:
    degree = [1] * n
    for v in sequence:
        degree[v] += 1
    leaves = [v for v in range(n) if degree[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for v in sequence:
        leaf = heapq.heappop(leaves)
        edges.append((min(leaf, v), max(leaf, v)))
        degree[v] -= 1
        if degree[v] == 1:
            heapq.heappush(leaves, v)
    u = heapq.heappop(leaves)
    w = heapq.heappop(leaves)
    edges.append((min(u, w), max(u, w)))
    return edges


@lru_cache(maxsize=None)
def spanning_tree_topologies(n: int) -> np.ndarray:
    """
    Every labeled spanning tree on n >= 2 vertices, decoded from its Pruefer sequence.

    Returns:
        (n^(n-2), n-1, 2) array of endpoint pairs with i < j
    """
    trees = [_decode_prufer(seq, n) for seq in itertools.product(range(n), repeat=n - 2)]
    topologies = np.array(trees, dtype=np.int64)
    topologies.setflags(write=False)
    return topologies


def brute_force_mst(dist: DistanceMatrix) -> Mst:
    """
    Exhaustive minimum over all n^(n-2) spanning trees.

    Among minimal trees the one whose (length, i, j)-sorted edge list is
    lexicographically smallest is returned, which is the tree Kruskal picks.

    Args:
        dist: Pairwise distances of at most 8 points

    Returns:
        The minimum spanning tree
    """
    n = dist.n
    max_points = TREG_CONFIG["mst"]["brute_force_max_points"]
    if n > max_points:
        raise InputValidationError(f"Brute-force MST enumerates n^(n-2) trees; n={n} exceeds {max_points}")
    if n == 1:
        return Mst(edges=(), total_length=0.0, n=1)

    topologies = spanning_tree_topologies(n)
    entries = dist.entries
    lengths = entries[topologies[:, :, 0], topologies[:, :, 1]]
    totals = np.sort(lengths, axis=1).sum(axis=1)
    best = totals.min()
    candidates = np.flatnonzero(totals <= best + 1e-12 * max(best, 1.0))

    def tree_key(t):
        keyed = sorted(
            (float(entries[i, j]), int(i), int(j)) for i, j in topologies[t]
        )
        return math.fsum(k[0] for k in keyed), keyed

    winner = min(candidates, key=tree_key)
    return _build_mst(n, [tuple(p) for p in topologies[winner]], dist)


def mst_length_gradient(cloud: PointCloud, mst: Mst) -> MstGradient:
    """
    Subgradient of the tree length with respect to every point.

    Row x is the sum over tree edges (x, z) of (x - z) / ||x - z||. A zero-length
    edge contributes the zero vector and flags both endpoints.

    Args:
        cloud: The point cloud
        mst: Minimum spanning tree of that cloud

    Returns:
        MstGradient with an n x d gradient matrix
    """
    if mst.n != cloud.n:
        raise InputValidationError(f"MST has {mst.n} vertices but the cloud has {cloud.n} points")
    grads = np.zeros((cloud.n, cloud.d))
    duplicate_flags = np.zeros(cloud.n, dtype=bool)
    if not mst.edges:
        return MstGradient(grads=grads, duplicate_flags=duplicate_flags)

    index = mst.edge_index
    i, j = index[:, 0], index[:, 1]
    diff = cloud.points[i] - cloud.points[j]
    norms = np.linalg.norm(diff, axis=1)
    zero = norms == 0
    units = np.zeros_like(diff)
    units[~zero] = diff[~zero] / norms[~zero, None]
    np.add.at(grads, i, units)
    np.add.at(grads, j, -units)

    if np.any(zero):
        duplicate_flags[i[zero]] = True
        duplicate_flags[j[zero]] = True
        logger.warning(f"{int(zero.sum())} zero-length MST edges; gradient rows of "
                       f"{int(duplicate_flags.sum())} points use the zero subgradient")
    return MstGradient(grads=grads, duplicate_flags=duplicate_flags)


def alpha_length(mst: Mst, alpha: float = 1.0) -> float:
    """
    Sum of alpha-powered edge lengths.

    t -> t^alpha is increasing, so the Euclidean MST is also the MST for
    alpha-powered weights and this is the alpha-length of the alpha-MST.

    Args:
        mst: A minimum spanning tree
        alpha: Exponent in (0, 1]

    Returns:
        Sum of length^alpha over the edges
    """
    if not (0 < alpha <= 1):
        raise InputValidationError(f"alpha must lie in (0, 1], got {alpha}")
    if alpha == 1:
        return mst.total_length
    return math.fsum(e.length ** alpha for e in mst.edges)


def regular_simplex_alpha_length(d: int, alpha: float = 1.0) -> float:
    """Alpha-length of any spanning tree of the regular d-simplex inscribed in the unit sphere S^(d-1)."""
    if d < 1:
        raise InputValidationError(f"d must be >= 1, got {d}")
    if not (0 < alpha <= 1):
        raise InputValidationError(f"alpha must lie in (0, 1], got {alpha}")
    edge = math.sqrt(2.0 * (d + 1) / d)
    return d * edge ** alpha
