"""
Union-Find Kernel

Disjoint-set forest with path compression and union by rank, and the greedy
edge-selection loop of Kruskal's algorithm over a condensed distance vector.
The loop is JIT-compiled with numba when it is installed.
"""
import logging
import math

import numpy as np

logger = logging.getLogger(__name__)

# Try to import numba for the selection loop, with graceful fallback
try:
    from numba import njit
    NUMBA_AVAILABLE = True
except ImportError:
    logger.warning("numba not installed. Kruskal edge selection will run in pure Python.")
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda func: func


@njit
def find_root(parent, x):
    """Find with path compression"""
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        next_x = parent[x]
        parent[x] = root
        x = next_x
    return root


@njit
def union_sets(parent, rank, x, y):
    """Union by rank; False when x and y already share a component"""
    px = find_root(parent, x)
    py = find_root(parent, y)
    if px == py:
        return False
    if rank[px] < rank[py]:
        px, py = py, px
    parent[py] = px
    if rank[px] == rank[py]:
        rank[px] += 1
    return True


@njit
def condensed_pair(k, n):
    """Row and column (i < j) of entry k of a condensed n-point distance vector"""
    b = 2 * n - 1
    i = int((b - math.sqrt(b * b - 8.0 * k)) / 2.0)
    if i < 0:
        i = 0
    # Float rounding can land one row off in either direction
    while i > 0 and i * n - (i * (i + 1)) // 2 > k:
        i -= 1
    while (i + 1) * n - ((i + 1) * (i + 2)) // 2 <= k:
        i += 1
    j = k - (i * n - (i * (i + 1)) // 2) + i + 1
    return i, j


@njit
def kruskal_select(order, n):
    """
    Accept edges in the given order whenever they join two components.

    Args:
        order: Condensed edge indices sorted by (length, i, j)
        n: Number of vertices

    Returns:
        (m, 2) array of accepted (i, j) pairs in acceptance order, m = n - 1
    """
    parent = np.arange(n)
    rank = np.zeros(n, dtype=np.int64)
    picked = np.empty((max(n - 1, 0), 2), dtype=np.int64)
    count = 0
    for idx in range(order.shape[0]):
        if count == n - 1:
            break
        i, j = condensed_pair(order[idx], n)
        if union_sets(parent, rank, i, j):
            picked[count, 0] = i
            picked[count, 1] = j
            count += 1
    return picked[:count]
