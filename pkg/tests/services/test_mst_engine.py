"""
Tests for MST construction, the exhaustive oracle and the length gradient.
"""
import importlib
import logging
import math
import sys

import numpy as np
import pytest

from app.core.exceptions import InputValidationError
from app.services import mst_engine
from app.services.mst_engine import (
    MstEdge,
    alpha_length,
    brute_force_mst,
    compute_mst,
    kruskal_mst,
    mst_length_gradient,
    regular_simplex_alpha_length,
    spanning_tree_topologies,
)
from app.services.point_cloud import PointCloud, pairwise_distances, sum_pairwise_distances
from app.services.utils import union_find
from app.services.utils.numerics import central_difference_gradient, max_relative_error


class TestKruskal:
    """Kruskal MSTs on hand-checked clouds."""

    def test_unit_square(self, unit_square):
        """Three unit edges, ties broken by (length, i, j)."""
        mst = kruskal_mst(pairwise_distances(unit_square))
        assert mst.total_length == 3.0
        assert [(e.i, e.j) for e in mst.edges] == [(0, 1), (0, 3), (1, 2)]

    def test_two_points(self, three_four_five):
        """A single edge of length 5."""
        mst = compute_mst(three_four_five)
        assert mst.edges == (MstEdge(0, 1, 5.0),)
        assert mst.total_length == 5.0

    def test_single_point(self):
        """n=1 gives the empty tree."""
        mst = compute_mst(PointCloud([[2.0, 3.0]]))
        assert mst.edges == ()
        assert mst.total_length == 0.0
        assert mst.edge_index.shape == (0, 2)

    def test_tree_shape(self, rng):
        """n-1 edges with i < j that connect every point."""
        mst = compute_mst(PointCloud(rng.standard_normal((40, 5))))
        assert len(mst.edges) == 39
        assert all(e.i < e.j for e in mst.edges)
        assert set(mst.edge_index.ravel()) == set(range(40))
        keys = [(e.length, e.i, e.j) for e in mst.edges]
        assert keys == sorted(keys)

    def test_deterministic(self, rng):
        """Repeated calls give the same tree."""
        dist = pairwise_distances(PointCloud(rng.random((30, 3))))
        assert kruskal_mst(dist) == kruskal_mst(dist)

    def test_matches_oracle_on_seven_points(self, rng):
        """7 uniform points in the plane against all 16807 spanning trees."""
        dist = pairwise_distances(PointCloud(rng.random((7, 2))))
        fast = kruskal_mst(dist)
        slow = brute_force_mst(dist)
        assert fast.total_length == pytest.approx(slow.total_length, rel=1e-12)
        assert fast.edges == slow.edges

    def test_missing_numba_logs_module_warning(self, monkeypatch, caplog, unit_square):
        """Without numba the pure Python fallback is announced on the module logger."""
        try:
            with monkeypatch.context() as m:
                m.setitem(sys.modules, "numba", None)
                with caplog.at_level(logging.WARNING):
                    importlib.reload(union_find)
                assert not union_find.NUMBA_AVAILABLE
                order = np.argsort(pairwise_distances(unit_square).condensed, kind="stable")
                assert len(union_find.kruskal_select(order, 4)) == 3
        finally:
            importlib.reload(union_find)
        records = [record for record in caplog.records if "numba not installed" in record.getMessage()]
        assert records
        assert records[0].name == "app.services.utils.union_find"


class TestBruteForce:
    """The exhaustive spanning-tree oracle."""

    def test_unit_square(self, unit_square):
        """Same length and the same tie-broken edges as Kruskal."""
        mst = brute_force_mst(pairwise_distances(unit_square))
        assert mst.total_length == 3.0
        assert [(e.i, e.j) for e in mst.edges] == [(0, 1), (0, 3), (1, 2)]

    def test_two_points(self, three_four_five):
        """n=2 has a single spanning tree."""
        mst = brute_force_mst(pairwise_distances(three_four_five))
        assert mst.edges == (MstEdge(0, 1, 5.0),)

    def test_five_random_points(self, rng):
        """Agrees with Kruskal to 1e-12."""
        dist = pairwise_distances(PointCloud(rng.standard_normal((5, 3))))
        assert brute_force_mst(dist).total_length == pytest.approx(kruskal_mst(dist).total_length, rel=1e-12)

    def test_rejects_large_n(self, rng):
        """Enumeration is capped at 8 points."""
        with pytest.raises(InputValidationError):
            brute_force_mst(pairwise_distances(PointCloud(rng.random((9, 2)))))

    def test_topology_count(self):
        """Cayley's formula n^(n-2)."""
        topologies = spanning_tree_topologies(4)
        assert topologies.shape == (16, 3, 2)
        assert spanning_tree_topologies(5).shape[0] == 125
        assert len({tuple(map(tuple, t)) for t in topologies.tolist()}) == 16


class TestMstLengthGradient:
    """Subgradient of the tree length."""

    def test_single_unit_edge(self):
        """Each endpoint moves away from the other."""
        cloud = PointCloud([[1.0, 0.0], [0.0, 0.0]])
        gradient = mst_length_gradient(cloud, compute_mst(cloud))
        np.testing.assert_array_equal(gradient.grads, [[1.0, 0.0], [-1.0, 0.0]])
        assert not gradient.has_duplicates

    def test_duplicate_points_are_flagged(self):
        """A zero-length edge contributes nothing and flags its endpoints."""
        cloud = PointCloud([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]])
        gradient = mst_length_gradient(cloud, compute_mst(cloud))
        assert gradient.has_duplicates
        np.testing.assert_array_equal(gradient.duplicate_flags, [True, True, False])
        assert np.all(np.isfinite(gradient.grads))
        np.testing.assert_array_equal(gradient.grads[2], [1.0, 0.0])

    def test_rows_sum_to_zero(self, rng):
        """Translating the whole cloud does not change the length."""
        cloud = PointCloud(rng.standard_normal((25, 4)))
        grads = mst_length_gradient(cloud, compute_mst(cloud)).grads
        np.testing.assert_allclose(grads.sum(axis=0), 0.0, atol=1e-12)

    def test_matches_finite_differences(self, rng):
        """6 points in R^4 against central differences."""
        points = rng.standard_normal((6, 4))
        cloud = PointCloud(points)
        analytic = mst_length_gradient(cloud, compute_mst(cloud)).grads
        numeric = central_difference_gradient(
            lambda p: compute_mst(PointCloud(p)).total_length, points, step=1e-6
        )
        assert max_relative_error(analytic, numeric) <= 1e-5

    def test_rejects_mismatched_tree(self, unit_square, three_four_five):
        """The tree must span the given cloud."""
        with pytest.raises(InputValidationError):
            mst_length_gradient(unit_square, compute_mst(three_four_five))

    def test_scaled(self):
        """scaled multiplies the gradient and keeps the flags."""
        cloud = PointCloud([[1.0, 0.0], [0.0, 0.0]])
        gradient = mst_length_gradient(cloud, compute_mst(cloud)).scaled(-0.5)
        np.testing.assert_array_equal(gradient.grads, [[-0.5, 0.0], [0.5, 0.0]])


class TestAlphaLength:
    """Alpha-powered tree lengths."""

    def test_unit_square(self, unit_square):
        """Unit edges are a fixed point of t -> t^alpha."""
        mst = compute_mst(unit_square)
        assert alpha_length(mst, 1.0) == 3.0
        assert alpha_length(mst, 0.5) == 3.0

    def test_two_points_at_distance_four(self):
        """sqrt(4) = 2."""
        mst = compute_mst(PointCloud([[0.0], [4.0]]))
        assert alpha_length(mst, 0.5) == 2.0

    @pytest.mark.parametrize("alpha", [0.0, -0.5, 1.5])
    def test_rejects_alpha_outside_range(self, unit_square, alpha):
        """alpha must lie in (0, 1]."""
        with pytest.raises(InputValidationError):
            alpha_length(compute_mst(unit_square), alpha)

    def test_regular_tetrahedron(self, regular_tetrahedron):
        """The inscribed regular simplex reaches d * sqrt(2(d+1)/d)^alpha."""
        mst = compute_mst(regular_tetrahedron)
        for alpha in (0.5, 1.0):
            expected = regular_simplex_alpha_length(3, alpha)
            assert alpha_length(mst, alpha) == pytest.approx(expected, rel=1e-12)
        assert regular_simplex_alpha_length(3, 1.0) == pytest.approx(3 * math.sqrt(8.0 / 3.0))

    def test_random_simplices_never_beat_regular(self, rng):
        """d+1 random points on the sphere stay below the regular simplex."""
        for d in range(2, 7):
            points = rng.standard_normal((d + 1, d))
            points /= np.linalg.norm(points, axis=1, keepdims=True)
            mst = compute_mst(PointCloud(points))
            assert alpha_length(mst, 0.5) <= regular_simplex_alpha_length(d, 0.5) * (1 + 1e-12)


class TestMstLengthProperties:
    """Invariances and the pairwise-distance bound."""

    def test_lemma_bound(self, rng):
        """E(MST) <= (2/n) * sum of pairwise distances."""
        for _ in range(50):
            n = int(rng.integers(2, 40))
            dist = pairwise_distances(PointCloud(rng.standard_normal((n, int(rng.integers(1, 10))))))
            assert kruskal_mst(dist).total_length <= 2.0 / n * sum_pairwise_distances(dist) * (1 + 1e-12)

    def test_rigid_motion_invariance(self, rng):
        """Rotating and translating the cloud keeps the length."""
        points = rng.standard_normal((20, 3))
        rotation, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        moved = points @ rotation.T + np.array([5.0, -2.0, 1.0])
        base = compute_mst(PointCloud(points)).total_length
        assert compute_mst(PointCloud(moved)).total_length == pytest.approx(base, rel=1e-9)

    def test_scaling_by_two(self, rng):
        """Doubling coordinates doubles the length exactly."""
        points = rng.standard_normal((20, 3))
        base = compute_mst(PointCloud(points))
        doubled = compute_mst(PointCloud(2.0 * points))
        assert doubled.total_length == 2.0 * base.total_length
        assert [(e.i, e.j) for e in doubled.edges] == [(e.i, e.j) for e in base.edges]

    def test_engine_calls_use_module_attribute(self, monkeypatch, unit_square):
        """compute_mst goes through kruskal_mst, so patching the module swaps the builder."""
        calls = []
        original = mst_engine.kruskal_mst

        def spy(dist):
            calls.append(dist.n)
            return original(dist)

        monkeypatch.setattr(mst_engine, "kruskal_mst", spy)
        mst_engine.compute_mst(unit_square)
        assert calls == [4]
