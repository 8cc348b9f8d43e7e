"""
Tests for the regularization losses and their gradients.
"""
import math

import numpy as np
import pytest

from app.core.exceptions import InputValidationError
from app.schemas.loss_schema import LossWeights
from app.services.mst_engine import compute_mst
from app.services.point_cloud import PointCloud
from app.services.regularizers import (
    loss_e,
    loss_mse,
    loss_s,
    loss_treg,
    loss_tregs_two_view,
    loss_var_cov,
)
from app.services.utils.numerics import central_difference_gradient, max_relative_error

EMBEDDING_WEIGHTS = LossWeights(beta=10.0, gamma=0.2, lambda_s=8e-4)


@pytest.fixture
def views(rng):
    """Two random 12 x 5 views."""
    return PointCloud(rng.standard_normal((12, 5))), PointCloud(rng.standard_normal((12, 5)))


class TestLossE:
    """Negative MST length per point."""

    def test_two_points(self, three_four_five):
        """-5/2."""
        value, _ = loss_e(three_four_five)
        assert value == -2.5

    def test_unit_square(self, unit_square):
        """-3/4."""
        value, _ = loss_e(unit_square)
        assert value == -0.75

    def test_homogeneous_of_degree_one(self, rng):
        """Scaling by 2 doubles the value and keeps the gradient."""
        points = rng.standard_normal((10, 3))
        value, gradient = loss_e(PointCloud(points))
        scaled_value, scaled_gradient = loss_e(PointCloud(2.0 * points))
        assert scaled_value == pytest.approx(2.0 * value, rel=1e-12)
        np.testing.assert_allclose(scaled_gradient.grads, gradient.grads, atol=1e-12)

    def test_gradient_is_scaled_length_gradient(self, unit_square):
        """-(1/n) times the tree-length gradient."""
        _, gradient = loss_e(unit_square)
        np.testing.assert_allclose(gradient.grads.sum(axis=0), 0.0, atol=1e-12)
        # Corner 0 is joined to corners 1 and 3
        np.testing.assert_allclose(gradient.grads[0], [0.25, 0.25])

    def test_reuses_given_tree(self, unit_square):
        """A precomputed MST gives the same result."""
        value, _ = loss_e(unit_square, compute_mst(unit_square))
        assert value == -0.75

    def test_requires_two_points(self):
        """A single point has no spread."""
        with pytest.raises(InputValidationError):
            loss_e(PointCloud([[1.0, 2.0]]))


class TestLossS:
    """Soft sphere penalty."""

    def test_unit_norm_points(self):
        """Points on the sphere cost nothing."""
        value, grad = loss_s(PointCloud([[1.0, 0.0], [0.0, -1.0], [0.6, 0.8]]))
        assert value == pytest.approx(0.0, abs=1e-15)
        np.testing.assert_allclose(grad, 0.0, atol=1e-15)

    def test_origin(self):
        """(0 - 1)^2 with a zero gradient."""
        value, grad = loss_s(PointCloud([[0.0, 0.0]]))
        assert value == 1.0
        np.testing.assert_array_equal(grad, [[0.0, 0.0]])

    def test_three_four_point(self):
        """(5 - 1)^2 = 16 with gradient 2 * 4 * (3/5, 4/5)."""
        value, grad = loss_s(PointCloud([[3.0, 4.0]]))
        assert value == 16.0
        np.testing.assert_allclose(grad, [[4.8, 6.4]], rtol=1e-14)

    def test_matches_finite_differences(self, rng):
        """Analytic gradient against central differences."""
        points = rng.standard_normal((8, 3))
        _, grad = loss_s(PointCloud(points))
        numeric = central_difference_gradient(lambda p: loss_s(PointCloud(p))[0], points)
        assert max_relative_error(grad, numeric) <= 1e-6


class TestLossTreg:
    """gamma * loss_e + lambda * loss_s."""

    def test_mst_term_only(self, three_four_five):
        """gamma=1, lambda=0 reduces to loss_e."""
        evaluation = loss_treg(three_four_five, LossWeights(gamma=1.0, lambda_s=0.0))
        assert evaluation.total == -2.5
        assert evaluation.report.l_e == -2.5
        assert evaluation.report.l_s == 16.0 / 2 + 0.5

    def test_recombination(self, rng):
        """The total is the weighted sum of the reported components."""
        cloud = PointCloud(rng.standard_normal((20, 4)))
        evaluation = loss_treg(cloud, EMBEDDING_WEIGHTS)
        l_e, _ = loss_e(cloud)
        l_s, _ = loss_s(cloud)
        assert evaluation.report.l_e == l_e
        assert evaluation.report.l_s == l_s
        assert evaluation.total == pytest.approx(0.2 * l_e + 8e-4 * l_s, rel=1e-12)
        assert evaluation.report.recombine(EMBEDDING_WEIGHTS, "treg") == pytest.approx(evaluation.total, rel=1e-12)

    def test_matches_finite_differences(self, rng):
        """Analytic gradient of the combined objective."""
        weights = LossWeights(gamma=1.0, lambda_s=10.0)
        points = rng.standard_normal((7, 3))
        evaluation = loss_treg(PointCloud(points), weights)
        numeric = central_difference_gradient(
            lambda p: loss_treg(PointCloud(p), weights).total, points, step=1e-6
        )
        assert max_relative_error(evaluation.grad, numeric) <= 1e-5

    def test_permutation_invariance(self, rng):
        """Reordering points keeps the value and permutes the gradient."""
        cloud = PointCloud(rng.standard_normal((15, 3)))
        perm = rng.permutation(15)
        base = loss_treg(cloud, EMBEDDING_WEIGHTS)
        permuted = loss_treg(cloud.permuted(perm), EMBEDDING_WEIGHTS)
        assert permuted.total == pytest.approx(base.total, rel=1e-12)
        np.testing.assert_allclose(permuted.grad, base.grad[perm], atol=1e-12)

    def test_records_tree_and_duplicates(self):
        """The evaluation keeps the tree it used and flags coincident points."""
        cloud = PointCloud([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]])
        evaluation = loss_treg(cloud, LossWeights())
        assert evaluation.mst.n == 3
        assert evaluation.has_duplicates


class TestLossMse:
    """Mean squared view distance."""

    def test_identical_views(self, views):
        """a = b costs nothing."""
        a, _ = views
        value, grad_a, grad_b = loss_mse(a, a)
        assert value == 0.0
        np.testing.assert_array_equal(grad_a, 0.0)
        np.testing.assert_array_equal(grad_b, 0.0)

    def test_single_pair(self):
        """||(1,0) - (0,0)||^2 = 1."""
        value, grad_a, grad_b = loss_mse(PointCloud([[1.0, 0.0]]), PointCloud([[0.0, 0.0]]))
        assert value == 1.0
        np.testing.assert_array_equal(grad_a, [[2.0, 0.0]])
        np.testing.assert_array_equal(grad_b, [[-2.0, 0.0]])

    def test_symmetric(self, views):
        """Swapping the views keeps the value."""
        a, b = views
        assert loss_mse(a, b)[0] == loss_mse(b, a)[0]

    def test_shape_mismatch(self):
        """Views must align point by point."""
        with pytest.raises(InputValidationError):
            loss_mse(PointCloud(np.zeros((3, 2))), PointCloud(np.zeros((4, 2))))


class TestLossTregsTwoView:
    """Two-view objective."""

    def test_identical_views(self, views):
        """No invariance cost, twice the single-view T-REG."""
        a, _ = views
        evaluation = loss_tregs_two_view(a, a, EMBEDDING_WEIGHTS)
        assert evaluation.report.l_mse == 0.0
        assert evaluation.total == pytest.approx(2.0 * loss_treg(a, EMBEDDING_WEIGHTS).total, rel=1e-12)
        np.testing.assert_allclose(evaluation.grad, evaluation.grad_b, atol=1e-15)

    def test_zero_beta_decouples(self, views):
        """beta=0 is the sum of the per-view objectives."""
        a, b = views
        weights = LossWeights(beta=0.0, gamma=0.2, lambda_s=8e-4)
        evaluation = loss_tregs_two_view(a, b, weights)
        expected = loss_treg(a, weights).total + loss_treg(b, weights).total
        assert evaluation.total == pytest.approx(expected, rel=1e-12)
        np.testing.assert_allclose(evaluation.grad, loss_treg(a, weights).grad, atol=1e-15)

    def test_recombination(self, views):
        """The total matches the three component calls."""
        a, b = views
        evaluation = loss_tregs_two_view(a, b, EMBEDDING_WEIGHTS)
        l_mse = loss_mse(a, b)[0]
        expected = 10.0 * l_mse + loss_treg(a, EMBEDDING_WEIGHTS).total + loss_treg(b, EMBEDDING_WEIGHTS).total
        assert evaluation.total == pytest.approx(expected, rel=1e-12)
        assert evaluation.report.recombine(EMBEDDING_WEIGHTS, "tregs-two-view") == pytest.approx(
            evaluation.total, rel=1e-12
        )

    def test_gradients_match_finite_differences(self, rng):
        """Both view gradients against central differences."""
        weights = LossWeights(beta=1.0, gamma=1.0, lambda_s=1.0)
        a = rng.standard_normal((6, 3))
        b = rng.standard_normal((6, 3))
        evaluation = loss_tregs_two_view(PointCloud(a), PointCloud(b), weights)
        numeric_a = central_difference_gradient(
            lambda p: loss_tregs_two_view(PointCloud(p), PointCloud(b), weights).total, a, step=1e-6
        )
        numeric_b = central_difference_gradient(
            lambda p: loss_tregs_two_view(PointCloud(a), PointCloud(p), weights).total, b, step=1e-6
        )
        assert max_relative_error(evaluation.grad, numeric_a) <= 1e-5
        assert max_relative_error(evaluation.grad_b, numeric_b) <= 1e-5


class TestLossVarCov:
    """Variance hinge plus covariance baseline."""

    def test_spread_decorrelated_cloud(self):
        """Variance above one and no off-diagonal covariance cost nothing."""
        cloud = PointCloud([[1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])
        evaluation = loss_var_cov(cloud, LossWeights())
        assert evaluation.report.l_var == 0.0
        assert evaluation.report.l_cov == 0.0
        assert evaluation.total == 0.0

    def test_identical_points(self):
        """Zero variance pays 1 - sqrt(eps) per dimension."""
        cloud = PointCloud(np.ones((5, 3)))
        evaluation = loss_var_cov(cloud, LossWeights(epsilon=1e-4))
        assert evaluation.report.l_var == pytest.approx(1.0 - math.sqrt(1e-4), rel=1e-12)
        assert evaluation.report.l_cov == 0.0

    def test_matches_matrix_formula(self, rng):
        """Non-isotropic Gaussian sample against a direct formula with nu=25, tau=1."""
        points = rng.standard_normal((200, 3)) * np.array([0.5, 1.5, 0.2])
        points[:, 1] += 0.7 * points[:, 0]
        weights = LossWeights(nu=25.0, tau=1.0, epsilon=1e-4)
        evaluation = loss_var_cov(PointCloud(points), weights)

        cov = np.cov(points, rowvar=False)
        std = np.sqrt(np.diag(cov) + 1e-4)
        l_var = np.mean(np.maximum(0.0, 1.0 - std))
        off = cov - np.diag(np.diag(cov))
        l_cov = np.sum(off ** 2) / 3
        assert evaluation.report.l_var == pytest.approx(l_var, rel=1e-9)
        assert evaluation.report.l_cov == pytest.approx(l_cov, rel=1e-9)
        assert evaluation.total == pytest.approx(25.0 * l_var + l_cov, rel=1e-9)

    def test_matches_finite_differences(self, rng):
        """Analytic gradient with an active hinge."""
        weights = LossWeights(nu=25.0, tau=1.0)
        points = 0.5 * rng.standard_normal((10, 4))
        evaluation = loss_var_cov(PointCloud(points), weights)
        numeric = central_difference_gradient(
            lambda p: loss_var_cov(PointCloud(p), weights).total, points
        )
        assert max_relative_error(evaluation.grad, numeric) <= 1e-5

    def test_recombination(self, rng):
        """nu * l_var + tau * l_cov."""
        weights = LossWeights(nu=25.0, tau=1.0)
        evaluation = loss_var_cov(PointCloud(rng.standard_normal((30, 3))), weights)
        assert evaluation.report.recombine(weights, "var-cov") == pytest.approx(evaluation.total, rel=1e-12)

    def test_requires_two_points(self):
        """The sample covariance needs n >= 2."""
        with pytest.raises(InputValidationError):
            loss_var_cov(PointCloud([[1.0, 2.0]]), LossWeights())
