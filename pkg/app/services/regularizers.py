"""
Regularizers

Scalar losses on point clouds together with their analytic gradients:

- loss_e: negative MST length per point (spreading term)
- loss_s: soft unit-sphere penalty
- loss_treg: gamma * loss_e + lambda * loss_s
- loss_mse: mean squared distance between two views
- loss_tregs_two_view: beta * loss_mse + loss_treg on each view
- loss_var_cov: variance hinge plus off-diagonal covariance baseline

Every loss returns its value and gradient from one evaluation, so the MST of
each view is built once per call.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from app.core.exceptions import InputValidationError
from app.schemas.loss_schema import LossReport, LossWeights
from app.services import mst_engine
from app.services.mst_engine import Mst, MstGradient
from app.services.point_cloud import PointCloud

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LossEvaluation:
    """
    Value and gradient of a weighted objective.

    grad is the gradient with respect to the first (or only) view; grad_b is set
    for two-view objectives. mst / mst_b are the trees the evaluation used.
    """
    report: LossReport
    grad: np.ndarray
    grad_b: Optional[np.ndarray] = None
    mst: Optional[Mst] = None
    mst_b: Optional[Mst] = None
    has_duplicates: bool = False

    @property
    def total(self) -> float:
        return self.report.total


def _require_points(cloud: PointCloud, minimum: int, loss: str) -> None:
    if cloud.n < minimum:
        raise InputValidationError(f"{loss} needs at least {minimum} points, got n={cloud.n}")


def loss_e(cloud: PointCloud, mst: Optional[Mst] = None) -> Tuple[float, MstGradient]:
    """
    Negative MST length per point, -E(MST(Z)) / n.

    Args:
        cloud: Point cloud with n >= 2
        mst: The cloud's MST when already built

    Returns:
        Tuple of (value, gradient). The gradient is -(1/n) times the MST length gradient.
    """
    _require_points(cloud, 2, "loss_e")
    if mst is None:
        mst = mst_engine.compute_mst(cloud)
    gradient = mst_engine.mst_length_gradient(cloud, mst)
    return -mst.total_length / cloud.n, gradient.scaled(-1.0 / cloud.n)


def loss_s(cloud: PointCloud) -> Tuple[float, np.ndarray]:
    """
    Soft sphere penalty (1/n) * sum (||z_i|| - 1)^2.

    The gradient row of a point at the origin is zero.
    """
    norms = cloud.norms()
    deviation = norms - 1.0
    value = float(np.mean(deviation ** 2))

    grad = np.zeros_like(cloud.points)
    nonzero = norms > 0
    grad[nonzero] = (
        (2.0 / cloud.n) * (deviation[nonzero] / norms[nonzero])[:, None] * cloud.points[nonzero]
    )
    return value, grad


def loss_treg(cloud: PointCloud, weights: LossWeights, mst: Optional[Mst] = None) -> LossEvaluation:
    """
    T-REG objective gamma * loss_e + lambda_s * loss_s.

    Args:
        cloud: Point cloud with n >= 2
        weights: Loss weights (gamma, lambda_s are used)
        mst: The cloud's MST when already built

    Returns:
        LossEvaluation with l_e, l_s and the weighted total
    """
    _require_points(cloud, 2, "loss_treg")
    if mst is None:
        mst = mst_engine.compute_mst(cloud)
    l_e, grad_e = loss_e(cloud, mst)
    l_s, grad_s = loss_s(cloud)

    total = weights.gamma * l_e + weights.lambda_s * l_s
    grad = weights.gamma * grad_e.grads + weights.lambda_s * grad_s
    report = LossReport(l_e=l_e, l_s=l_s, total=total)
    return LossEvaluation(report=report, grad=grad, mst=mst, has_duplicates=grad_e.has_duplicates)


def loss_mse(a: PointCloud, b: PointCloud) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    Mean squared view distance (1/n) * sum ||a_i - b_i||^2.

    Returns:
        Tuple of (value, gradient on a, gradient on b)
    """
    if a.points.shape != b.points.shape:
        raise InputValidationError(
            f"Views must have the same shape, got {a.points.shape} and {b.points.shape}"
        )
    diff = a.points - b.points
    value = float(np.sum(diff ** 2) / a.n)
    grad_a = (2.0 / a.n) * diff
    return value, grad_a, -grad_a


def loss_tregs_two_view(a: PointCloud, b: PointCloud, weights: LossWeights) -> LossEvaluation:
    """
    Two-view objective beta * loss_mse(a, b) + loss_treg(a) + loss_treg(b).

    The report's l_e and l_s are the sums over both views, so
    total = beta * l_mse + gamma * l_e + lambda_s * l_s.

    Args:
        a: First view, n >= 2
        b: Second view, same shape as a
        weights: Loss weights (beta, gamma, lambda_s are used)

    Returns:
        LossEvaluation with gradients for both views
    """
    l_mse, grad_mse_a, grad_mse_b = loss_mse(a, b)
    view_a = loss_treg(a, weights)
    view_b = loss_treg(b, weights)

    l_e = view_a.report.l_e + view_b.report.l_e
    l_s = view_a.report.l_s + view_b.report.l_s
    total = weights.beta * l_mse + view_a.total + view_b.total
    report = LossReport(l_e=l_e, l_s=l_s, l_mse=l_mse, total=total)
    return LossEvaluation(
        report=report,
        grad=weights.beta * grad_mse_a + view_a.grad,
        grad_b=weights.beta * grad_mse_b + view_b.grad,
        mst=view_a.mst,
        mst_b=view_b.mst,
        has_duplicates=view_a.has_duplicates or view_b.has_duplicates,
    )


def loss_var_cov(cloud: PointCloud, weights: LossWeights) -> LossEvaluation:
    """
    Variance-covariance baseline nu * L_var + tau * L_cov.

    L_var = (1/d) sum_j max(0, 1 - sqrt(Var(z^j) + eps)) and
    L_cov = (1/d) sum_{i != j} C_ij^2 with C = (Z - mean)^T (Z - mean) / (n - 1).
    Variances use the same (n - 1) normalization as C.

    Args:
        cloud: Point cloud with n >= 2
        weights: Loss weights (nu, tau, epsilon are used)

    Returns:
        LossEvaluation with l_var, l_cov and the weighted total
    """
    _require_points(cloud, 2, "loss_var_cov")
    n, d = cloud.n, cloud.d
    centered = cloud.points - cloud.points.mean(axis=0)
    cov = centered.T @ centered / (n - 1)

    std = np.sqrt(np.diag(cov) + weights.epsilon)
    active = std < 1.0
    l_var = float(np.sum(np.where(active, 1.0 - std, 0.0)) / d)
    grad_var = -(1.0 / d) * centered * (active / ((n - 1) * std))[None, :]

    off_diagonal = cov - np.diag(np.diag(cov))
    l_cov = float(np.sum(off_diagonal ** 2) / d)
    grad_cov = (4.0 / (d * (n - 1))) * centered @ off_diagonal

    total = weights.nu * l_var + weights.tau * l_cov
    report = LossReport(l_var=l_var, l_cov=l_cov, total=total)
    return LossEvaluation(report=report, grad=weights.nu * grad_var + weights.tau * grad_cov)
