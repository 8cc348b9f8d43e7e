"""
Finite-difference helpers for checking analytic gradients.
"""
from typing import Callable

import numpy as np


def central_difference_gradient(
    fn: Callable[[np.ndarray], float],
    points: np.ndarray,
    step: float = 1e-5,
) -> np.ndarray:
    """
    Central finite-difference gradient of a scalar function of a matrix.

    Args:
        fn: Scalar function of an n x d array
        points: Where to differentiate
        step: Perturbation applied to one entry at a time

    Returns:
        Array of the same shape as points
    """
    points = np.array(points, dtype=np.float64)
    grad = np.zeros_like(points)
    for index in np.ndindex(points.shape):
        original = points[index]
        points[index] = original + step
        upper = fn(points)
        points[index] = original - step
        lower = fn(points)
        points[index] = original
        grad[index] = (upper - lower) / (2.0 * step)
    return grad


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> float:
    """
    Largest entrywise |analytic - numeric| relative to the gradient's scale.

    Entries are compared against max(|analytic|_inf, floor) so that near-zero entries
    do not inflate the ratio.
    """
    scale = max(float(np.max(np.abs(analytic), initial=0.0)), floor)
    return float(np.max(np.abs(analytic - numeric), initial=0.0) / scale)
