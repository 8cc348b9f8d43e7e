"""
Synthetic Point-Cloud Generators

Seeded samplers for every experiment scenario: Gaussian initializations,
degenerate starting clouds for the spreading experiments, uniform supports for
dimension estimation, spherical densities for the uniformity comparisons and a
chaos-game fractal. Identical GeneratorSpec values always give identical clouds.
"""
import logging
import math
from typing import Any, Callable, Dict

import numpy as np
from scipy.stats import vonmises_fisher

from app.core.exceptions import InputValidationError
from app.schemas.generator_schema import GeneratorKind, GeneratorSpec
from app.services.point_cloud import PointCloud

logger = logging.getLogger(__name__)

SIERPINSKI_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3.0) / 2.0]])

# Per-kind parameters and their defaults; anything else in spec.params is rejected
PARAM_DEFAULTS: Dict[GeneratorKind, Dict[str, Any]] = {
    GeneratorKind.ISOTROPIC_GAUSSIAN: {"std": 1.0},
    GeneratorKind.NEAR_POINT: {"radius": 0.001},
    GeneratorKind.CURVE_ON_SPHERE: {"turns": 1.5, "polar_start": 0.15, "polar_end": 0.5},
    GeneratorKind.CIRCLE_COLLAPSED: {"radius": 1.0, "jitter": 0.0},
    GeneratorKind.NON_ISOTROPIC_GAUSSIAN: {"stds": None, "rotation_deg": 0.0},
    GeneratorKind.UNIFORM_CUBE: {"side": 1.0},
    GeneratorKind.UNIFORM_SEGMENT: {"length": 1.0},
    GeneratorKind.UNIFORM_SPHERE: {},
    GeneratorKind.HALF_SPHERE: {},
    GeneratorKind.VON_MISES_FISHER: {"kappa": 10.0, "mu": None},
    GeneratorKind.SIERPINSKI: {"depth": 40},
}

# Smallest ambient dimension each kind is defined for
MIN_DIM = {
    GeneratorKind.CURVE_ON_SPHERE: 3,
    GeneratorKind.CIRCLE_COLLAPSED: 2,
    GeneratorKind.UNIFORM_SPHERE: 2,
    GeneratorKind.HALF_SPHERE: 2,
    GeneratorKind.VON_MISES_FISHER: 2,
    GeneratorKind.SIERPINSKI: 2,
}


def _positive(params: Dict[str, Any], key: str) -> float:
    value = float(params[key])
    if not (value > 0 and math.isfinite(value)):
        raise InputValidationError(f"{key} must be a positive finite number, got {params[key]!r}")
    return value


def uniform_ball(rng: np.random.Generator, n: int, d: int, radius: float) -> np.ndarray:
    """
    n points uniform in the d-ball of the given radius.

    A uniform direction is scaled by radius * U^(1/d).
    """
    directions = rng.standard_normal((n, d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = radius * rng.random(n) ** (1.0 / d)
    return directions * radii[:, None]


def uniform_sphere(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    """n points uniform on the unit sphere S^(d-1)."""
    points = rng.standard_normal((n, d))
    return points / np.linalg.norm(points, axis=1, keepdims=True)


def _isotropic_gaussian(spec, params, rng):
    return _positive(params, "std") * rng.standard_normal((spec.n, spec.d))


def _near_point(spec, params, rng):
    points = uniform_ball(rng, spec.n, spec.d, _positive(params, "radius"))
    points[:, 0] += 1.0
    return points


def _curve_on_sphere(spec, params, rng):
    # Spherical spiral in the first three coordinates; the polar angle sweeps
    # [polar_start, polar_end] * pi while the azimuth turns `turns` times.
    turns = _positive(params, "turns")
    start, end = float(params["polar_start"]), float(params["polar_end"])
    if not 0 <= start < end <= 1:
        raise InputValidationError(f"Need 0 <= polar_start < polar_end <= 1, got {start}, {end}")
    t = np.linspace(0.0, 1.0, spec.n)
    theta = math.pi * (start + (end - start) * t)
    phi = 2.0 * math.pi * turns * t
    points = np.zeros((spec.n, spec.d))
    points[:, 0] = np.sin(theta) * np.cos(phi)
    points[:, 1] = np.sin(theta) * np.sin(phi)
    points[:, 2] = np.cos(theta)
    return points


def _circle_collapsed(spec, params, rng):
    """Circle in the first two coordinates; jitter adds Gaussian noise in every coordinate."""
    radius = _positive(params, "radius")
    jitter = float(params["jitter"])
    if not (jitter >= 0 and math.isfinite(jitter)):
        raise InputValidationError(f"jitter must be a non-negative finite number, got {params['jitter']!r}")
    angles = rng.uniform(0.0, 2.0 * math.pi, spec.n)
    points = np.zeros((spec.n, spec.d))
    points[:, 0] = radius * np.cos(angles)
    points[:, 1] = radius * np.sin(angles)
    if jitter > 0:
        points += jitter * rng.standard_normal((spec.n, spec.d))
    return points


def _non_isotropic_gaussian(spec, params, rng):
    stds = params["stds"]
    if stds is None:
        stds = [2.0, 0.5] + [1.0] * (spec.d - 2) if spec.d >= 2 else [2.0]
    stds = np.asarray(stds, dtype=np.float64)
    if stds.shape != (spec.d,) or np.any(stds <= 0):
        raise InputValidationError(f"stds must hold {spec.d} positive values, got {params['stds']!r}")
    points = rng.standard_normal((spec.n, spec.d)) * stds

    rotation_deg = float(params["rotation_deg"])
    if rotation_deg != 0.0:
        if spec.d < 2:
            raise InputValidationError("rotation_deg needs d >= 2")
        angle = math.radians(rotation_deg)
        rotation = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
        points[:, :2] = points[:, :2] @ rotation.T
    return points


def _uniform_cube(spec, params, rng):
    return _positive(params, "side") * rng.random((spec.n, spec.d))


def _uniform_segment(spec, params, rng):
    points = np.zeros((spec.n, spec.d))
    points[:, 0] = _positive(params, "length") * rng.random(spec.n)
    return points


def _uniform_sphere(spec, params, rng):
    return uniform_sphere(rng, spec.n, spec.d)


def _half_sphere(spec, params, rng):
    points = uniform_sphere(rng, spec.n, spec.d)
    points[:, 0] = np.abs(points[:, 0])
    return points


def _von_mises_fisher(spec, params, rng):
    kappa = _positive(params, "kappa")
    mu = params["mu"]
    if mu is None:
        mu = np.eye(spec.d)[0]
    mu = np.asarray(mu, dtype=np.float64)
    if mu.shape != (spec.d,) or np.linalg.norm(mu) == 0:
        raise InputValidationError(f"mu must be a nonzero vector of length {spec.d}")
    mu = mu / np.linalg.norm(mu)
    return vonmises_fisher(mu, kappa).rvs(spec.n, random_state=rng)


def _sierpinski(spec, params, rng):
    # One chaos-game walker per point: start on a vertex and jump halfway to a
    # random vertex `depth` times. The triangle is invariant under every jump.
    depth = int(params["depth"])
    if depth < 1:
        raise InputValidationError(f"depth must be >= 1, got {depth}")
    choices = rng.integers(0, 3, size=(spec.n, depth + 1))
    points = SIERPINSKI_VERTICES[choices[:, 0]].copy()
    for k in range(1, depth + 1):
        points = 0.5 * (points + SIERPINSKI_VERTICES[choices[:, k]])
    return points


SAMPLERS: Dict[GeneratorKind, Callable] = {
    GeneratorKind.ISOTROPIC_GAUSSIAN: _isotropic_gaussian,
    GeneratorKind.NEAR_POINT: _near_point,
    GeneratorKind.CURVE_ON_SPHERE: _curve_on_sphere,
    GeneratorKind.CIRCLE_COLLAPSED: _circle_collapsed,
    GeneratorKind.NON_ISOTROPIC_GAUSSIAN: _non_isotropic_gaussian,
    GeneratorKind.UNIFORM_CUBE: _uniform_cube,
    GeneratorKind.UNIFORM_SEGMENT: _uniform_segment,
    GeneratorKind.UNIFORM_SPHERE: _uniform_sphere,
    GeneratorKind.HALF_SPHERE: _half_sphere,
    GeneratorKind.VON_MISES_FISHER: _von_mises_fisher,
    GeneratorKind.SIERPINSKI: _sierpinski,
}


def resolve_params(spec: GeneratorSpec) -> Dict[str, Any]:
    """
    Merge spec.params over the kind's defaults.

    Raises:
        InputValidationError: For parameters the kind does not know
    """
    defaults = PARAM_DEFAULTS[spec.kind]
    unknown = set(spec.params) - set(defaults)
    if unknown:
        raise InputValidationError(
            f"Unknown parameters for {spec.kind.value}: {sorted(unknown)}; known: {sorted(defaults)}"
        )
    return {**defaults, **spec.params}


def generate(spec: GeneratorSpec) -> PointCloud:
    """
    Sample the point cloud described by a generator spec.

    Args:
        spec: Kind, size, parameters and seed

    Returns:
        PointCloud with spec.n points in R^spec.d

    Raises:
        InputValidationError: When the kind is not defined in spec.d dimensions or a
            parameter is out of range
    """
    min_dim = MIN_DIM.get(spec.kind, 1)
    if spec.d < min_dim:
        raise InputValidationError(f"{spec.kind.value} needs d >= {min_dim}, got d={spec.d}")
    if spec.kind == GeneratorKind.SIERPINSKI and spec.d != 2:
        raise InputValidationError(f"sierpinski lives in the plane, got d={spec.d}")

    params = resolve_params(spec)
    rng = np.random.default_rng(spec.seed)
    points = SAMPLERS[spec.kind](spec, params, rng)
    logger.debug(f"Generated {spec.kind.value} cloud n={spec.n} d={spec.d} seed={spec.seed}")
    return PointCloud(points)
