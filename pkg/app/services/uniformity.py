"""
Uniformity Metrics

The MST-based uniformity score, executable checks of its four constraints
(instance permutation, instance cloning, feature cloning, feature baby),
pairwise cosine statistics and the dimensional-collapse scan.
"""
import logging
import math
from typing import Optional, Sequence

import numpy as np
from scipy.stats import spearmanr

from app.core.config import TREG_CONFIG
from app.core.exceptions import InputValidationError
from app.schemas.metric_schema import CollapseScan, CosineStats, UniformityPropertyReport, UniformityScore
from app.services import mst_engine
from app.services.point_cloud import PointCloud
from app.services.utils.parallel import ordered_map

logger = logging.getLogger(__name__)


def simplex_normalizer(d: int) -> float:
    """Edge length of the regular d-simplex inscribed in the unit sphere S^(d-1)."""
    return math.sqrt(2.0 * (d + 1) / d)


def u_treg(cloud: PointCloud) -> UniformityScore:
    """
    Uniformity score -E(MST(Z)) / sqrt(2(d+1)/d).

    Args:
        cloud: Point cloud with n >= 2

    Returns:
        UniformityScore; higher magnitude means more spread out
    """
    if cloud.n < 2:
        raise InputValidationError(f"u_treg needs at least 2 points, got n={cloud.n}")
    raw = mst_engine.compute_mst(cloud).total_length
    normalizer = simplex_normalizer(cloud.d)
    value = -raw / normalizer if raw > 0 else 0.0
    return UniformityScore(value=value, raw_mst_length=raw, dim=cloud.d, normalizer=normalizer)


def check_uniformity_properties(
    cloud: PointCloud,
    clone_extra_dims: int = 1,
    seed: int = 0,
) -> UniformityPropertyReport:
    """
    Evaluate the four uniformity constraints on one cloud.

    - permutation: U(pi Z) == U(Z) exactly
    - instance_cloning: U of the cloud with every point duplicated equals U(Z) to 1e-9 relative
    - feature_cloning: U(Z concatenated with Z) < U(Z)
    - feature_baby: U(Z padded with k zero coordinates) < U(Z)

    The strict inequalities only hold when E(MST(Z)) > 0, so they are reported as
    skipped for clouds of identical points.

    Args:
        cloud: Point cloud with n >= 2
        clone_extra_dims: Number of zero coordinates k >= 1 for the feature-baby check
        seed: Seed of the permutation

    Returns:
        UniformityPropertyReport
    """
    if clone_extra_dims < 1:
        raise InputValidationError(f"clone_extra_dims must be >= 1, got {clone_extra_dims}")
    base = u_treg(cloud)

    permutation = np.random.default_rng(seed).permutation(cloud.n)
    permuted = u_treg(cloud.permuted(permutation))
    duplicated = u_treg(cloud.duplicated())

    report = {
        "permutation": permuted.value == base.value,
        "instance_cloning": math.isclose(duplicated.value, base.value, rel_tol=1e-9, abs_tol=0.0),
    }
    if base.raw_mst_length == 0:
        report["skipped"] = ["feature_cloning", "feature_baby"]
        logger.info("All points coincide; feature cloning and feature baby checks skipped")
        return UniformityPropertyReport(**report)

    report["feature_cloning"] = u_treg(cloud.feature_cloned()).value < base.value
    report["feature_baby"] = u_treg(cloud.with_zero_features(clone_extra_dims)).value < base.value
    return UniformityPropertyReport(**report)


def cosine_stats(cloud: PointCloud, bins: Optional[int] = None) -> CosineStats:
    """
    Mean, standard deviation and histogram of pairwise cosine similarities.

    Cosines are taken between the raw (uncentered) vectors over all pairs i < j.

    Args:
        cloud: Point cloud with n >= 2 and no zero vectors
        bins: Number of uniform bins over [-1, 1] (default 64)

    Returns:
        CosineStats
    """
    if cloud.n < 2:
        raise InputValidationError(f"cosine_stats needs at least 2 points, got n={cloud.n}")
    norms = cloud.norms()
    if np.any(norms == 0):
        raise InputValidationError(f"{int(np.sum(norms == 0))} zero vectors have no cosine similarity")
    bins = bins or TREG_CONFIG["uniformity"]["histogram_bins"]

    unit = cloud.points / norms[:, None]
    rows, cols = np.triu_indices(cloud.n, k=1)
    cosines = np.clip(np.einsum("ij,ij->i", unit[rows], unit[cols]), -1.0, 1.0)
    histogram, _ = np.histogram(cosines, bins=bins, range=(-1.0, 1.0))
    return CosineStats(
        mean=float(np.mean(cosines)),
        std=float(np.std(cosines)),
        histogram=histogram.tolist(),
    )


def zeroed_dim_count(eta: float, d: int) -> int:
    # Tolerance keeps products like 0.3 * 10 from rounding down to 2
    return int(math.floor(eta * d + 1e-9))


def collapse_scan(
    n: int,
    d: int,
    etas: Optional[Sequence[float]] = None,
    seed: int = 0,
    threads: Optional[int] = None,
) -> CollapseScan:
    """
    MST spread of an isotropic Gaussian sample as coordinates are zeroed.

    The sample is drawn once; for each eta the last floor(eta * d) coordinates of
    every point are set to zero and -L_E = E(MST) / n is recorded.

    Args:
        n: Number of points (>= 2)
        d: Ambient dimension (>= 2)
        etas: Strictly increasing collapse fractions in [0, 1)
        seed: RNG seed of the Gaussian sample
        threads: Worker threads for the per-eta evaluations

    Returns:
        CollapseScan
    """
    config = TREG_CONFIG["uniformity"]
    etas = list(config["collapse_etas"] if etas is None else etas)
    if d < 2:
        raise InputValidationError(f"collapse_scan needs d >= 2, got d={d}")
    if n < 2:
        raise InputValidationError(f"collapse_scan needs n >= 2, got n={n}")
    if not etas:
        raise InputValidationError("At least one eta is required")
    if any(not (0 <= eta < 1) for eta in etas):
        raise InputValidationError(f"Every eta must lie in [0, 1), got {etas}")
    if any(b <= a for a, b in zip(etas, etas[1:])):
        raise InputValidationError(f"etas must be strictly increasing, got {etas}")

    sample = np.random.default_rng(seed).standard_normal((n, d))
    zeroed = [zeroed_dim_count(eta, d) for eta in etas]

    def score(k: int) -> float:
        points = sample.copy()
        if k:
            points[:, d - k:] = 0.0
        return mst_engine.compute_mst(PointCloud(points)).total_length / n

    scores = ordered_map(score, zeroed, threads)
    logger.info(f"Collapse scan n={n} d={d} seed={seed}: -L_E from {scores[0]:.6g} to {scores[-1]:.6g}")
    return CollapseScan(etas=etas, scores=scores, zeroed_dims=zeroed, n=n, d=d, seed=seed)


def collapse_spearman(scan: CollapseScan) -> float:
    """Spearman rank correlation of (eta, -L_E); close to -1 for a monotone decay."""
    if len(scan.etas) < 2:
        raise InputValidationError("Spearman correlation needs at least two scan points")
    rho, _ = spearmanr(scan.etas, scan.scores)
    return float(rho)
