"""
MST Dimension Estimator

Intrinsic dimension from the growth rate of the MST length: for n i.i.d.
samples of a d-dimensional support the length grows like C * n^((d-1)/d), so
the slope s of log E against log n gives d = 1 / (1 - s).

Also compares the MST lengths of two samplers on the same support, which is
how the uniform density's maximal spread is checked empirically.
"""
import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.core.config import TREG_CONFIG
from app.core.exceptions import InputValidationError
from app.schemas.generator_schema import GeneratorSpec
from app.schemas.metric_schema import DensityComparison, DimensionFit
from app.services import mst_engine
from app.services.generators import generate
from app.services.utils.parallel import ordered_map

logger = logging.getLogger(__name__)


def trial_seed(seed: int, *counters: int) -> int:
    """Independent child seed for a (seed, counters...) tuple."""
    return int(np.random.SeedSequence([seed, *counters]).generate_state(1)[0])


def _mst_length(spec: GeneratorSpec, scale: float = 1.0) -> float:
    cloud = generate(spec)
    if scale != 1.0:
        cloud = cloud.with_points(cloud.points * scale)
    mst = mst_engine.compute_mst(cloud)
    if mst.n > 1 and mst.min_edge_length == 0:
        raise InputValidationError(
            f"{spec.kind.value} produced coincident points at n={spec.n} (seed {spec.seed}); "
            f"the growth rate is undefined"
        )
    return mst.total_length


def _validate_sizes(sizes: Sequence[int]) -> List[int]:
    config = TREG_CONFIG["dimension"]
    sizes = [int(n) for n in sizes]
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise InputValidationError(f"sizes must be strictly increasing, got {sizes}")
    if len(sizes) < config["min_sizes"]:
        raise InputValidationError(f"Need at least {config['min_sizes']} sizes, got {len(sizes)}")
    if sizes[0] < config["min_size"]:
        raise InputValidationError(f"Every size must be >= {config['min_size']}, got {sizes[0]}")
    if sizes[-1] / sizes[0] < config["min_span"]:
        raise InputValidationError(
            f"sizes must span a factor of at least {config['min_span']}, got {sizes[-1] / sizes[0]:.3g}"
        )
    return sizes


def fit_growth_rate(sizes: Sequence[int], lengths: Sequence[float]) -> Tuple[float, float, float]:
    """
    Least-squares line through (log n, log length).

    Returns:
        Tuple of (slope, intercept, r_squared)
    """
    x = np.log(np.asarray(sizes, dtype=np.float64))
    y = np.log(np.asarray(lengths, dtype=np.float64))
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(residual ** 2))
    r_squared = 1.0 if ss_tot == 0 else min(max(1.0 - ss_res / ss_tot, 0.0), 1.0)
    return float(slope), float(intercept), r_squared


def estimate_dimension(
    sampler: GeneratorSpec,
    sizes: Optional[Sequence[int]] = None,
    trials: Optional[int] = None,
    seed: int = 0,
    threads: Optional[int] = None,
    scale: float = 1.0,
) -> DimensionFit:
    """
    Estimate the intrinsic dimension of a sampler from its MST growth rate.

    For every size the MST length is averaged over trials, then
    log(mean length) is regressed on log n. Trial t at size index k draws from
    the seed derived from (seed, k, t), so results do not depend on threads.

    Args:
        sampler: Generator spec; its n and seed are replaced per trial
        sizes: At least 4 strictly increasing sample sizes >= 4 spanning a factor of 8
        trials: Repetitions per size
        seed: Base seed (>= 0)
        threads: Worker threads for the trials
        scale: Factor applied to every sample

    Returns:
        DimensionFit
    """
    config = TREG_CONFIG["dimension"]
    sizes = _validate_sizes(config["sizes"] if sizes is None else sizes)
    trials = config["trials"] if trials is None else int(trials)
    if trials < 1:
        raise InputValidationError(f"trials must be >= 1, got {trials}")
    if seed < 0:
        raise InputValidationError(f"seed must be >= 0, got {seed}")
    if not (scale > 0 and math.isfinite(scale)):
        raise InputValidationError(f"scale must be positive, got {scale}")

    jobs = [
        sampler.with_size(n, trial_seed(seed, k, t))
        for k, n in enumerate(sizes)
        for t in range(trials)
    ]
    raw = ordered_map(lambda spec: _mst_length(spec, scale), jobs, threads)
    lengths = [math.fsum(raw[k * trials:(k + 1) * trials]) / trials for k in range(len(sizes))]

    slope, intercept, r_squared = fit_growth_rate(sizes, lengths)
    unbounded = slope >= 1
    dim_estimate = math.inf if unbounded else 1.0 / (1.0 - slope)
    logger.info(
        f"{sampler.kind.value}: slope={slope:.4f} dim_estimate={dim_estimate:.4f} r^2={r_squared:.4f}"
    )
    return DimensionFit(
        sample_sizes=sizes,
        lengths=lengths,
        slope=slope,
        intercept=intercept,
        dim_estimate=dim_estimate,
        unbounded=unbounded,
        r_squared=r_squared,
        trials=trials,
    )


def compare_densities(
    uniform_sampler: GeneratorSpec,
    concentrated_sampler: GeneratorSpec,
    n: Optional[int] = None,
    trials: Optional[int] = None,
    seed: int = 0,
    threads: Optional[int] = None,
) -> DensityComparison:
    """
    Per-trial MST lengths of two samplers on the same support.

    Args:
        uniform_sampler: Spec of the uniform density
        concentrated_sampler: Spec of the comparator density
        n: Points per sample
        trials: Number of paired trials (>= 10)
        seed: Base seed

    Returns:
        DensityComparison; wins counts trials where the uniform sample is longer
    """
    config = TREG_CONFIG["verification"]
    n = config["density_points"] if n is None else int(n)
    trials = config["density_trials"] if trials is None else int(trials)
    if trials < 10:
        raise InputValidationError(f"compare_densities needs at least 10 trials, got {trials}")
    if uniform_sampler.d != concentrated_sampler.d:
        raise InputValidationError(
            f"Samplers live in different dimensions ({uniform_sampler.d} vs {concentrated_sampler.d})"
        )
    if seed < 0:
        raise InputValidationError(f"seed must be >= 0, got {seed}")

    jobs = [
        spec.with_size(n, trial_seed(seed, which, t))
        for which, spec in enumerate((uniform_sampler, concentrated_sampler))
        for t in range(trials)
    ]
    lengths = ordered_map(_mst_length, jobs, threads)
    uniform_lengths, concentrated_lengths = lengths[:trials], lengths[trials:]
    wins = sum(u > c for u, c in zip(uniform_lengths, concentrated_lengths))
    logger.info(
        f"{uniform_sampler.kind.value} beat {concentrated_sampler.kind.value} in {wins}/{trials} trials"
    )
    return DensityComparison(
        mean_uniform=math.fsum(uniform_lengths) / trials,
        mean_concentrated=math.fsum(concentrated_lengths) / trials,
        wins=wins,
        trials=trials,
        uniform_lengths=uniform_lengths,
        concentrated_lengths=concentrated_lengths,
    )
