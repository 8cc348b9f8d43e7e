"""
Verification Suite

Randomized property checks over the whole toolkit. Each block draws its own
clouds from a seed derived from the suite seed and returns a CheckResult:

- oracle: Kruskal against exhaustive spanning-tree enumeration
- lemma1: MST length against (2/n) times the sum of pairwise distances
- gradients: analytic gradients against central finite differences
- uniformity: the four uniformity constraints
- density: uniform samples against concentrated and smaller-support samples
- simplex: alpha-length of random simplices against the regular simplex
"""
import logging
import math
from typing import Callable, Dict, Iterable, List, Optional

import numpy as np

from app.core.config import TREG_CONFIG
from app.core.exceptions import InputValidationError
from app.schemas.experiment_schema import CheckResult, VerificationReport
from app.schemas.generator_schema import GeneratorKind, GeneratorSpec
from app.schemas.loss_schema import LossWeights
from app.services import mst_engine
from app.services.dim_estimator import compare_densities
from app.services.point_cloud import PointCloud, pairwise_distances, sum_pairwise_distances
from app.services.regularizers import loss_mse, loss_s, loss_var_cov
from app.services.uniformity import check_uniformity_properties
from app.services.utils.numerics import central_difference_gradient, max_relative_error

logger = logging.getLogger(__name__)

MAX_DETAIL = 5


class _Tally:
    """Collects case outcomes for one block."""

    def __init__(self, name: str):
        self.name = name
        self.cases = 0
        self.failures = 0
        self.detail: List[str] = []

    def record(self, passed: bool, description: str = "") -> None:
        self.cases += 1
        if not passed:
            self.failures += 1
            if len(self.detail) < MAX_DETAIL:
                self.detail.append(description)

    def result(self) -> CheckResult:
        passed = self.failures == 0 and self.cases > 0
        logger.info(f"[{self.name}] {self.cases - self.failures}/{self.cases} cases passed")
        return CheckResult(
            name=self.name, passed=passed, cases=self.cases, failures=self.failures, detail=self.detail
        )


def _block_rng(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *name.encode("utf-8")]))


def check_oracle(seed: int = 0, clouds: Optional[int] = None) -> CheckResult:
    """Kruskal and brute-force MSTs agree in total length and edge set."""
    config = TREG_CONFIG["verification"]
    clouds = config["oracle_clouds"] if clouds is None else clouds
    rng = _block_rng(seed, "oracle")
    tally = _Tally("oracle")
    for case in range(clouds):
        n = int(rng.integers(2, config["oracle_max_points"] + 1))
        d = int(rng.choice([1, 2, 3, 8]))
        dist = pairwise_distances(PointCloud(rng.random((n, d))))
        fast = mst_engine.kruskal_mst(dist)
        slow = mst_engine.brute_force_mst(dist)
        agree = math.isclose(fast.total_length, slow.total_length, rel_tol=1e-12) and fast.edges == slow.edges
        tally.record(agree, f"case {case} (n={n}, d={d}): kruskal {fast.total_length!r} vs oracle {slow.total_length!r}")
    return tally.result()


def check_lemma1(seed: int = 0, clouds: Optional[int] = None) -> CheckResult:
    """E(MST(Z)) <= (2/n) * sum of pairwise distances."""
    config = TREG_CONFIG["verification"]
    clouds = config["lemma1_clouds"] if clouds is None else clouds
    rng = _block_rng(seed, "lemma1")
    tally = _Tally("lemma1")
    for case in range(clouds):
        n = int(rng.integers(2, 65))
        d = int(rng.integers(1, 33))
        dist = pairwise_distances(PointCloud(rng.standard_normal((n, d))))
        length = mst_engine.kruskal_mst(dist).total_length
        bound = 2.0 / n * sum_pairwise_distances(dist)
        tally.record(length <= bound * (1 + 1e-12), f"case {case} (n={n}, d={d}): {length!r} > {bound!r}")
    return tally.result()


def _mst_length_of(points: np.ndarray) -> float:
    return mst_engine.compute_mst(PointCloud(points)).total_length


def check_gradients(seed: int = 0, clouds: Optional[int] = None) -> CheckResult:
    """
    Analytic gradients of the MST length, loss_s, loss_mse and loss_var_cov
    against central finite differences; MST gradient rows must sum to zero.
    """
    config = TREG_CONFIG["verification"]
    clouds = config["gradient_clouds"] if clouds is None else clouds
    step, rtol = config["gradient_step"], config["gradient_rtol"]
    weights = LossWeights(nu=25.0, tau=1.0)
    rng = _block_rng(seed, "gradients")
    tally = _Tally("gradients")

    for case in range(clouds):
        n = int(rng.integers(3, 9))
        d = int(rng.integers(2, 5))
        points = rng.standard_normal((n, d))
        other = rng.standard_normal((n, d))
        cloud = PointCloud(points)

        mst = mst_engine.compute_mst(cloud)
        analytic = mst_engine.mst_length_gradient(cloud, mst).grads
        numeric = central_difference_gradient(_mst_length_of, points, step)
        error = max_relative_error(analytic, numeric)
        tally.record(error <= rtol, f"case {case}: MST gradient relative error {error:.3g}")

        row_sum = float(np.max(np.abs(analytic.sum(axis=0))))
        row_scale = float(np.max(np.linalg.norm(analytic, axis=1)))
        tally.record(row_sum <= 1e-9 * max(row_scale, 1.0), f"case {case}: gradient rows sum to {row_sum:.3g}")

        _, grad_s = loss_s(cloud)
        numeric_s = central_difference_gradient(lambda p: loss_s(PointCloud(p))[0], points, step)
        error = max_relative_error(grad_s, numeric_s)
        tally.record(error <= rtol, f"case {case}: loss_s relative error {error:.3g}")

        _, grad_a, grad_b = loss_mse(cloud, PointCloud(other))
        numeric_a = central_difference_gradient(lambda p: loss_mse(PointCloud(p), PointCloud(other))[0], points, step)
        numeric_b = central_difference_gradient(lambda p: loss_mse(cloud, PointCloud(p))[0], other, step)
        error = max(max_relative_error(grad_a, numeric_a), max_relative_error(grad_b, numeric_b))
        tally.record(error <= rtol, f"case {case}: loss_mse relative error {error:.3g}")

        scaled = 0.5 * points
        evaluation = loss_var_cov(PointCloud(scaled), weights)
        numeric_vc = central_difference_gradient(
            lambda p: loss_var_cov(PointCloud(p), weights).total, scaled, step
        )
        error = max_relative_error(evaluation.grad, numeric_vc)
        tally.record(error <= rtol, f"case {case}: loss_var_cov relative error {error:.3g}")
    return tally.result()


def check_uniformity(seed: int = 0, clouds: Optional[int] = None) -> CheckResult:
    """The four uniformity constraints on random Gaussian clouds."""
    config = TREG_CONFIG["verification"]
    clouds = config["uniformity_clouds"] if clouds is None else clouds
    rng = _block_rng(seed, "uniformity")
    tally = _Tally("uniformity")
    for case in range(clouds):
        n = int(rng.integers(4, 129))
        d = int(rng.integers(2, 65))
        cloud = PointCloud(rng.standard_normal((n, d)))
        report = check_uniformity_properties(cloud, clone_extra_dims=int(rng.integers(1, 5)), seed=case)
        tally.record(report.all_passed and not report.skipped, f"case {case} (n={n}, d={d}): {report.model_dump()}")
    return tally.result()


def check_density(seed: int = 0, trials: Optional[int] = None, threads: Optional[int] = None) -> CheckResult:
    """Uniform samples of S^2 beat von Mises-Fisher and half-sphere samples in every trial."""
    config = TREG_CONFIG["verification"]
    trials = config["density_trials"] if trials is None else trials
    n = config["density_points"]
    sphere = GeneratorSpec(kind=GeneratorKind.UNIFORM_SPHERE, n=n, d=3)
    comparators = {
        "von-mises-fisher": GeneratorSpec(
            kind=GeneratorKind.VON_MISES_FISHER, n=n, d=3, params={"kappa": config["density_kappa"]}
        ),
        "half-sphere": GeneratorSpec(kind=GeneratorKind.HALF_SPHERE, n=n, d=3),
    }
    tally = _Tally("density")
    for offset, (name, comparator) in enumerate(comparators.items()):
        comparison = compare_densities(sphere, comparator, n=n, trials=trials, seed=seed + offset, threads=threads)
        tally.record(
            comparison.wins == comparison.trials,
            f"uniform sphere beat {name} in {comparison.wins}/{comparison.trials} trials",
        )
    return tally.result()


def check_simplex(seed: int = 0, trials: Optional[int] = None) -> CheckResult:
    """No d+1 points on S^(d-1) have a longer alpha-MST than the regular simplex."""
    config = TREG_CONFIG["verification"]
    trials = config["simplex_trials"] if trials is None else trials
    rng = _block_rng(seed, "simplex")
    tally = _Tally("simplex")
    for case in range(trials):
        d = int(rng.integers(2, 9))
        points = rng.standard_normal((d + 1, d))
        points /= np.linalg.norm(points, axis=1, keepdims=True)
        mst = mst_engine.compute_mst(PointCloud(points))
        for alpha in (0.5, 1.0):
            length = mst_engine.alpha_length(mst, alpha)
            best = mst_engine.regular_simplex_alpha_length(d, alpha)
            tally.record(length <= best * (1 + 1e-12), f"case {case} (d={d}, alpha={alpha}): {length!r} > {best!r}")
    return tally.result()


CHECKS: Dict[str, Callable[..., CheckResult]] = {
    "oracle": check_oracle,
    "lemma1": check_lemma1,
    "gradients": check_gradients,
    "uniformity": check_uniformity,
    "density": check_density,
    "simplex": check_simplex,
}


def run_verification(
    seed: int = 0,
    only: Optional[Iterable[str]] = None,
    threads: Optional[int] = None,
) -> VerificationReport:
    """
    Run the selected verification blocks.

    Args:
        seed: Suite seed; every block derives its own stream from it
        only: Block names to run (default: all)
        threads: Worker threads for the density block

    Returns:
        VerificationReport; passed is True iff every block passed
    """
    names = list(CHECKS) if only is None else list(only)
    unknown = [name for name in names if name not in CHECKS]
    if unknown or not names:
        raise InputValidationError(f"Unknown verification blocks {unknown}; known: {', '.join(CHECKS)}")

    results = []
    for name in names:
        logger.info(f"Running verification block {name}")
        if name == "density":
            results.append(CHECKS[name](seed=seed, threads=threads))
        else:
            results.append(CHECKS[name](seed=seed))
    report = VerificationReport(checks=results, seed=seed)
    logger.info(f"Verification {'passed' if report.passed else 'FAILED'}: {[r.name for r in results]}")
    return report
