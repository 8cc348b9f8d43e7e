"""
Descent Engine

Full-batch constrained gradient descent over point clouds. Supports plain
gradient descent and Adam, the T-REG, two-view and variance-covariance
objectives, soft-sphere and clamp-to-ball constraints, a divergence guard and
the dilation stop used when the MST term runs without the sphere penalty.

Updates go through torch.optim (SGD or Adam) on leaf tensors whose gradients
are set from the analytic losses, with an optional decaying learning rate.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import torch

from app.core.config import TREG_CONFIG
from app.core.exceptions import DivergenceError, InputValidationError
from app.schemas.optim_schema import (
    Constraint,
    HistoryEntry,
    LrSchedule,
    Method,
    Objective,
    OptimConfig,
    RunSummary,
    SimplexResidual,
)
from app.services import mst_engine
from app.services.point_cloud import PointCloud, as_point_cloud
from app.services.regularizers import LossEvaluation, loss_treg, loss_tregs_two_view, loss_var_cov
from app.services.uniformity import cosine_stats

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OptimRun:
    """
    Result of a descent run.

    history holds the recorded steps in increasing order; the first is step 0 and
    the last is cfg.steps unless the run stopped early on dilation.
    """
    initial: PointCloud
    final: PointCloud
    history: List[HistoryEntry]
    config: OptimConfig
    initial_b: Optional[PointCloud] = None
    final_b: Optional[PointCloud] = None
    stopped_early: bool = False

    @property
    def steps_run(self) -> int:
        return self.history[-1].step

    @property
    def totals(self) -> np.ndarray:
        return np.array([entry.report.total for entry in self.history])


def scheduled_lr(cfg: OptimConfig, step: int) -> float:
    """
    Learning rate for update number `step` (0-based) under cfg.lr_schedule.

    "linear" decays to zero and "exp" decays geometrically to cfg.min_lr over
    cfg.steps; both are floored at cfg.min_lr. A zero base rate stays zero.
    """
    if cfg.lr == 0 or cfg.lr_schedule == LrSchedule.CONSTANT:
        return cfg.lr
    progress = step / cfg.steps
    if cfg.lr_schedule == LrSchedule.LINEAR:
        lr = cfg.lr * (1.0 - progress)
    else:
        max_log_lr = math.log(cfg.lr)
        min_log_lr = math.log(min(cfg.min_lr, cfg.lr))
        lr = math.exp(max_log_lr + (min_log_lr - max_log_lr) * progress)
    return max(lr, min(cfg.min_lr, cfg.lr))


def _build_optimizer(params: List[torch.Tensor], cfg: OptimConfig) -> torch.optim.Optimizer:
    if cfg.method == Method.ADAM:
        return torch.optim.Adam(params, lr=cfg.lr, betas=(cfg.adam_beta1, cfg.adam_beta2), eps=cfg.adam_eps)
    return torch.optim.SGD(params, lr=cfg.lr)


def _leaf(points: np.ndarray) -> torch.Tensor:
    return torch.tensor(points, dtype=torch.float64, requires_grad=True)


def _as_array(param: torch.Tensor) -> np.ndarray:
    return param.detach().numpy().copy()


def _evaluate(points: np.ndarray, points_b: Optional[np.ndarray], cfg: OptimConfig) -> LossEvaluation:
    cloud = PointCloud(points)
    if cfg.objective == Objective.TREG:
        return loss_treg(cloud, cfg.weights)
    if cfg.objective == Objective.TREGS_TWO_VIEW:
        return loss_tregs_two_view(cloud, PointCloud(points_b), cfg.weights)
    return loss_var_cov(cloud, cfg.weights)


def _grad_max(evaluation: LossEvaluation) -> float:
    grad_max = float(np.max(np.linalg.norm(evaluation.grad, axis=1)))
    if evaluation.grad_b is not None:
        grad_max = max(grad_max, float(np.max(np.linalg.norm(evaluation.grad_b, axis=1))))
    return grad_max


def _clamp_to_ball(points: np.ndarray, radius: float) -> np.ndarray:
    norms = np.linalg.norm(points, axis=1)
    outside = norms > radius
    if np.any(outside):
        points = points.copy()
        points[outside] *= (radius / norms[outside])[:, None]
    return points


def _check_finite(points: np.ndarray, step: int) -> None:
    if not np.all(np.isfinite(points)):
        bad = int(np.sum(~np.all(np.isfinite(points), axis=1)))
        logger.error(f"Non-finite coordinates in {bad} points after step {step}")
        raise DivergenceError(f"{bad} points have non-finite coordinates after step {step}", step=step)


def optimize(init: PointCloud, cfg: OptimConfig) -> OptimRun:
    """
    Minimize the configured objective over the point coordinates.

    Args:
        init: Starting cloud (n >= 2)
        cfg: Objective, weights, update rule, constraint and recording settings

    Returns:
        OptimRun with the initial and final clouds and the recorded history

    Raises:
        DivergenceError: When a coordinate becomes non-finite or exceeds
            cfg.divergence_limit in magnitude
    """
    init = as_point_cloud(init, "init")
    if init.n < 2:
        raise InputValidationError(f"optimize needs at least 2 points, got n={init.n}")

    rng = np.random.default_rng(cfg.seed)
    points = np.array(init.points)
    points_b = None
    if cfg.objective == Objective.TREGS_TWO_VIEW:
        points_b = points + cfg.view_noise * rng.standard_normal(points.shape)
    initial_b = PointCloud(points_b) if points_b is not None else None

    if cfg.constraint == Constraint.CLAMP_TO_BALL:
        points = _clamp_to_ball(points, cfg.radius)
        if points_b is not None:
            points_b = _clamp_to_ball(points_b, cfg.radius)

    # Leaf tensors updated by torch.optim; gradients come from the analytic losses
    params = [_leaf(points)] + ([_leaf(points_b)] if points_b is not None else [])
    optimizer = _build_optimizer(params, cfg)

    initial_mean_norm = float(np.mean(init.norms()))
    dilation_limit = cfg.dilation_cap * initial_mean_norm
    history: List[HistoryEntry] = []
    stopped_early = False

    logger.info(
        f"Optimizing n={init.n} d={init.d}: objective={cfg.objective.value} method={cfg.method.value} "
        f"lr={cfg.lr} ({cfg.lr_schedule.value}) steps={cfg.steps}"
    )

    step = 0
    while True:
        evaluation = _evaluate(points, points_b, cfg)
        last = step == cfg.steps or stopped_early
        if step % cfg.record_every == 0 or last:
            entry = HistoryEntry(step=step, report=evaluation.report, grad_max=_grad_max(evaluation))
            history.append(entry)
            logger.debug(f"step {step}: total={entry.report.total:.8g} grad_max={entry.grad_max:.4g}")
        if last:
            break

        lr = scheduled_lr(cfg, step)
        for param_group in optimizer.param_groups:
            param_group["lr"] = lr
        grads = [evaluation.grad] + ([evaluation.grad_b] if points_b is not None else [])
        for param, grad in zip(params, grads):
            param.grad = torch.tensor(grad, dtype=torch.float64)
        optimizer.step()

        t = step + 1
        points = _as_array(params[0])
        points_b = _as_array(params[1]) if points_b is not None else None
        _check_finite(points, t)
        if points_b is not None:
            _check_finite(points_b, t)
        if cfg.constraint == Constraint.CLAMP_TO_BALL:
            points = _clamp_to_ball(points, cfg.radius)
            if points_b is not None:
                points_b = _clamp_to_ball(points_b, cfg.radius)
            with torch.no_grad():
                for param, clamped in zip(params, (points, points_b)):
                    param.copy_(torch.from_numpy(clamped))

        if cfg.dilation_capped:
            mean_norm = float(np.mean(np.linalg.norm(points, axis=1)))
            if mean_norm > dilation_limit:
                logger.warning(
                    f"Mean norm {mean_norm:.4g} passed {cfg.dilation_cap}x the initial {initial_mean_norm:.4g} "
                    f"at step {t}; stopping early"
                )
                stopped_early = True
        else:
            magnitude = max(float(np.max(np.abs(points))),
                            float(np.max(np.abs(points_b))) if points_b is not None else 0.0)
            if magnitude > cfg.divergence_limit:
                logger.error(f"Coordinate magnitude {magnitude:.4g} exceeds {cfg.divergence_limit} at step {t}")
                raise DivergenceError(
                    f"Coordinate magnitude {magnitude:.4g} exceeds {cfg.divergence_limit} at step {t}", step=t
                )
        step = t

    final = init.with_points(points)
    final_b = init.with_points(points_b) if points_b is not None else None
    logger.info(
        f"Finished after {history[-1].step} steps: total {history[0].report.total:.6g} -> "
        f"{history[-1].report.total:.6g}"
    )
    return OptimRun(
        initial=init,
        final=final,
        history=history,
        config=cfg,
        initial_b=initial_b,
        final_b=final_b,
        stopped_early=stopped_early,
    )


def simplex_residual(cloud: PointCloud) -> SimplexResidual:
    """
    Distance of a cloud from a regular (n-1)-simplex.

    Points are centered at their centroid; r is the mean centered norm and the
    target edge is a* = r * sqrt(2n / (n - 1)). For a regular simplex every
    centered pairwise cosine equals -1 / (n - 1).

    Args:
        cloud: Point cloud with 2 <= n <= d + 1

    Returns:
        SimplexResidual with the mean and std of centered pairwise cosines and the
        largest relative deviation of a pairwise distance from a*
    """
    n, d = cloud.n, cloud.d
    if n > d + 1:
        raise InputValidationError(f"A regular simplex on {n} points needs d >= {n - 1}, got d={d}")
    if n < 2:
        raise InputValidationError("simplex_residual needs at least 2 points")

    centered = cloud.points - cloud.points.mean(axis=0)
    norms = np.linalg.norm(centered, axis=1)
    if np.any(norms == 0):
        raise InputValidationError("A point sits at the centroid; centered cosines are undefined")
    radius = float(np.mean(norms))

    rows, cols = np.triu_indices(n, k=1)
    unit = centered / norms[:, None]
    cosines = np.einsum("ij,ij->i", unit[rows], unit[cols])
    distances = np.linalg.norm(centered[rows] - centered[cols], axis=1)
    target = radius * np.sqrt(2.0 * n / (n - 1))
    return SimplexResidual(
        mean_cosine=float(np.mean(cosines)),
        std_cosine=float(np.std(cosines)),
        max_relative_deviation=float(np.max(np.abs(distances - target)) / target),
        target_edge=float(target),
        radius=radius,
    )


def loss_is_non_increasing(
    run: OptimRun,
    burn_in_fraction: Optional[float] = None,
    rel_tol: Optional[float] = None,
) -> bool:
    """
    Check that the recorded total never rises after the burn-in.

    Each recorded total may exceed its predecessor by at most rel_tol times the
    predecessor's magnitude, which absorbs subgradient oscillation near the optimum.

    Args:
        run: A finished run
        burn_in_fraction: Leading fraction of steps ignored (default 0.05)
        rel_tol: Allowed relative rise (default 1e-2)
    """
    descent_config = TREG_CONFIG["descent"]
    burn_in_fraction = descent_config["burn_in_fraction"] if burn_in_fraction is None else burn_in_fraction
    rel_tol = descent_config["monotone_rel_tol"] if rel_tol is None else rel_tol

    start = burn_in_fraction * run.steps_run
    totals = [entry.report.total for entry in run.history if entry.step >= start]
    for previous, current in zip(totals, totals[1:]):
        if current > previous + rel_tol * abs(previous):
            logger.debug(f"Total rose from {previous:.8g} to {current:.8g}")
            return False
    return True


def summarize_run(run: OptimRun) -> RunSummary:
    """
    Final-state summary of a run: last loss report, E(MST)/n, norm statistics,
    simplex residual when n <= d + 1 and cosine statistics of both clouds.
    """
    final = run.final
    norms = final.norms()
    mean_norm = float(np.mean(norms))

    simplex = None
    if final.n <= final.d + 1:
        try:
            simplex = simplex_residual(final)
        except InputValidationError as e:
            logger.warning(f"No simplex residual for the final cloud: {e}")

    cosine_fields = {}
    try:
        before = cosine_stats(run.initial)
        after = cosine_stats(final)
        cosine_fields = {
            "initial_cosine_histogram": before.histogram,
            "final_cosine_histogram": after.histogram,
            "final_cosine_mean": after.mean,
            "final_cosine_std": after.std,
        }
    except InputValidationError as e:
        logger.warning(f"Cosine statistics skipped: {e}")

    return RunSummary(
        final=run.history[-1].report,
        steps_run=run.steps_run,
        stopped_early=run.stopped_early,
        mst_length_per_point=mst_engine.compute_mst(final).total_length / final.n,
        mean_norm=mean_norm,
        initial_mean_norm=float(np.mean(run.initial.norms())),
        norm_cv=float(np.std(norms) / mean_norm) if mean_norm > 0 else 0.0,
        simplex=simplex,
        **cosine_fields,
    )
