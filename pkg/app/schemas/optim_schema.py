"""
Pydantic schemas for the constrained descent engine.
"""
from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.config import TREG_CONFIG
from app.schemas.loss_schema import LossReport, LossWeights

_DESCENT = TREG_CONFIG["descent"]


class Method(str, Enum):
    """Update rules."""
    GD = "gd"
    ADAM = "adam"


class Objective(str, Enum):
    """Objectives the descent engine can minimize."""
    TREG = "treg"
    TREGS_TWO_VIEW = "tregs-two-view"
    VAR_COV = "var-cov"


class LrSchedule(str, Enum):
    """Learning-rate schedules over the run."""
    CONSTANT = "constant"
    LINEAR = "linear"
    EXP = "exp"


class Constraint(str, Enum):
    """How points are kept bounded."""
    NONE = "none"
    SOFT_SPHERE = "soft-sphere"      # carried by lambda_s
    CLAMP_TO_BALL = "clamp-to-ball"  # projection after every step


class OptimConfig(BaseModel):
    """
    Configuration of a full-batch descent run.
    """
    steps: int = Field(_DESCENT["steps"], ge=1, description="Number of update steps")
    lr: float = Field(_DESCENT["lr"], ge=0, allow_inf_nan=False, description="Learning rate (0 gives a null run)")
    method: Method = Field(Method(_DESCENT["method"]), description="Update rule")
    lr_schedule: LrSchedule = Field(LrSchedule(_DESCENT["lr_schedule"]), description="Learning-rate decay")
    min_lr: float = Field(_DESCENT["min_lr"], gt=0, description="Floor of the decaying schedules")
    weights: LossWeights = Field(default_factory=LossWeights)
    objective: Objective = Field(Objective.TREG)
    constraint: Constraint = Field(Constraint.NONE)
    radius: float = Field(1.0, gt=0, description="Ball radius for clamp-to-ball")
    seed: int = Field(TREG_CONFIG["random"]["default_seed"], ge=0, description="RNG seed (second view noise)")
    record_every: int = Field(_DESCENT["record_every"], ge=1, description="History stride")
    view_noise: float = Field(_DESCENT["view_noise"], ge=0, description="Second view noise scale")
    divergence_limit: float = Field(_DESCENT["divergence_limit"], gt=0)
    dilation_cap: float = Field(_DESCENT["dilation_cap"], gt=1)
    adam_beta1: float = Field(_DESCENT["adam"]["beta1"], ge=0, lt=1)
    adam_beta2: float = Field(_DESCENT["adam"]["beta2"], ge=0, lt=1)
    adam_eps: float = Field(_DESCENT["adam"]["eps"], gt=0)

    model_config = ConfigDict(frozen=True, use_enum_values=False)

    @model_validator(mode="after")
    def _check_constraint(self):
        if self.constraint == Constraint.SOFT_SPHERE and self.weights.lambda_s <= 0:
            raise ValueError("soft-sphere constraint requires lambda_s > 0")
        return self

    @property
    def uses_mst(self) -> bool:
        return self.objective in (Objective.TREG, Objective.TREGS_TWO_VIEW)

    @property
    def dilation_capped(self) -> bool:
        """True when the MST term runs unopposed and the run stops on dilation instead of diverging."""
        return (
            self.uses_mst
            and self.weights.lambda_s == 0
            and self.constraint != Constraint.CLAMP_TO_BALL
        )


class HistoryEntry(BaseModel):
    """One recorded descent step."""
    step: int
    report: LossReport
    grad_max: float = Field(..., description="Largest per-point gradient norm")

    model_config = ConfigDict(frozen=True)

    def to_record(self) -> dict:
        """Flatten to the history.jsonl row layout."""
        record = {"step": self.step, "grad_max": self.grad_max}
        for key, value in self.report.model_dump().items():
            if value is not None or key in ("l_e", "l_s"):
                record[key] = value
        return record


class SimplexResidual(BaseModel):
    """Distance of a cloud from the regular simplex configuration."""
    mean_cosine: float
    std_cosine: float
    max_relative_deviation: float
    target_edge: float
    radius: float


class RunSummary(BaseModel):
    """Final-state summary written to summary.json."""
    final: LossReport
    steps_run: int
    stopped_early: bool
    mst_length_per_point: float
    mean_norm: float
    initial_mean_norm: float
    norm_cv: float
    simplex: Optional[SimplexResidual] = None
    initial_cosine_histogram: Optional[List[int]] = None
    final_cosine_histogram: Optional[List[int]] = None
    final_cosine_mean: Optional[float] = None
    final_cosine_std: Optional[float] = None
