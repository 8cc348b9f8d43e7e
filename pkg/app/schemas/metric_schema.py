"""
Pydantic schemas for uniformity metrics, collapse scans and dimension fits.
"""
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class UniformityScore(BaseModel):
    """MST length normalized by the unit-sphere regular simplex edge."""
    value: float = Field(..., le=0, description="-raw_mst_length / normalizer")
    raw_mst_length: float = Field(..., ge=0)
    dim: int = Field(..., ge=1)
    normalizer: float = Field(..., gt=0, description="sqrt(2(d+1)/d)")

    model_config = ConfigDict(frozen=True)


class UniformityPropertyReport(BaseModel):
    """Outcome of the four uniformity constraints on one cloud. None means skipped."""
    permutation: bool
    instance_cloning: bool
    feature_cloning: Optional[bool] = None
    feature_baby: Optional[bool] = None
    skipped: List[str] = Field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        outcomes = [self.permutation, self.instance_cloning, self.feature_cloning, self.feature_baby]
        return all(outcome is not False for outcome in outcomes)


class CosineStats(BaseModel):
    """Pairwise cosine similarity statistics of raw vectors."""
    mean: float
    std: float
    histogram: List[int] = Field(..., description="Counts over uniform bins on [-1, 1]")


class CollapseScan(BaseModel):
    """Sensitivity of the MST length to zeroed coordinates."""
    etas: List[float]
    scores: List[float] = Field(..., description="-L_E at each collapse level")
    zeroed_dims: List[int]
    n: int
    d: int
    seed: int

    @model_validator(mode="after")
    def _check_scan(self):
        if any(b <= a for a, b in zip(self.etas, self.etas[1:])):
            raise ValueError("etas must be strictly increasing")
        if len(self.scores) != len(self.etas):
            raise ValueError("one score per eta is required")
        return self


class DimensionFit(BaseModel):
    """Log-log regression of mean MST length against sample size."""
    sample_sizes: List[int]
    lengths: List[float]
    slope: float
    intercept: float
    dim_estimate: float = Field(..., description="1/(1-slope); inf when slope >= 1")
    unbounded: bool = Field(False, description="True when slope >= 1")
    r_squared: float = Field(..., ge=0, le=1)
    trials: int = Field(..., ge=1)

    def to_json_dict(self) -> dict:
        """The persisted key layout."""
        return {
            "sizes": self.sample_sizes,
            "lengths": self.lengths,
            "slope": self.slope,
            "dim_estimate": None if self.unbounded else self.dim_estimate,
            "r_squared": self.r_squared,
            "trials": self.trials,
            "unbounded": self.unbounded,
        }


class DensityComparison(BaseModel):
    """Per-trial MST lengths of two samplers on the same manifold."""
    mean_uniform: float
    mean_concentrated: float
    wins: int
    trials: int
    uniform_lengths: List[float]
    concentrated_lengths: List[float]
