"""
Pydantic schemas for loss weights and loss reports.
"""
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from app.core.config import TREG_CONFIG

_DEFAULTS = TREG_CONFIG["loss_weights"]


class LossWeights(BaseModel):
    """
    Mixing coefficients of the regularization objectives.
    """
    beta: float = Field(_DEFAULTS["beta"], ge=0, allow_inf_nan=False, description="Invariance (MSE) weight")
    gamma: float = Field(_DEFAULTS["gamma"], ge=0, allow_inf_nan=False, description="MST length weight")
    lambda_s: float = Field(_DEFAULTS["lambda_s"], ge=0, allow_inf_nan=False, description="Soft sphere weight")
    nu: float = Field(_DEFAULTS["nu"], ge=0, allow_inf_nan=False, description="Variance hinge weight")
    tau: float = Field(_DEFAULTS["tau"], ge=0, allow_inf_nan=False, description="Covariance weight")
    epsilon: float = Field(_DEFAULTS["epsilon"], gt=0, allow_inf_nan=False, description="Variance stabilizer")

    model_config = ConfigDict(frozen=True)


class LossReport(BaseModel):
    """
    Scalar components of an objective evaluation and their weighted total.
    Components that the objective does not use are None.
    """
    l_e: Optional[float] = Field(None, description="Negative MST length per point (summed over views)")
    l_s: Optional[float] = Field(None, description="Soft sphere penalty (summed over views)")
    l_mse: Optional[float] = Field(None, description="Mean squared view distance")
    l_var: Optional[float] = Field(None, description="Variance hinge term")
    l_cov: Optional[float] = Field(None, description="Off-diagonal covariance term")
    total: float = Field(..., description="Weighted objective value")

    model_config = ConfigDict(frozen=True)

    def recombine(self, weights: LossWeights, objective: str) -> float:
        """
        Recompute the weighted total from the stored components.

        Args:
            weights: The weights the report was produced with
            objective: "treg", "tregs-two-view" or "var-cov"

        Returns:
            The weighted combination of the components
        """
        if objective == "var-cov":
            return weights.nu * self.l_var + weights.tau * self.l_cov
        total = weights.gamma * self.l_e + weights.lambda_s * self.l_s
        if objective == "tregs-two-view":
            total += weights.beta * self.l_mse
        return total
