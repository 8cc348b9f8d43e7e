"""
Pydantic schema for seeded synthetic point-cloud generators.
"""
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Union

from pydantic import BaseModel, ConfigDict, Field

from app.core.config import TREG_CONFIG


class GeneratorKind(str, Enum):
    """Supported synthetic distributions."""
    ISOTROPIC_GAUSSIAN = "isotropic-gaussian"
    NEAR_POINT = "near-point"
    CURVE_ON_SPHERE = "curve-on-sphere"
    CIRCLE_COLLAPSED = "circle-collapsed"
    NON_ISOTROPIC_GAUSSIAN = "non-isotropic-gaussian"
    UNIFORM_CUBE = "uniform-cube"
    UNIFORM_SEGMENT = "uniform-segment"
    UNIFORM_SPHERE = "uniform-sphere"
    HALF_SPHERE = "half-sphere"
    VON_MISES_FISHER = "von-mises-fisher"
    SIERPINSKI = "sierpinski"


class GeneratorSpec(BaseModel):
    """
    Schema for a generator invocation, e.g.
    {"kind": "near-point", "n": 256, "d": 256, "params": {"radius": 0.001}, "seed": 0}
    """
    kind: GeneratorKind = Field(..., description="Distribution to sample")
    n: int = Field(..., ge=1, description="Number of points")
    d: int = Field(..., ge=1, description="Ambient dimension")
    params: Dict[str, Any] = Field(default_factory=dict, description="Kind-specific parameters")
    seed: int = Field(TREG_CONFIG["random"]["default_seed"], ge=0, description="RNG seed")

    model_config = ConfigDict(frozen=True)

    @classmethod
    def from_json_file(cls, path: Union[str, Path]) -> "GeneratorSpec":
        """Load a spec from a JSON experiment file."""
        return cls.model_validate_json(Path(path).read_text(encoding="utf-8"))

    def with_size(self, n: int, seed: int) -> "GeneratorSpec":
        """Copy of this spec with another point count and seed."""
        return self.model_copy(update={"n": n, "seed": seed})
