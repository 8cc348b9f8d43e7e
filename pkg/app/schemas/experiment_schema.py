"""
Pydantic schemas for experiment manifests and verification reports.
"""
from typing import Any, Dict, List

from pydantic import BaseModel, Field


class ExperimentManifest(BaseModel):
    """Everything needed to re-run a command."""
    command: str = Field(..., description="Subcommand name")
    arguments: Dict[str, Any] = Field(..., description="Resolved arguments, defaults materialized")
    seed: int
    tool_version: str
    output_dir: str


class CheckResult(BaseModel):
    """One block of the verification suite."""
    name: str
    passed: bool
    cases: int = Field(..., ge=0)
    failures: int = Field(..., ge=0)
    detail: List[str] = Field(default_factory=list, description="First few failure descriptions")


class VerificationReport(BaseModel):
    """Aggregate result of the verification suite."""
    checks: List[CheckResult]
    seed: int

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)
