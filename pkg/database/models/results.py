# database/models/results.py
from typing import List, Optional

from pydantic import BaseModel, Field


class CheckResult(BaseModel):
    name: str = Field(..., description="What was checked")
    passed: bool
    measured: float = Field(..., description="Observed value")
    bound: float = Field(..., description="Value the observation is compared against")
    statistical: bool = Field(False, description="True when the check only holds with high probability")
    detail: str = ""


class ValidationReport(BaseModel):
    title: str
    checks: List[CheckResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(
        self, name: str, passed: bool, measured: float, bound: float, statistical: bool = False, detail: str = ""
    ) -> CheckResult:
        check = CheckResult(
            name=name,
            passed=bool(passed),
            measured=float(measured),
            bound=float(bound),
            statistical=statistical,
            detail=detail,
        )
        self.checks.append(check)
        return check

    def failed(self) -> List[CheckResult]:
        return [c for c in self.checks if not c.passed]


class ResultRow(BaseModel):
    n: int
    r: float
    seed: int
    trial: int
    quantity: str
    value: float
    rounds: Optional[int] = None
    w_size: Optional[int] = None
    k: Optional[int] = None
    profile: str = ""
    note: str = ""
    ref_r43: Optional[float] = Field(None, description="r^(4/3) reference value")
    ref_r2_logn: Optional[float] = Field(None, description="r^2/log n reference value")


RESULT_COLUMNS = list(ResultRow.model_fields.keys())
