# database/models/certificates.py
from typing import List, Tuple

from pydantic import BaseModel, Field


class SquareRecord(BaseModel):
    cx: float
    cy: float
    side: float
    angle: float = 0.0


class DistinguishingSetCertificate(BaseModel):
    square: SquareRecord = Field(..., description="Enclosing square S")
    internal: SquareRecord = Field(..., description="Internal square I(S)")
    delta: float = Field(..., ge=0, le=1, description="Sampling probability of X")
    X: List[int] = Field(..., description="Random sample of S")
    Y: List[int] = Field(..., description="Patch: members of non-singleton X-classes")
    W: List[int] = Field(..., description="X union Y")
    targets: int = Field(..., ge=0, description="Vertices that must receive unique signatures")
    w_budget: float = Field(..., description="Size budget w(n)")
    verified: bool = Field(..., description="Uniqueness confirmed on construction")


class TwinPairCertificate(BaseModel):
    n: int
    r: float
    count: int = Field(..., ge=0, description="Number of disjoint certified twin pairs, a lower bound on the metric dimension")
    pairs: List[Tuple[int, int]]
