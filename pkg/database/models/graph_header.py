# database/models/graph_header.py
from typing import Literal

from pydantic import BaseModel, Field

from backend.services.errors import MalformedGraphFileError

MAGIC = "RGGT"
VERSION = 1


class GraphHeader(BaseModel):
    n: int = Field(..., ge=0, description="Number of position lines that follow")
    r: float = Field(..., gt=0)
    side: float = Field(..., gt=0)
    mode: Literal["binomial", "poisson"] = "binomial"
    metric: Literal["torus", "square"] = "torus"
    seed: int = 0

    def to_line(self) -> str:
        return f"{MAGIC} {VERSION} {self.n} {self.r!r} {self.side!r} {self.mode} {self.metric} {self.seed}"

    @classmethod
    def from_line(cls, line: str) -> "GraphHeader":
        parts = line.split()
        if len(parts) != 8 or parts[0] != MAGIC:
            raise MalformedGraphFileError(f"bad header: {line.strip()!r}")
        if parts[1] != str(VERSION):
            raise MalformedGraphFileError(f"unsupported version {parts[1]}")
        try:
            return cls(
                n=int(parts[2]),
                r=float(parts[3]),
                side=float(parts[4]),
                mode=parts[5],
                metric=parts[6],
                seed=int(parts[7]),
            )
        except ValueError as e:
            raise MalformedGraphFileError(f"bad header field: {e}") from e
