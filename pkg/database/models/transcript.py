# database/models/transcript.py
from typing import List, Literal, Optional

from pydantic import BaseModel, Field


class GameConfig(BaseModel):
    k: int = Field(..., ge=0, description="Sensors placed per round")
    max_rounds: int = Field(200, ge=1, description="Rounds after which the robber is declared a survivor")
    seed: int = Field(0, description="Seed handed to randomised strategies")


class RoundRecord(BaseModel):
    round: int = Field(..., ge=1, description="1-based round index")
    phase: str = Field("", description="Cop phase label, e.g. probe / quadrilaterate / endgame")
    sensors: List[int] = Field(..., description="Sensor vertex ids, in placement order")
    partition_sizes: List[int] = Field(..., description="Sizes of the offered classes, in refine order")
    chosen_class_size: int = Field(..., ge=1, description="Size of the class the robber picked")
    class_min_id: int = Field(..., ge=0, description="Smallest vertex id of the picked class")
    flags: List[str] = Field(default_factory=list, description="Non-fatal conditions noticed this round")


class Transcript(BaseModel):
    config: GameConfig
    cop: str = Field(..., description="Cop strategy name")
    robber: str = Field(..., description="Robber strategy name")
    n: int = Field(..., ge=0, description="Vertex count of the instance")
    rounds: List[RoundRecord] = Field(default_factory=list)
    outcome: Literal["cop_win", "robber_survives"] = "robber_survives"
    win_round: Optional[int] = Field(None, description="Round of the cop win, if any")
    required_k: Optional[int] = Field(None, description="Sensors the cop strategy would need for a one-shot endgame")

    @property
    def cop_won(self) -> bool:
        return self.outcome == "cop_win"

    @property
    def flags(self) -> List[str]:
        return [f for rec in self.rounds for f in rec.flags]

    def phases(self) -> List[str]:
        seen: List[str] = []
        for rec in self.rounds:
            if rec.phase and (not seen or seen[-1] != rec.phase):
                seen.append(rec.phase)
        return seen
