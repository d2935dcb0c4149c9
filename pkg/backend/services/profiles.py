# backend/services/profiles.py
from typing import Literal

from pydantic import BaseModel, Field


class ConstantsProfile(BaseModel):
    """Constants steering the cop and robber constructions."""

    name: Literal["paper", "desk"] = Field(..., description="Preset name")
    grid_divisions: int = Field(..., gt=0, description="Probe grid is grid_divisions x grid_divisions")
    loc_square_coef: float = Field(..., gt=0, description="Quadrilateration stops at side <= coef*r")
    family_square_coef: float = Field(..., gt=0, description="Side of the endgame squares, in units of r")
    r0_coef: float = Field(..., gt=0, description="r0 = r0_coef * sqrt(log n)")
    shrink_factor: float = Field(4.0, gt=1, description="Side ratio of consecutive localisation squares")
    probe_square_fraction: float = Field(
        1.0 / 9.0, gt=0, le=0.25, description="Side of the probe-phase square, as a fraction of sqrt(n)"
    )
    crown_model: Literal["gamma", "shell"] = Field(
        "gamma",
        description="gamma: crown radii from the hop-stretch bound; shell: measured extent of the hop shell",
    )
    snap_coef: float = Field(2.0, gt=0, description="Nearest-vertex snaps farther than snap_coef*sqrt(log n) get flagged")

    @property
    def family_step_coef(self) -> float:
        return self.family_square_coef / 10.0

    @classmethod
    def paper(cls) -> "ConstantsProfile":
        return cls(
            name="paper",
            grid_divisions=20,
            loc_square_coef=20000.0,
            family_square_coef=1e5,
            r0_coef=70.0,
        )

    @classmethod
    def desk(cls) -> "ConstantsProfile":
        # every point lies within half a probe square side of a grid point
        return cls(
            name="desk",
            grid_divisions=8,
            loc_square_coef=20.0,
            family_square_coef=100.0,
            r0_coef=3.0,
            probe_square_fraction=0.2,
            crown_model="shell",
        )


def get_profile(name: str) -> ConstantsProfile:
    if name == "paper":
        return ConstantsProfile.paper()
    if name == "desk":
        return ConstantsProfile.desk()
    raise ValueError(f"unknown profile {name!r}")
