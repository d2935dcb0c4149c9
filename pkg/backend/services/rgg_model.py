# backend/services/rgg_model.py
"""Random geometric graph instances on the torus (or the square).

Adjacency is implicit: u ~ v iff their metric distance is at most r. A
``CellGrid`` buckets vertices into cells of side >= r so every neighbour of a
vertex lies in the 3x3 block of cells around it.
"""
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Literal, Optional, Tuple, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field
from scipy.spatial import cKDTree

from backend.services.errors import EmptyInstanceError, InvalidVertexError
from backend.services.geometry import Ball, Point, Square, TorusBox
from backend.services.profiles import get_profile
from backend.services.rng import stream


class ModelParams(BaseModel):
    n: int = Field(..., ge=0, description="Expected number of vertices")
    r: float = Field(..., gt=0, description="Connection radius")
    mode: Literal["binomial", "poisson"] = Field("binomial", description="Exactly n points or Po(n) points")
    metric: Literal["torus", "square"] = Field("torus", description="Wrap-around or plain square metric")
    seed: int = Field(0, description="Master seed of the instance")
    profile: Literal["paper", "desk"] = Field("paper", description="Constants preset")

    @property
    def side(self) -> float:
        return math.sqrt(self.n) if self.n > 0 else 1.0

    def regime_warnings(self) -> List[str]:
        if self.n < 2:
            return []
        log_n = math.log(self.n)
        warnings = []
        if self.profile == "paper":
            r0 = get_profile("paper").r0_coef * math.sqrt(log_n)
            if not r0 <= self.r < self.side / 4.0:
                warnings.append(f"r={self.r:.4g} outside [r0={r0:.4g}, sqrt(n)/4={self.side / 4.0:.4g})")
        r_conn = math.sqrt(log_n / math.pi)
        if self.r < r_conn:
            warnings.append(f"r={self.r:.4g} below connectivity threshold {r_conn:.4g}")
        return warnings


class RegimeInfo(BaseModel):
    part: int = Field(..., description="Which of the four regimes of the main theorem applies")
    upper_order: float = Field(..., description="Predicted order of the localization number, upper side")
    lower_order: float = Field(..., description="Predicted order of the localization number, lower side")


def classify_regime(n: int, r: float) -> RegimeInfo:
    log_n = math.log(n)
    loglog = math.log(log_n)
    threshold = log_n / (math.sqrt(loglog) * math.log(loglog)) if loglog > 1 else 0.0
    lower_dense = r ** (4.0 / 3.0) / log_n ** (1.0 / 3.0)
    if r >= log_n ** 1.5:
        return RegimeInfo(part=1, upper_order=r ** (4.0 / 3.0), lower_order=lower_dense)
    if r >= log_n:
        return RegimeInfo(part=2, upper_order=log_n ** 2, lower_order=lower_dense)
    if r >= threshold:
        lower = r * r * math.log(math.e * log_n / r) / log_n
        return RegimeInfo(part=3, upper_order=r * r, lower_order=lower)
    ratio = r * r / log_n
    lower = log_n / math.log(ratio) if ratio > 1 else float("inf")
    return RegimeInfo(part=4, upper_order=r * r, lower_order=lower)


class CellGrid:
    """Vertices bucketed into an m x m grid, stored CSR-style.

    ``order[cell_start[c]:cell_start[c+1]]`` lists the vertices of cell c in
    ascending id order.
    """

    def __init__(self, positions: np.ndarray, side: float, r: float, wrap: bool = True):
        self.m = max(1, int(math.floor(side / r)))
        self.cell_side = side / self.m
        self.wrap = wrap
        rc = np.floor(positions / self.cell_side).astype(np.int64)
        rc = np.clip(rc, 0, self.m - 1)
        self.cell_of = rc[:, 1] * self.m + rc[:, 0]
        self.order = np.argsort(self.cell_of, kind="stable")
        counts = np.bincount(self.cell_of, minlength=self.m * self.m)
        self.cell_start = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)

    def members(self, cell: int) -> np.ndarray:
        return self.order[self.cell_start[cell]:self.cell_start[cell + 1]]

    def dilate(self, cells: np.ndarray) -> np.ndarray:
        """Cells within one step (3x3 block) of any of ``cells``."""
        cells = np.unique(np.asarray(cells, dtype=np.int64))
        rows, cols = cells // self.m, cells % self.m
        out = []
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                rr, cc = rows + dr, cols + dc
                if self.wrap:
                    rr, cc = rr % self.m, cc % self.m
                else:
                    ok = (rr >= 0) & (rr < self.m) & (cc >= 0) & (cc < self.m)
                    rr, cc = rr[ok], cc[ok]
                out.append(rr * self.m + cc)
        return np.unique(np.concatenate(out))

    def gather(self, cells: np.ndarray) -> np.ndarray:
        """All vertices of ``cells`` (cells must be distinct)."""
        cells = np.asarray(cells, dtype=np.int64)
        starts = self.cell_start[cells]
        lengths = self.cell_start[cells + 1] - starts
        total = int(lengths.sum())
        if total == 0:
            return np.empty(0, dtype=np.int64)
        offsets = np.cumsum(lengths) - lengths
        idx = np.arange(total) - np.repeat(offsets, lengths) + np.repeat(starts, lengths)
        return self.order[idx]

    def block_members(self, vertices: np.ndarray) -> np.ndarray:
        return self.gather(self.dilate(self.cell_of[vertices]))

    def same_as(self, other: "CellGrid") -> bool:
        return (
            self.m == other.m
            and np.array_equal(self.cell_of, other.cell_of)
            and np.array_equal(self.order, other.order)
            and np.array_equal(self.cell_start, other.cell_start)
        )


@dataclass(frozen=True, eq=False)
class GraphInstance:
    box: TorusBox
    r: float
    positions: np.ndarray
    grid: CellGrid = field(repr=False)
    metric: str = "torus"
    params: Optional[ModelParams] = None
    warnings: Tuple[str, ...] = ()

    @classmethod
    def from_positions(
        cls,
        positions,
        r: float,
        side: Optional[float] = None,
        metric: str = "torus",
        params: Optional[ModelParams] = None,
    ) -> "GraphInstance":
        pos = np.asarray(positions, dtype=float).reshape(-1, 2)
        if side is None:
            side = math.sqrt(len(pos)) if len(pos) else 1.0
        if r <= 0:
            raise ValueError(f"radius must be positive, got {r}")
        box = TorusBox(side=float(side), wrap=(metric == "torus"))
        pos = box.canonical(pos).copy()
        if metric == "square" and len(pos) and (pos.min() < 0 or pos.max() > side):
            raise ValueError("square-metric positions must lie in [0, side]")
        pos.setflags(write=False)
        grid = CellGrid(pos, box.side, r, wrap=box.wrap)
        warnings = tuple(params.regime_warnings()) if params is not None else ()
        return cls(box=box, r=float(r), positions=pos, grid=grid, metric=metric, params=params, warnings=warnings)

    @property
    def n(self) -> int:
        return len(self.positions)

    @property
    def side(self) -> float:
        return self.box.side

    @property
    def log_n(self) -> float:
        return math.log(max(self.n, 2))

    def point(self, v: int) -> Point:
        return Point.of(self.positions[v])

    def check_vertex(self, v: int) -> int:
        if not 0 <= int(v) < self.n:
            raise InvalidVertexError(f"vertex {v} not in [0, {self.n})")
        return int(v)

    @cached_property
    def kdtree(self) -> cKDTree:
        return cKDTree(self.positions, boxsize=self.side if self.box.wrap else None)

    def frontier_tree(self, vertices: np.ndarray) -> cKDTree:
        return cKDTree(self.positions[vertices], boxsize=self.side if self.box.wrap else None)


def sample_instance(params: ModelParams) -> GraphInstance:
    side = params.side
    count = params.n
    if params.mode == "poisson" and params.n > 0:
        count = int(stream(params.seed, "poisson-count").poisson(params.n))
    positions = stream(params.seed, "positions").uniform(0.0, side, size=(count, 2))
    G = GraphInstance.from_positions(positions, params.r, side=side, metric=params.metric, params=params)
    logger.info(
        f"Sampled {params.mode} instance: {G.n} vertices, r={params.r:.4g}, side={side:.4g}, "
        f"grid {G.grid.m}x{G.grid.m}, seed={params.seed}"
    )
    for w in G.warnings:
        logger.warning(w)
    return G


def neighbors(G: GraphInstance, v: int) -> np.ndarray:
    v = G.check_vertex(v)
    cand = G.grid.block_members(np.array([v]))
    d = G.box.distances(G.positions[v], G.positions[cand])
    return np.sort(cand[(d <= G.r) & (cand != v)])


def degree(G: GraphInstance, v: int) -> int:
    return int(len(neighbors(G, v)))


def nearest_vertex(G: GraphInstance, x: Point) -> Tuple[int, float]:
    if G.n == 0:
        raise EmptyInstanceError("nearest_vertex on an empty instance")
    q = G.box.canonical(x.as_array())
    k = min(8, G.n)
    dist, idx = G.kdtree.query(q, k=k)
    dist, idx = np.atleast_1d(dist), np.atleast_1d(idx)
    exact = G.box.distances(q, G.positions[idx])
    best = exact.min()
    tied = idx[exact <= best]
    v = int(tied.min())
    return v, float(G.box.distances(q, G.positions[v]))


def vertices_in(G: GraphInstance, region: Union[Ball, Square]) -> np.ndarray:
    if G.n == 0:
        return np.empty(0, dtype=np.int64)
    if isinstance(region, Ball):
        center = G.box.canonical(region.center.as_array())
        cand = np.asarray(G.kdtree.query_ball_point(center, r=region.radius * (1 + 1e-9) + 1e-12), dtype=np.int64)
        if cand.size == 0:
            return cand
        d = G.box.distances(center, G.positions[cand])
        return np.sort(cand[d <= region.radius])
    mask = region.contains(G.positions, box=G.box if G.box.wrap else None)
    return np.flatnonzero(mask).astype(np.int64)
