# backend/services/distances.py
"""Hop distances, signatures and candidate-class refinement.

BFS never materialises edges: each layer dilates the frontier's cells by the
3x3 block, and every still-unlabelled vertex in that block is labelled when
its nearest frontier point (periodic k-d tree query) lies within r.
"""
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field

from backend.services.rgg_model import GraphInstance
from backend.services.rng import stream

UNREACHABLE = np.iinfo(np.int64).max


@dataclass(frozen=True)
class Signature:
    readings: Tuple[int, ...]

    def __len__(self) -> int:
        return len(self.readings)

    def __getitem__(self, i: int) -> int:
        return self.readings[i]

    def __lt__(self, other: "Signature") -> bool:
        return self.readings < other.readings


class CandidateClass:
    """Sorted, duplicate-free vertex set, optionally tagged with the signature that produced it."""

    __slots__ = ("members", "signature")

    def __init__(self, members: Iterable[int], signature: Optional[Signature] = None, presorted: bool = False):
        arr = np.asarray(list(members) if not isinstance(members, np.ndarray) else members, dtype=np.int64)
        if not presorted:
            uniq = np.unique(arr)
            if len(uniq) != len(arr):
                raise ValueError("candidate class contains duplicate vertices")
            arr = uniq
        arr.setflags(write=False)
        self.members = arr
        self.signature = signature

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members.tolist())

    def __contains__(self, v) -> bool:
        i = np.searchsorted(self.members, v)
        return bool(i < len(self.members) and self.members[i] == v)

    @property
    def key(self) -> Tuple[int, ...]:
        return tuple(self.members.tolist())

    @property
    def min_id(self) -> int:
        return int(self.members[0])

    def __eq__(self, other) -> bool:
        return isinstance(other, CandidateClass) and np.array_equal(self.members, other.members)

    def __hash__(self) -> int:
        return hash(self.key)

    def __repr__(self) -> str:
        head = ", ".join(str(v) for v in self.members[:6].tolist())
        more = ", ..." if len(self.members) > 6 else ""
        return f"CandidateClass([{head}{more}], size={len(self)})"


class GammaInputs(BaseModel):
    r: float = Field(..., gt=0, description="Connection radius")
    d_E: float = Field(..., ge=0, description="Euclidean distance between the two vertices")
    n: int = Field(..., ge=2, description="Number of vertices")


def hop_distances(
    G: GraphInstance, source: int, targets: Optional[np.ndarray] = None, max_level: Optional[int] = None
) -> np.ndarray:
    """Unweighted hop distance from ``source`` to every vertex (UNREACHABLE if none).

    With ``targets`` the search stops once all of them are labelled, and with
    ``max_level`` once that layer is complete; other entries may then be left
    UNREACHABLE.
    """
    source = G.check_vertex(source)
    dist = np.full(G.n, UNREACHABLE, dtype=np.int64)
    dist[source] = 0
    pending = None
    if targets is not None:
        pending = np.asarray(targets, dtype=np.int64)
        pending = pending[dist[pending] == UNREACHABLE]
    frontier = np.array([source], dtype=np.int64)
    level = 0
    while frontier.size and (pending is None or pending.size) and (max_level is None or level < max_level):
        level += 1
        cand = G.grid.block_members(frontier)
        cand = cand[dist[cand] == UNREACHABLE]
        if cand.size == 0:
            break
        tree = G.frontier_tree(frontier)
        d, _ = tree.query(G.positions[cand], k=1, distance_upper_bound=G.r * (1 + 1e-9) + 1e-12)
        hit = cand[d <= G.r]
        dist[hit] = level
        frontier = hit
        if pending is not None:
            pending = pending[dist[pending] == UNREACHABLE]
    logger.debug(f"BFS from {source}: {level} layers")
    return dist


def signature_matrix(G: GraphInstance, sensors: Sequence[int], members: np.ndarray) -> np.ndarray:
    """Rows are members, columns are sensors (in the given order)."""
    members = np.asarray(members, dtype=np.int64)
    mat = np.empty((len(members), len(sensors)), dtype=np.int64)
    for j, s in enumerate(sensors):
        mat[:, j] = hop_distances(G, int(s), targets=members)[members]
    return mat


def signatures(G: GraphInstance, sensors: Sequence[int], candidates: CandidateClass) -> Dict[int, Signature]:
    if len(sensors) == 0:
        raise ValueError("signatures need at least one sensor")
    mat = signature_matrix(G, sensors, candidates.members)
    return {int(v): Signature(tuple(int(x) for x in row)) for v, row in zip(candidates.members, mat)}


def refine(G: GraphInstance, cls: CandidateClass, sensors: Sequence[int]) -> List[CandidateClass]:
    """Split ``cls`` by sensor signature; classes come out in lexicographic signature order."""
    if len(sensors) == 0:
        return [CandidateClass(cls.members, Signature(()), presorted=True)]
    mat = signature_matrix(G, sensors, cls.members)
    uniq, inverse = np.unique(mat, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    order = np.argsort(inverse, kind="stable")
    bounds = np.cumsum(np.bincount(inverse, minlength=len(uniq)))[:-1]
    out = []
    for row, idx in zip(uniq, np.split(order, bounds)):
        out.append(CandidateClass(cls.members[idx], Signature(tuple(int(x) for x in row)), presorted=True))
    return out


def closed_neighborhood(G: GraphInstance, cls: CandidateClass) -> CandidateClass:
    members = cls.members
    cand = G.grid.block_members(members)
    tree = G.frontier_tree(members)
    d, _ = tree.query(G.positions[cand], k=1, distance_upper_bound=G.r * (1 + 1e-9) + 1e-12)
    return CandidateClass(np.union1d(cand[d <= G.r], members), presorted=True)


def gamma_terms(inp: GammaInputs) -> Tuple[float, float, float]:
    log_n = math.log(inp.n)
    first = 31.0 * (2.0 * inp.r * log_n / (inp.r + inp.d_E)) ** (2.0 / 3.0)
    second = 70.0 * log_n ** 2 / inp.r ** (8.0 / 3.0)
    third = 300.0 ** (2.0 / 3.0)
    return first, second, third


def gamma(inp: GammaInputs) -> float:
    return max(gamma_terms(inp))


def gamma_ratio(r: float, n: int, d_E: float) -> float:
    """gamma * r^(-4/3), the relative stretch of hop distances."""
    return gamma(GammaInputs(r=r, d_E=d_E, n=n)) * r ** (-4.0 / 3.0)


def corollary_ceiling(d_T: float, r: float, n: int) -> int:
    return int(math.ceil(d_T / r * (1.0 + gamma_ratio(r, n, d_T))))


class PairViolation(BaseModel):
    u: int
    v: int
    d_T: float
    d_G: Optional[int] = Field(None, description="Hop distance, None when unreachable")
    ceiling: int


class DistanceBoundReport(BaseModel):
    pairs_checked: int
    violations: List[PairViolation] = Field(default_factory=list)
    unreachable: List[PairViolation] = Field(default_factory=list)
    lower_bound_failures: int = Field(0, description="Pairs with r*d_G < d_T")

    @property
    def passed(self) -> bool:
        return not self.violations and not self.unreachable and self.lower_bound_failures == 0


def check_distance_bound(G: GraphInstance, m: int, seed: int, targets_per_source: int = 100) -> DistanceBoundReport:
    """Compare hop distances of m random pairs with the ceiling bound.

    Pairs share sources in groups of ``targets_per_source`` so that one BFS
    serves a whole group.
    """
    rng = stream(seed, "distance-pairs")
    report = DistanceBoundReport(pairs_checked=0)
    if G.n < 2 or m <= 0:
        return report
    n_sources = max(1, math.ceil(m / targets_per_source))
    sources = rng.integers(0, G.n, size=n_sources)
    remaining = m
    for s in sources:
        take = min(targets_per_source, remaining)
        tgt = rng.integers(0, G.n, size=take)
        dist = hop_distances(G, int(s), targets=tgt)
        d_T = G.box.distances(G.positions[s], G.positions[tgt])
        for v, dt in zip(tgt.tolist(), d_T.tolist()):
            dg = int(dist[v])
            ceiling = corollary_ceiling(dt, G.r, G.n) if dt > 0 else 0
            if dg == UNREACHABLE:
                report.unreachable.append(PairViolation(u=int(s), v=v, d_T=dt, d_G=None, ceiling=ceiling))
                continue
            if dg > ceiling:
                report.violations.append(PairViolation(u=int(s), v=v, d_T=dt, d_G=dg, ceiling=ceiling))
            if G.r * dg < dt - 1e-9:
                report.lower_bound_failures += 1
        report.pairs_checked += take
        remaining -= take
    logger.info(
        f"Distance bound: {report.pairs_checked} pairs, {len(report.violations)} violations, "
        f"{len(report.unreachable)} unreachable"
    )
    return report
