# backend/services/robber_strategies.py
"""Robber strategies and the lower-bound constructions they hide in."""
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from loguru import logger

from backend.services.distances import CandidateClass, hop_distances
from backend.services.errors import NoBallClassError, NoEmptyAnnulusError
from backend.services.game_engine import GameHistory
from backend.services.geometry import Ball, Point
from backend.services.rgg_model import GraphInstance, classify_regime, vertices_in


def _largest(classes: List[CandidateClass]) -> CandidateClass:
    return min(classes, key=lambda c: (-len(c), c.min_id))


class MaxClassRobber:
    name = "max-class"

    def choose(self, G: GraphInstance, history: GameHistory, offered: List[CandidateClass]) -> CandidateClass:
        return _largest(offered)


def max_class_robber() -> MaxClassRobber:
    return MaxClassRobber()


@dataclass(frozen=True)
class SpecialFamily:
    pairs: Tuple[Tuple[int, int], ...]
    eps: float
    ball: Ball

    def __len__(self) -> int:
        return len(self.pairs)

    def violations(self, G: GraphInstance) -> List[str]:
        """Broken matching, distance or ball-membership conditions (empty when valid)."""
        problems = []
        flat = [v for p in self.pairs for v in p]
        if len(flat) != len(set(flat)):
            problems.append("pairs are not vertex-disjoint")
        for a, b in self.pairs:
            if G.box.distances(G.positions[a], G.positions[b][None, :])[0] > self.eps + 1e-12:
                problems.append(f"pair ({a}, {b}) farther apart than eps")
        if flat:
            inside = self.ball.contains(G.positions[flat], box=G.box)
            if not inside.all():
                problems.append("pair member outside the ball")
        return problems


def special_eps(n: int, r: float) -> float:
    return (math.log(n) / r) ** (1.0 / 3.0)


def special_family_target(r: float, eps: float) -> float:
    return r * r * eps * eps / 100.0


def special_family(G: GraphInstance, ball: Ball, eps: float) -> SpecialFamily:
    """Pairs from the tiles of side eps/sqrt(2) that lie inside ``ball`` and hold exactly two vertices."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    h = eps / math.sqrt(2.0)
    members = vertices_in(G, ball)
    if members.size < 2:
        return SpecialFamily((), eps, ball)
    center = G.box.canonical(ball.center.as_array())
    local = center + G.box.delta(center, G.positions[members])
    tiles = np.floor(local / h).astype(np.int64)
    lo = tiles * h
    far_x = np.maximum(np.abs(lo[:, 0] - center[0]), np.abs(lo[:, 0] + h - center[0]))
    far_y = np.maximum(np.abs(lo[:, 1] - center[1]), np.abs(lo[:, 1] + h - center[1]))
    inside = np.hypot(far_x, far_y) <= ball.radius
    keys, inverse, counts = np.unique(tiles, axis=0, return_inverse=True, return_counts=True)
    inverse = np.asarray(inverse).reshape(-1)
    pairs = []
    for t in np.flatnonzero(counts == 2):
        idx = np.flatnonzero(inverse == t)
        if inside[idx].all():
            a, b = sorted(int(v) for v in members[idx])
            pairs.append((a, b))
    pairs.sort()
    logger.debug(f"special family: {len(pairs)} pairs at eps={eps:.4g} in ball of radius {ball.radius:.4g}")
    return SpecialFamily(tuple(pairs), eps, ball)


class BallHider:
    """Stays inside a ball of radius r/3, preferring classes that keep a special pair together."""

    name = "ball-hider"

    def __init__(self, G: GraphInstance, ball: Ball, family: SpecialFamily):
        self.ball = ball
        self.family = family
        self.ball_members = set(vertices_in(G, ball).tolist())

    def choose(self, G: GraphInstance, history: GameHistory, offered: List[CandidateClass]) -> CandidateClass:
        where = {}
        for i, c in enumerate(offered):
            for v in c:
                where[v] = i
        scored = []
        for i, c in enumerate(offered):
            in_ball = sum(1 for v in c if v in self.ball_members)
            if in_ball:
                scored.append((i, in_ball))
        if not scored:
            raise NoBallClassError("no offered class meets the hiding ball")
        full_pairs = [0] * len(offered)
        for a, b in self.family.pairs:
            if a in where and where[a] == where.get(b):
                full_pairs[where[a]] += 1
        with_pair = [(i, s) for i, s in scored if full_pairs[i] > 0]
        pool = with_pair or scored
        best = min(pool, key=lambda t: (-full_pairs[t[0]], -t[1], offered[t[0]].min_id))
        return offered[best[0]]


def ball_hider(G: GraphInstance, ball: Ball, family: SpecialFamily) -> BallHider:
    return BallHider(G, ball, family)


@dataclass(frozen=True)
class SparseSite:
    center: Point
    ball_radius: float
    annulus_halfwidth: float
    annulus_empty: bool
    occupants: Tuple[int, ...]
    xi: Optional[float]


def sparse_xi(n: int, r: float) -> Optional[float]:
    log_n = math.log(n)
    ratio = r * r / log_n
    if ratio <= 1:
        return None
    return log_n / (50.0 * math.log(ratio))


def site_annulus_occupants(G: GraphInstance, center: Point, r: float, halfwidth: float) -> np.ndarray:
    near = vertices_in(G, Ball(center, r + halfwidth))
    if near.size == 0:
        return near
    d = G.box.distances(G.box.canonical(center.as_array()), G.positions[near])
    return near[d >= r - halfwidth]


def sparse_site_finder(G: GraphInstance) -> SparseSite:
    """Tile the torus into 3r squares and return the empty-annulus site with the most occupants."""
    r = G.r
    h = G.log_n / (16.0 * r)
    h = min(h, r)
    m = max(1, int(math.floor(G.side / (3.0 * r))))
    tile = G.side / m
    best: Optional[SparseSite] = None
    empty_sites = 0
    for i in range(m):
        for j in range(m):
            center = Point((i + 0.5) * tile, (j + 0.5) * tile)
            if site_annulus_occupants(G, center, r, h).size:
                continue
            empty_sites += 1
            occ = vertices_in(G, Ball(center, h))
            if best is None or len(occ) > len(best.occupants):
                best = SparseSite(
                    center=center,
                    ball_radius=h,
                    annulus_halfwidth=h,
                    annulus_empty=True,
                    occupants=tuple(int(v) for v in occ),
                    xi=sparse_xi(max(G.n, 2), r),
                )
    if best is None:
        raise NoEmptyAnnulusError(f"all {m * m} sites have an occupied annulus")
    logger.info(
        f"sparse site: {empty_sites}/{m * m} empty annuli, best holds {len(best.occupants)} vertices"
        + (f" (xi={best.xi:.3g})" if best.xi is not None else "")
    )
    return best


class SiteHider:
    """Keeps choosing the class holding the most occupants of a sparse site."""

    name = "site-hider"

    def __init__(self, site: SparseSite):
        self.site = site
        self.occupants = set(site.occupants)

    def choose(self, G: GraphInstance, history: GameHistory, offered: List[CandidateClass]) -> CandidateClass:
        def score(c: CandidateClass):
            inside = sum(1 for v in c if v in self.occupants)
            return (-inside, -len(c), c.min_id)

        return min(offered, key=score)


def site_hider(site: SparseSite) -> SiteHider:
    return SiteHider(site)


def sensor_split_counts(G: GraphInstance, sensors: List[int], family: SpecialFamily) -> List[int]:
    """For each sensor, how many special pairs it tells apart."""
    if not family.pairs:
        return [0 for _ in sensors]
    a = np.array([p[0] for p in family.pairs], dtype=np.int64)
    b = np.array([p[1] for p in family.pairs], dtype=np.int64)
    members = np.union1d(a, b)
    counts = []
    for s in sensors:
        dist = hop_distances(G, int(s), targets=members)
        counts.append(int(np.count_nonzero(dist[a] != dist[b])))
    return counts


def split_bounds(n: int, r: float, eps: float) -> Tuple[float, float]:
    """(per-sensor split bound 100 eps^3 r, elimination budget 2*lambda with lambda = 7 pi eps r / 3)."""
    lam = 7.0 * math.pi * eps * r / 3.0
    return 100.0 * eps ** 3 * r, 2.0 * lam


def lower_bound_estimate(n: int, r: float) -> float:
    """Sensor count below which the hiding robber is predicted to survive."""
    log_n = math.log(n)
    part = classify_regime(n, r).part
    if part <= 2:
        return 1e-4 * r ** (4.0 / 3.0) / log_n ** (1.0 / 3.0)
    if part == 3:
        beta = 200.0 * log_n / math.log(math.e * log_n / r)
        return (r * r / 100.0) / beta
    xi = sparse_xi(n, r)
    return 0.0 if xi is None else max(xi - 2.0, 0.0)


def best_hiding_ball(G: GraphInstance, eps: float, candidates: int = 16) -> Tuple[Ball, SpecialFamily]:
    """Ball of radius r/3 with the largest eps-special family among a grid of candidate centres."""
    per_side = max(1, int(math.isqrt(candidates)))
    step = G.side / per_side
    best: Optional[Tuple[Ball, SpecialFamily]] = None
    for i in range(per_side):
        for j in range(per_side):
            ball = Ball(Point((i + 0.5) * step, (j + 0.5) * step), G.r / 3.0)
            family = special_family(G, ball, eps)
            if best is None or len(family) > len(best[1]):
                best = (ball, family)
    logger.info(f"hiding ball at ({best[0].center.x:.4g}, {best[0].center.y:.4g}) with {len(best[1])} special pairs")
    return best
