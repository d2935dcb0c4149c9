# backend/services/cop_strategies.py
"""Cop strategies: grid probing, quadrilateration and the distinguishing-set endgame.

``CompositeCop`` chains the three phases. Each phase works from what the
engine reveals: the class the robber picked and its signature.
"""
import itertools
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from backend.services.distances import (
    UNREACHABLE,
    CandidateClass,
    closed_neighborhood,
    gamma_ratio,
    hop_distances,
    signature_matrix,
    signatures,
)
from backend.services.errors import EmptyIntersectionError, PreconditionViolatedError
from backend.services.game_engine import CopMove, GameHistory
from backend.services.game_engine import rounds as play_rounds
from backend.services.geometry import (
    Ball,
    Crown,
    Point,
    Square,
    Strip,
    crown_pair_strip,
    strip_crossing,
)
from backend.services.profiles import ConstantsProfile
from backend.services.rgg_model import GraphInstance, nearest_vertex, vertices_in
from backend.services.rng import stream
from database.models.certificates import DistinguishingSetCertificate, SquareRecord
from database.models.transcript import GameConfig


def pad_sensors(G: GraphInstance, sensors: Sequence[int], k: int) -> Tuple[int, ...]:
    """First k distinct entries of ``sensors``, topped up with the lowest unused ids."""
    out: List[int] = []
    seen = set()
    for s in sensors:
        s = int(s)
        if s not in seen:
            out.append(s)
            seen.add(s)
        if len(out) == k:
            return tuple(out)
    v = 0
    while len(out) < k and v < G.n:
        if v not in seen:
            out.append(v)
            seen.add(v)
        v += 1
    return tuple(out)


def whole_torus(G: GraphInstance) -> Square:
    return Square(Point(G.side / 2.0, G.side / 2.0), G.side)


def bounding_square(G: GraphInstance, members: np.ndarray, margin: float) -> Square:
    """Axis-aligned square around ``members`` with ``margin`` of slack on every side."""
    ref = G.positions[members[0]]
    local = G.box.delta(ref, G.positions[members])
    lo, hi = local.min(axis=0), local.max(axis=0)
    side = float(max(hi - lo)) + 2.0 * margin
    if side >= G.side:
        return whole_torus(G)
    center = G.box.canonical(ref + (lo + hi) / 2.0)
    return Square(Point.of(center), side)


def class_inside(G: GraphInstance, square: Square, cls: CandidateClass, margin: float = 0.0) -> bool:
    if square.side >= G.side:
        return True
    return bool(square.contains(G.positions[cls.members], box=G.box, margin=margin).all())


def snap_limit(G: GraphInstance, profile: ConstantsProfile) -> float:
    return profile.snap_coef * math.sqrt(G.log_n)


def snap(G: GraphInstance, point: Point, profile: ConstantsProfile) -> Tuple[int, List[str]]:
    v, d = nearest_vertex(G, point)
    flags = []
    if d > snap_limit(G, profile):
        flags.append(f"snap-distance {d:.3g} exceeds {snap_limit(G, profile):.3g} at ({point.x:.4g}, {point.y:.4g})")
    return v, flags


# --- grid probe -----------------------------------------------------------


def probe_vertices(G: GraphInstance, profile: ConstantsProfile) -> Tuple[List[int], List[str]]:
    """Vertices nearest to the grid_divisions x grid_divisions probe grid, in row-major order."""
    g = profile.grid_divisions
    mesh = G.side / g
    out, flags = [], []
    for j in range(g):
        for i in range(g):
            v, f = snap(G, Point(i * mesh, j * mesh), profile)
            flags.extend(f)
            if v not in out:
                out.append(v)
    return out, flags


def probe_needed(G: GraphInstance, profile: ConstantsProfile) -> bool:
    return G.r < G.side / profile.loc_square_coef


def probe_square(G: GraphInstance, profile: ConstantsProfile, best_vertex: Optional[int], best_reading: int) -> Square:
    """Square of side probe_square_fraction*sqrt(n) around the probe vertex with the smallest reading."""
    if best_vertex is None or best_reading == UNREACHABLE:
        return whole_torus(G)
    return Square(G.point(best_vertex), profile.probe_square_fraction * G.side)


@dataclass
class ProbeResult:
    square: Square
    rounds: int
    best_vertex: Optional[int]
    best_reading: Optional[int]
    contained: bool
    final_class: Optional[CandidateClass]


class ProbeTracker:
    def __init__(self):
        self.best_vertex: Optional[int] = None
        self.best_reading: int = UNREACHABLE
        self.best_round = 0

    def update(self, sensors: Sequence[int], readings: Sequence[int], round_index: int, probed: Sequence[int]):
        probed = set(probed)
        for s, d in zip(sensors, readings):
            if s in probed and d < self.best_reading:
                self.best_vertex, self.best_reading, self.best_round = s, int(d), round_index


# --- quadrilateration -----------------------------------------------------


def quad_sensors(G: GraphInstance, square: Square, profile: ConstantsProfile) -> Tuple[List[int], List[str]]:
    """Vertices nearest to the corners A, B, C, D of the concentric square of side 3s."""
    sensors, flags = [], []
    for corner in square.corners(scale=3.0):
        v, f = snap(G, Point.of(G.box.canonical(corner.as_array())), profile)
        sensors.append(v)
        flags.extend(f)
    return sensors, flags


@dataclass
class QuadResult:
    square: Square
    strips: Tuple[Strip, Strip]
    radii: Tuple[float, float, float, float]
    crowns: Tuple[Crown, ...]
    flags: List[str] = field(default_factory=list)


def crown_radius(G: GraphInstance, reading: int, s: float) -> float:
    d_E = max(math.sqrt(2.0) * s - 2.0 * math.sqrt(G.log_n), 0.0)
    ratio = gamma_ratio(G.r, max(G.n, 2), d_E)
    return max(G.r * (reading - 1) / (1.0 + ratio) - 2.0 * math.sqrt(G.log_n), 0.0)


def shell_crown(G: GraphInstance, sensor: int, reading: int) -> Crown:
    """Crown around ``sensor`` spanned by the vertices exactly ``reading`` hops away."""
    dist = hop_distances(G, sensor, max_level=reading)
    shell = np.flatnonzero(dist == reading)
    if shell.size == 0:
        raise EmptyIntersectionError(f"no vertex lies {reading} hops from sensor {sensor}")
    d = G.box.distances(G.positions[sensor], G.positions[shell])
    return Crown(G.point(sensor), float(d.min()), float(d.max()))


def quadrilaterate(
    G: GraphInstance,
    square: Square,
    sensors: Sequence[int],
    readings: Sequence[int],
    profile: ConstantsProfile,
) -> QuadResult:
    """Shrink ``square`` by the profile's factor from the four corner readings.

    With the ``shell`` crown model each crown is the measured extent of the
    sensor's hop shell, widened by the sensor's offset from its corner.
    """
    if any(d == UNREACHABLE for d in readings):
        raise PreconditionViolatedError("a corner sensor cannot reach the candidate class")
    s = square.side
    corners = square.corners(scale=3.0)
    A, B, C, D = corners
    if profile.crown_model == "shell":
        crowns = tuple(shell_crown(G, v, int(d)) for v, d in zip(sensors, readings))
        radii, widths = [], []
        for corner, crown in zip(corners, crowns):
            offset = float(G.box.distances(corner.as_array(), crown.center.as_array()[None, :])[0])
            rho = max(crown.r_inner - offset, 0.0)
            radii.append(rho)
            widths.append(crown.r_outer + offset - rho)
        radii = tuple(radii)
        strip_bd = crown_pair_strip(B, D, radii[1], radii[3], s, widths=(widths[1], widths[3]))
        strip_ac = crown_pair_strip(A, C, radii[0], radii[2], s, widths=(widths[0], widths[2]))
    else:
        radii = tuple(crown_radius(G, int(d), s) for d in readings)
        strip_bd = crown_pair_strip(B, D, radii[1], radii[3], s)
        strip_ac = crown_pair_strip(A, C, radii[0], radii[2], s)
        snap_len = 2.0 * math.sqrt(G.log_n)
        crowns = tuple(
            Crown(G.point(v), rho + snap_len, max(rho + snap_len, rho + s / 6.0 - snap_len))
            for v, rho in zip(sensors, radii)
        )
    center = strip_crossing(strip_bd, strip_ac)
    new = Square(Point.of(G.box.canonical(center.as_array())), s / profile.shrink_factor, square.angle + math.pi / 4.0)
    flags = []
    width_cap = s / profile.shrink_factor - 2.0 * G.r
    for name, strip in (("BD", strip_bd), ("AC", strip_ac)):
        if strip.width > width_cap:
            flags.append(f"strip-{name} width {strip.width:.4g} exceeds {width_cap:.4g}")
    return QuadResult(square=new, strips=(strip_bd, strip_ac), radii=radii, crowns=crowns, flags=flags)


# --- distinguishing sets --------------------------------------------------


def delta_regime(r: float, n: int) -> Tuple[float, float]:
    """(sampling probability, size budget w(n)) for the endgame set."""
    log_n = math.log(n)
    if r >= log_n ** 1.5:
        return r ** (-2.0 / 3.0), 1e15 * r ** (4.0 / 3.0)
    if r >= 100.0 * log_n:
        return log_n ** 2 / r ** 2, 3e16 * log_n ** 2
    return 1.0, 2e10 * r ** 2


def epsilon_critical(n: int, r: float) -> float:
    log_n = math.log(n)
    if r >= log_n ** 1.5:
        return 12.0 * r ** (-1.0 / 3.0)
    return 12.0 * log_n / r


def family_side(G: GraphInstance, profile: ConstantsProfile) -> float:
    return profile.family_square_coef * G.r


def family_step(G: GraphInstance, profile: ConstantsProfile) -> float:
    """Corner spacing of the family grid: about family_step_coef*r, dividing sqrt(n) evenly."""
    return G.side / math.ceil(G.side / (profile.family_step_coef * G.r))


def family_squares(G: GraphInstance, profile: ConstantsProfile) -> List[Square]:
    side = family_side(G, profile)
    if side >= G.side:
        return [whole_torus(G)]
    step = family_step(G, profile)
    corners = np.arange(round(G.side / step)) * step
    return [
        Square(Point.of(G.box.canonical(np.array([cx + side / 2.0, cy + side / 2.0]))), side)
        for cy in corners
        for cx in corners
    ]


def internal_square(G: GraphInstance, square: Square) -> Square:
    if square.side >= G.side:
        return square
    return square.shrink(G.r)


def family_square_for(G: GraphInstance, members: np.ndarray, profile: ConstantsProfile) -> Tuple[Square, bool]:
    """A family square whose internal square holds every member; (square, fits)."""
    side = family_side(G, profile)
    if side >= G.side:
        return whole_torus(G), True
    step = family_step(G, profile)
    ref = G.positions[members[0]]
    local = ref + G.box.delta(ref, G.positions[members])
    lo, hi = local.min(axis=0), local.max(axis=0)
    corner = np.floor((lo - G.r) / step) * step
    fits = bool(np.all(hi <= corner + side - G.r))
    if not fits:
        return bounding_square(G, members, G.r), False
    center = G.box.canonical(corner + side / 2.0)
    return Square(Point.of(center), side), True


@dataclass
class DistinguishingSet:
    X: np.ndarray
    Y: np.ndarray
    W: np.ndarray
    square: Square
    internal: Square
    delta: float
    targets: np.ndarray
    w_budget: float
    verified: bool

    def to_certificate(self) -> DistinguishingSetCertificate:
        def rec(sq: Square) -> SquareRecord:
            return SquareRecord(cx=sq.center.x, cy=sq.center.y, side=sq.side, angle=sq.angle)

        return DistinguishingSetCertificate(
            square=rec(self.square),
            internal=rec(self.internal),
            delta=self.delta,
            X=self.X.tolist(),
            Y=self.Y.tolist(),
            W=self.W.tolist(),
            targets=len(self.targets),
            w_budget=self.w_budget,
            verified=self.verified,
        )


def build_distinguishing_set(
    G: GraphInstance,
    square: Square,
    delta: float,
    seed: int,
    candidates: Optional[np.ndarray] = None,
    patch: bool = True,
) -> DistinguishingSet:
    """W = X ∪ Y: a delta-sample X of the square patched with every vertex X fails to single out.

    Targets are the vertices of the internal square, or ``candidates`` when
    given (the endgame passes N[class]). ``patch=False`` leaves Y empty.
    ``verified`` is read off the X-signatures of the targets outside W.
    """
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    in_square = vertices_in(G, square)
    internal = internal_square(G, square)
    if candidates is None:
        targets = vertices_in(G, internal)
    else:
        targets = np.unique(np.asarray(candidates, dtype=np.int64))
    draws = stream(seed, "distinguishing-x").random(G.n)
    X = in_square[draws[in_square] < delta]
    rest = np.setdiff1d(targets, X)
    mat = signature_matrix(G, X, rest) if X.size and rest.size > 1 else None
    Y = np.empty(0, dtype=np.int64)
    if patch and rest.size > 1:
        if mat is None:
            Y = rest
        else:
            _, inverse, counts = np.unique(mat, axis=0, return_inverse=True, return_counts=True)
            Y = rest[counts[np.asarray(inverse).reshape(-1)] > 1]
    W = np.union1d(X, Y)
    # targets in W read 0 on their own sensor; the others need distinct X-rows
    outside = ~np.isin(rest, Y)
    if outside.sum() <= 1:
        verified = True
    elif mat is None:
        verified = False
    else:
        rows = mat[outside]
        verified = bool(np.unique(rows, axis=0).shape[0] == rows.shape[0])
    _, budget = delta_regime(G.r, max(G.n, 2))
    logger.debug(f"distinguishing set: |X|={X.size}, |Y|={Y.size}, |W|={W.size}, {targets.size} targets")
    return DistinguishingSet(
        X=X, Y=Y, W=W, square=square, internal=internal, delta=delta, targets=targets, w_budget=budget, verified=verified
    )


def verify_distinguishing_set(G: GraphInstance, ds: DistinguishingSet) -> bool:
    """Independent check: all targets get pairwise distinct W-signatures."""
    if ds.targets.size <= 1:
        return True
    if ds.W.size == 0:
        return False
    sigs = signatures(G, ds.W.tolist(), CandidateClass(ds.targets, presorted=True))
    return len(set(sigs.values())) == len(sigs)


# --- strategies -----------------------------------------------------------


class CompositeCop:
    """Probe, then quadrilaterate down to loc_square_coef*r, then place a distinguishing set."""

    name = "composite"

    def __init__(self, profile: ConstantsProfile, seed: int = 0):
        self.profile = profile
        self.seed = seed
        self.phase = "start"
        self.square: Optional[Square] = None
        self.required_k: Optional[int] = None
        self._probe_queue: List[List[int]] = []
        self._probe_all: List[int] = []
        self._tracker = ProbeTracker()
        self._probe_rounds = 0
        self._pending_quad: Optional[Tuple[Square, List[int]]] = None
        self._corner_vertices: List[int] = []
        self._chunk = 0
        self._quad_abandoned = False
        self.quad_results: List[Tuple[QuadResult, CandidateClass]] = []
        self.leaks = 0

    def _queue_probes(self, G: GraphInstance, cfg: GameConfig) -> List[str]:
        self._probe_all, flags = probe_vertices(G, self.profile)
        size = min(4, cfg.k)
        self._probe_queue = [self._probe_all[i:i + size] for i in range(0, len(self._probe_all), size)]
        self.phase = "probe"
        return flags

    def _start(self, G: GraphInstance, cfg: GameConfig) -> List[str]:
        # the probe square only feeds quadrilateration, which needs four sensors
        if cfg.k < 4 or not probe_needed(G, self.profile):
            self.square = whole_torus(G)
            self.phase = "quadrilaterate"
            return []
        return self._queue_probes(G, cfg)

    def _finish_probe(self, G: GraphInstance, history: GameHistory) -> List[str]:
        t = self._tracker
        self.square = probe_square(G, self.profile, t.best_vertex, t.best_reading)
        self.phase = "quadrilaterate"
        logger.info(
            f"probe phase done after {self._probe_rounds} rounds: reading {t.best_reading} at round {t.best_round}, "
            f"square side {self.square.side:.4g}"
        )
        cls = history.current_class
        if cls is not None and not class_inside(G, self.square, cls):
            self.leaks += 1
            return [f"probe-leak: class leaves the probe square (side {self.square.side:.4g})"]
        return []

    def _finish_quad(self, G: GraphInstance, history: GameHistory) -> List[str]:
        square, placed = self._pending_quad
        self._pending_quad = None
        corners = self._corner_vertices
        sig = history.last.chosen.signature.readings
        readings = [sig[placed.index(v)] for v in corners]
        cls = history.current_class
        try:
            result = quadrilaterate(G, square, corners, readings, self.profile)
        except (EmptyIntersectionError, PreconditionViolatedError) as e:
            logger.warning(f"quadrilateration abandoned: {e}")
            self._quad_abandoned = True
            return [f"{e.code}: quadrilateration abandoned"]
        self.quad_results.append((result, cls))
        flags = list(result.flags)
        self.square = result.square
        if not class_inside(G, self.square, cls):
            self.leaks += 1
            flags.append(f"precondition-violated: class leaves the square of side {self.square.side:.4g}")
        return flags

    def _can_quadrilaterate(self, G: GraphInstance, cfg: GameConfig) -> bool:
        s = self.square.side
        return (
            not self._quad_abandoned
            and cfg.k >= 4
            and s > self.profile.loc_square_coef * G.r
            and s <= self.profile.probe_square_fraction * G.side + 1e-9
        )

    def _endgame(self, G: GraphInstance, cfg: GameConfig, history: GameHistory) -> CopMove:
        flags: List[str] = []
        cls = history.current_class
        if cls is None:
            domain = np.arange(G.n, dtype=np.int64)
        else:
            domain = closed_neighborhood(G, cls).members
        square, fits = family_square_for(G, domain, self.profile)
        if not fits:
            flags.append("family-fallback: no family square holds N[class]")
        elif square.side >= G.side and cls is not None:
            square = bounding_square(G, domain, G.r)
        delta, _ = delta_regime(G.r, max(G.n, 2))
        ds = build_distinguishing_set(G, square, delta, self.seed + history.round, candidates=domain)
        w = ds.W.tolist()
        self.required_k = max(self.required_k or 0, len(w))
        if len(w) <= cfg.k:
            return CopMove(pad_sensors(G, w, cfg.k), "endgame", tuple(flags))
        start = (self._chunk * cfg.k) % len(w)
        self._chunk += 1
        chunk = (w[start:] + w[:start])[: cfg.k]
        flags.append(f"endgame-chunked: |W|={len(w)} > k={cfg.k}")
        return CopMove(pad_sensors(G, chunk, cfg.k), "endgame", tuple(flags))

    def next_move(self, G: GraphInstance, cfg: GameConfig, history: GameHistory) -> CopMove:
        flags: List[str] = []
        if self.phase == "start":
            flags.extend(self._start(G, cfg))

        if self.phase == "probe":
            last = history.last
            if last is not None and self._probe_rounds:
                self._tracker.update(last.sensors, last.chosen.signature.readings, self._probe_rounds, self._probe_all)
            if self._probe_queue:
                group = self._probe_queue.pop(0)
                self._probe_rounds += 1
                return CopMove(pad_sensors(G, group, cfg.k), "probe", tuple(flags))
            flags.extend(self._finish_probe(G, history))

        if self.phase == "quadrilaterate":
            if self._pending_quad is not None:
                flags.extend(self._finish_quad(G, history))
            if self._can_quadrilaterate(G, cfg):
                corners, snap_flags = quad_sensors(G, self.square, self.profile)
                flags.extend(snap_flags)
                placed = list(pad_sensors(G, corners, cfg.k))
                if len(set(corners)) < 4:
                    flags.append("corner sensors coincide")
                self._corner_vertices = corners
                self._pending_quad = (self.square, placed)
                return CopMove(tuple(placed), "quadrilaterate", tuple(flags))
            if cfg.k < 4 and self.square.side > self.profile.loc_square_coef * G.r:
                flags.append(f"k={cfg.k} < 4: quadrilateration skipped")
            self.phase = "endgame"

        move = self._endgame(G, cfg, history)
        return CopMove(move.sensors, move.phase, tuple(flags) + move.flags)


def composite_cop(profile: ConstantsProfile, seed: int = 0) -> CompositeCop:
    return CompositeCop(profile, seed)


class ProbeOnlyCop(CompositeCop):
    name = "grid-probe"

    def next_move(self, G: GraphInstance, cfg: GameConfig, history: GameHistory) -> CopMove:
        if self.phase == "start":
            self._queue_probes(G, cfg)
        last = history.last
        if last is not None and self._probe_rounds:
            self._tracker.update(last.sensors, last.chosen.signature.readings, self._probe_rounds, self._probe_all)
        group = self._probe_queue.pop(0) if self._probe_queue else []
        self._probe_rounds += 1
        return CopMove(pad_sensors(G, group, cfg.k), "probe")


def grid_probe(G: GraphInstance, profile: ConstantsProfile, robber, k: int = 4, seed: int = 0) -> ProbeResult:
    """Play the probe phase alone and return the containment square it yields."""
    if k == 0 or not probe_needed(G, profile):
        return ProbeResult(whole_torus(G), 0, None, None, True, None)
    cop = ProbeOnlyCop(profile, seed)
    probe_list, _ = probe_vertices(G, profile)
    rounds = math.ceil(len(probe_list) / min(4, k))
    history = GameHistory()
    for _ in play_rounds(G, GameConfig(k=k, max_rounds=rounds, seed=seed), cop, robber, history):
        pass
    last = history.last
    cop._tracker.update(last.sensors, last.chosen.signature.readings, cop._probe_rounds, cop._probe_all)
    t = cop._tracker
    square = probe_square(G, profile, t.best_vertex, t.best_reading)
    cls = history.current_class
    return ProbeResult(square, len(history.entries), t.best_vertex, t.best_reading, class_inside(G, square, cls), cls)


class FloodingCop:
    """Spends every sensor on the hiding ball's vertices, rotating through them."""

    name = "flooding"

    def __init__(self, ball_vertices: Sequence[int]):
        self.ball_vertices = sorted(int(v) for v in ball_vertices)
        self._offset = 0

    def next_move(self, G: GraphInstance, cfg: GameConfig, history: GameHistory) -> CopMove:
        pool = self.ball_vertices
        if not pool or cfg.k == 0:
            return CopMove(pad_sensors(G, [], cfg.k), "flood")
        start = self._offset % len(pool)
        self._offset += cfg.k
        rotated = pool[start:] + pool[:start]
        return CopMove(pad_sensors(G, rotated[: cfg.k], cfg.k), "flood")


def flooding_cop(G: GraphInstance, ball: Ball) -> FloodingCop:
    return FloodingCop(vertices_in(G, ball).tolist())


class RoundRobinCop:
    """Cycles through every k-subset of V in lexicographic order."""

    name = "round-robin"

    def __init__(self):
        self._iter = None

    def next_move(self, G: GraphInstance, cfg: GameConfig, history: GameHistory) -> CopMove:
        if self._iter is None:
            self._iter = itertools.cycle(itertools.combinations(range(G.n), cfg.k))
        return CopMove(tuple(next(self._iter)), "exhaustive")


def round_robin_cop() -> RoundRobinCop:
    return RoundRobinCop()
