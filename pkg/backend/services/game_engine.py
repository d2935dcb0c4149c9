# backend/services/game_engine.py
"""Referee for the localization game, played on candidate classes.

Round 1 partitions V by the sensors' readings; every later round partitions
the closed neighbourhood of the class the robber picked last. The cops win
as soon as the robber ends up in a singleton class.
"""
import itertools
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterator, List, Optional, Protocol, Sequence, Tuple

import numpy as np
from loguru import logger

from backend.services.distances import (
    UNREACHABLE,
    CandidateClass,
    closed_neighborhood,
    hop_distances,
    refine,
)
from backend.services.errors import (
    EmptyInstanceError,
    IllegalCopMoveError,
    IllegalRobberMoveError,
    InstanceTooLargeError,
)
from backend.services.rgg_model import GraphInstance
from database.models.transcript import GameConfig, RoundRecord, Transcript

EXACT_ZETA_MAX_VERTICES = 12


@dataclass(frozen=True)
class CopMove:
    sensors: Tuple[int, ...]
    phase: str = ""
    flags: Tuple[str, ...] = ()


@dataclass
class HistoryEntry:
    sensors: Tuple[int, ...]
    domain: CandidateClass
    partition: List[CandidateClass]
    chosen: CandidateClass


@dataclass
class GameHistory:
    entries: List[HistoryEntry] = field(default_factory=list)

    @property
    def round(self) -> int:
        """Number of completed rounds."""
        return len(self.entries)

    @property
    def last(self) -> Optional[HistoryEntry]:
        return self.entries[-1] if self.entries else None

    @property
    def current_class(self) -> Optional[CandidateClass]:
        return self.entries[-1].chosen if self.entries else None


class CopStrategy(Protocol):
    name: str

    def next_move(self, G: GraphInstance, cfg: GameConfig, history: GameHistory) -> CopMove:
        ...


class RobberStrategy(Protocol):
    name: str

    def choose(self, G: GraphInstance, history: GameHistory, offered: List[CandidateClass]) -> CandidateClass:
        ...


def _validate_sensors(G: GraphInstance, cfg: GameConfig, sensors: Sequence[int]) -> Tuple[int, ...]:
    sensors = tuple(int(s) for s in sensors)
    if len(sensors) != cfg.k:
        raise IllegalCopMoveError(f"expected {cfg.k} sensors, got {len(sensors)}")
    if len(set(sensors)) != len(sensors):
        raise IllegalCopMoveError(f"repeated sensor in {sensors}")
    bad = [s for s in sensors if not 0 <= s < G.n]
    if bad:
        raise IllegalCopMoveError(f"sensor ids out of range: {bad}")
    return sensors


def rounds(
    G: GraphInstance, cfg: GameConfig, cop: CopStrategy, robber: RobberStrategy, history: Optional[GameHistory] = None
) -> Iterator[Tuple[int, CopMove, HistoryEntry]]:
    """Play up to cfg.max_rounds rounds, yielding each one; stops after a singleton class."""
    if G.n == 0:
        raise EmptyInstanceError("cannot play on an empty instance")
    history = history if history is not None else GameHistory()
    everything = CandidateClass(np.arange(G.n, dtype=np.int64), presorted=True)
    for t in range(1, cfg.max_rounds + 1):
        domain = everything if history.current_class is None else closed_neighborhood(G, history.current_class)
        move = cop.next_move(G, cfg, history)
        sensors = _validate_sensors(G, cfg, move.sensors)
        partition = refine(G, domain, sensors)
        chosen = robber.choose(G, history, partition)
        if chosen not in partition:
            raise IllegalRobberMoveError(f"round {t}: chosen class {chosen!r} is not on offer")
        entry = HistoryEntry(sensors=sensors, domain=domain, partition=partition, chosen=chosen)
        history.entries.append(entry)
        yield t, move, entry
        if len(chosen) == 1:
            return


def play(G: GraphInstance, cfg: GameConfig, cop: CopStrategy, robber: RobberStrategy) -> Transcript:
    transcript = Transcript(config=cfg, cop=cop.name, robber=robber.name, n=G.n)
    for t, move, entry in rounds(G, cfg, cop, robber):
        sensors, partition, chosen = entry.sensors, entry.partition, entry.chosen
        transcript.rounds.append(
            RoundRecord(
                round=t,
                phase=move.phase,
                sensors=list(sensors),
                partition_sizes=[len(c) for c in partition],
                chosen_class_size=len(chosen),
                class_min_id=chosen.min_id,
                flags=list(move.flags),
            )
        )
        for flag in move.flags:
            logger.warning(f"round {t}: {flag}")
        logger.debug(f"round {t} [{move.phase}]: {len(partition)} classes, robber kept {len(chosen)}")
        if len(chosen) == 1:
            transcript.outcome = "cop_win"
            transcript.win_round = t
            break
    transcript.required_k = getattr(cop, "required_k", None)
    logger.info(
        f"Game {cop.name} vs {robber.name} (k={cfg.k}): {transcript.outcome}"
        + (f" in round {transcript.win_round}" if transcript.win_round else f" after {cfg.max_rounds} rounds")
    )
    return transcript


class _ExactSolver:
    """Least fixed point of the cop-winning classes for a fixed k on a tiny graph."""

    def __init__(self, G: GraphInstance):
        self.n = G.n
        rows = [hop_distances(G, v) for v in range(G.n)]
        self.dist = np.vstack(rows) if rows else np.zeros((0, 0), dtype=np.int64)
        self.closed: Dict[FrozenSet[int], FrozenSet[int]] = {}
        self._parts: Dict[Tuple[FrozenSet[int], Tuple[int, ...]], List[FrozenSet[int]]] = {}

    def neighborhood(self, cls: FrozenSet[int]) -> FrozenSet[int]:
        if cls not in self.closed:
            members = sorted(cls)
            reach = np.flatnonzero((self.dist[members] <= 1).any(axis=0))
            self.closed[cls] = frozenset(int(v) for v in reach)
        return self.closed[cls]

    def partition(self, domain: FrozenSet[int], sensors: Tuple[int, ...]) -> List[FrozenSet[int]]:
        key = (domain, sensors)
        if key not in self._parts:
            groups: Dict[Tuple[int, ...], List[int]] = {}
            for v in sorted(domain):
                groups.setdefault(tuple(int(self.dist[s, v]) for s in sensors), []).append(v)
            self._parts[key] = [frozenset(g) for _, g in sorted(groups.items())]
        return self._parts[key]

    def cops_win_with(self, k: int) -> bool:
        everything = frozenset(range(self.n))
        sensor_sets = list(itertools.combinations(range(self.n), k))
        states = set()
        frontier = [c for S in sensor_sets for c in self.partition(everything, S) if len(c) > 1]
        while frontier:
            c = frontier.pop()
            if c in states:
                continue
            states.add(c)
            dom = self.neighborhood(c)
            for S in sensor_sets:
                frontier.extend(d for d in self.partition(dom, S) if len(d) > 1 and d not in states)

        winning = set()
        changed = True
        while changed:
            changed = False
            for c in sorted(states - winning, key=lambda s: (len(s), sorted(s))):
                dom = self.neighborhood(c)
                if any(all(len(d) == 1 or d in winning for d in self.partition(dom, S)) for S in sensor_sets):
                    winning.add(c)
                    changed = True
        return any(all(len(d) == 1 or d in winning for d in self.partition(everything, S)) for S in sensor_sets)


def exact_zeta(G: GraphInstance) -> int:
    """Smallest k for which the cops have a winning strategy (tiny graphs only)."""
    if G.n == 0:
        raise EmptyInstanceError("exact_zeta on an empty instance")
    if G.n > EXACT_ZETA_MAX_VERTICES:
        raise InstanceTooLargeError(f"exact_zeta supports at most {EXACT_ZETA_MAX_VERTICES} vertices, got {G.n}")
    solver = _ExactSolver(G)
    for k in range(G.n):
        if solver.cops_win_with(k):
            logger.info(f"exact_zeta: {k} on {G.n} vertices")
            return k
    return G.n
