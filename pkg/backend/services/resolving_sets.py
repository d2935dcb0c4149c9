# backend/services/resolving_sets.py
"""Resolving sets (one-round sensor placements) and twin-pair certificates."""
from typing import Dict, List, Sequence, Tuple

import numpy as np
from loguru import logger

from backend.services.distances import hop_distances, signature_matrix
from backend.services.errors import UnresolvableTwinsError
from backend.services.rgg_model import GraphInstance, neighbors
from backend.services.rng import stream
from database.models.certificates import TwinPairCertificate


def _unresolved_pairs(labels: np.ndarray) -> int:
    _, counts = np.unique(labels, return_counts=True)
    return int((counts * (counts - 1) // 2).sum())


def _relabel(labels: np.ndarray, column: np.ndarray) -> np.ndarray:
    _, inverse = np.unique(np.column_stack([labels, column]), axis=0, return_inverse=True)
    return np.asarray(inverse).reshape(-1)


def is_resolving(G: GraphInstance, sensors: Sequence[int]) -> bool:
    """True when every vertex gets its own signature."""
    if G.n <= 1:
        return True
    if len(sensors) == 0:
        return False
    mat = signature_matrix(G, list(sensors), np.arange(G.n, dtype=np.int64))
    return len(np.unique(mat, axis=0)) == G.n


def greedy_resolving_set(G: GraphInstance) -> List[int]:
    """Add the vertex that splits the most unresolved pairs until every signature is unique."""
    if G.n <= 1:
        return []
    dist = np.vstack([hop_distances(G, v) for v in range(G.n)])
    labels = np.zeros(G.n, dtype=np.int64)
    remaining = _unresolved_pairs(labels)
    chosen: List[int] = []
    while remaining:
        best_v, best_after = -1, remaining
        for v in range(G.n):
            if v in chosen:
                continue
            after = _unresolved_pairs(_relabel(labels, dist[v]))
            if after < best_after:
                best_v, best_after = v, after
        if best_v < 0:
            raise UnresolvableTwinsError(f"{remaining} pairs share every signature")
        chosen.append(best_v)
        labels = _relabel(labels, dist[best_v])
        remaining = best_after
    logger.info(f"greedy resolving set: {len(chosen)} sensors on {G.n} vertices")
    return sorted(chosen)


def closed_neighborhood_key(G: GraphInstance, v: int) -> Tuple[int, ...]:
    nb = neighbors(G, v)
    return tuple(np.union1d(nb, [v]).tolist())


def twin_pair_count(G: GraphInstance) -> TwinPairCertificate:
    """Greedy disjoint pairs of adjacent vertices with equal closed neighbourhoods.

    No third vertex sees the two members of such a pair at different
    distances, so each pair costs any resolving set one sensor.
    """
    groups: Dict[Tuple[int, ...], List[int]] = {}
    for v in range(G.n):
        key = closed_neighborhood_key(G, v)
        if len(key) >= 2:
            groups.setdefault(key, []).append(v)
    pairs: List[Tuple[int, int]] = []
    for members in groups.values():
        for i in range(0, len(members) - 1, 2):
            pairs.append((members[i], members[i + 1]))
    pairs.sort()
    logger.info(f"twin pairs: {len(pairs)} certified on {G.n} vertices")
    return TwinPairCertificate(n=G.n, r=G.r, count=len(pairs), pairs=pairs)


def random_resolving_set(G: GraphInstance, p: float, seed: int, verify: bool = True) -> List[int]:
    """A p-sample of V, patched with all but one member of each class it leaves unresolved."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if G.n <= 1:
        return []
    draws = stream(seed, "random-resolving").random(G.n)
    X = np.flatnonzero(draws < p).astype(np.int64)
    everyone = np.arange(G.n, dtype=np.int64)
    if X.size:
        mat = signature_matrix(G, X.tolist(), everyone)
        _, inverse = np.unique(mat, axis=0, return_inverse=True)
        inverse = np.asarray(inverse).reshape(-1)
    else:
        inverse = np.zeros(G.n, dtype=np.int64)
    patch: List[int] = []
    order = np.argsort(inverse, kind="stable")
    bounds = np.flatnonzero(np.diff(inverse[order])) + 1
    for group in np.split(order, bounds):
        rest = np.setdiff1d(group, X)
        if group.size > 1 and rest.size > 1:
            patch.extend(rest[:-1].tolist())
    W = sorted(set(X.tolist()) | set(patch))
    if verify and not is_resolving(G, W):
        raise UnresolvableTwinsError("patched sample still leaves shared signatures")
    logger.info(f"random resolving set: |X|={X.size}, patch={len(patch)}, total={len(W)}")
    return W