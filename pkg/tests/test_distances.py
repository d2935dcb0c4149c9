# tests/test_distances.py
import math

import numpy as np
import pytest
from pydantic import ValidationError

from backend.services.distances import (
    UNREACHABLE,
    CandidateClass,
    GammaInputs,
    check_distance_bound,
    closed_neighborhood,
    corollary_ceiling,
    gamma,
    gamma_terms,
    hop_distances,
    refine,
    signatures,
)
from backend.services.errors import InvalidVertexError
from backend.services.rgg_model import GraphInstance, neighbors

from tests.builders import path_graph, random_instance
from tests.oracles import bfs_oracle, group_by_signature, nx_graph, all_distances


def test_bfs_matches_networkx(small_instance):
    G = small_instance
    graph = nx_graph(G)
    for s in (0, 17, 123, G.n - 1):
        assert np.array_equal(hop_distances(G, s), bfs_oracle(graph, s))


def test_bfs_matches_networkx_on_square_metric(square_instance):
    G = square_instance
    graph = nx_graph(G)
    for s in (0, 50, 399):
        assert np.array_equal(hop_distances(G, s), bfs_oracle(graph, s))


def test_bfs_on_path():
    G = path_graph(6)
    assert hop_distances(G, 0).tolist() == [0, 1, 2, 3, 4, 5]
    assert hop_distances(G, 3).tolist() == [3, 2, 1, 0, 1, 2]


def test_unreachable_vertices():
    G = GraphInstance.from_positions([(1.0, 1.0), (1.5, 1.0), (6.0, 6.0)], r=1.0, side=10.0)
    dist = hop_distances(G, 0)
    assert dist.tolist()[:2] == [0, 1]
    assert dist[2] == UNREACHABLE


def test_targets_are_exact_even_with_early_exit(small_instance):
    G = small_instance
    full = hop_distances(G, 5)
    targets = np.array([5, 40, 41, 200])
    partial = hop_distances(G, 5, targets=targets)
    assert np.array_equal(partial[targets], full[targets])


def test_bfs_rejects_bad_source():
    with pytest.raises(InvalidVertexError):
        hop_distances(path_graph(3), 3)


def test_refine_matches_brute_force_grouping(small_instance):
    G = small_instance
    dist = all_distances(nx_graph(G))
    sensors = [3, 77, 150]
    everything = CandidateClass(np.arange(G.n))
    classes = refine(G, everything, sensors)
    assert [c.members.tolist() for c in classes] == group_by_signature(dist, sensors, range(G.n))
    sigs = [c.signature for c in classes]
    assert sigs == sorted(sigs)
    assert sum(len(c) for c in classes) == G.n


def test_refine_is_a_partition_of_the_domain(small_instance):
    G = small_instance
    domain = CandidateClass(np.arange(0, G.n, 3))
    classes = refine(G, domain, [1, 2])
    joined = np.sort(np.concatenate([c.members for c in classes]))
    assert np.array_equal(joined, domain.members)


def test_refine_without_sensors_returns_the_domain():
    G = path_graph(4)
    domain = CandidateClass([0, 1, 2, 3])
    (only,) = refine(G, domain, [])
    assert only == domain


def test_sensor_reads_zero_on_itself():
    G = path_graph(5)
    sig = signatures(G, [2, 4], CandidateClass(range(5)))
    assert sig[2].readings == (0, 2)
    assert sig[4].readings == (2, 0)


def test_closed_neighborhood_on_path():
    G = path_graph(6)
    assert closed_neighborhood(G, CandidateClass([2])).members.tolist() == [1, 2, 3]
    assert closed_neighborhood(G, CandidateClass([0, 5])).members.tolist() == [0, 1, 4, 5]


def test_candidate_class_rejects_duplicates():
    with pytest.raises(ValueError):
        CandidateClass([1, 1, 2])
    c = CandidateClass([5, 2, 9])
    assert c.members.tolist() == [2, 5, 9]
    assert 5 in c and 4 not in c
    assert c.min_id == 2


def test_gamma_terms():
    inp = GammaInputs(r=100.0, d_E=100.0, n=10**6)
    log_n = math.log(10**6)
    first, second, third = gamma_terms(inp)
    assert first == pytest.approx(31.0 * log_n ** (2.0 / 3.0))
    assert second == pytest.approx(70.0 * log_n ** 2 / 100.0 ** (8.0 / 3.0))
    assert third == pytest.approx(300.0 ** (2.0 / 3.0))
    assert gamma(inp) == max(first, second, third)
    with pytest.raises(ValidationError):
        GammaInputs(r=0.0, d_E=1.0, n=10)


def test_ceiling_at_least_plain_ratio():
    for d in (0.5, 10.0, 99.0):
        assert corollary_ceiling(d, 5.0, 10_000) >= math.ceil(d / 5.0)


def test_distance_bound_on_dense_instance():
    G = random_instance(3000, 8.0, seed=4)
    report = check_distance_bound(G, 300, seed=1)
    assert report.pairs_checked == 300
    assert report.lower_bound_failures == 0
    assert not report.violations


def test_distance_bound_is_reproducible(small_instance):
    a = check_distance_bound(small_instance, 50, seed=9)
    b = check_distance_bound(small_instance, 50, seed=9)
    assert a.model_dump() == b.model_dump()


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(50))
def test_graph_primitives_match_networkx_on_random_instances(seed):
    rng = np.random.default_rng(1000 + seed)
    n = int(rng.integers(50, 2001))
    r = float(rng.choice([0.8, 1.2, 2.0, 3.0]))
    metric = "torus" if seed % 2 == 0 else "square"
    G = random_instance(n, r, seed=seed, metric=metric)
    graph = nx_graph(G)
    sources = [int(v) for v in rng.choice(G.n, size=min(4, G.n), replace=False)]

    for s in sources:
        assert np.array_equal(hop_distances(G, s), bfs_oracle(graph, s))
        assert neighbors(G, s).tolist() == sorted(graph.neighbors(s))

    rows = np.vstack([bfs_oracle(graph, s) for s in sources])
    classes = refine(G, CandidateClass(np.arange(G.n)), sources)
    assert [c.members.tolist() for c in classes] == group_by_signature(rows, range(len(sources)), range(G.n))

    cls = classes[-1]
    expected = set(cls.members.tolist())
    for v in cls.members.tolist():
        expected.update(graph.neighbors(v))
    assert closed_neighborhood(G, cls).members.tolist() == sorted(expected)
