# tests/test_resolving_sets.py
import numpy as np
import pytest

from backend.services.resolving_sets import (
    closed_neighborhood_key,
    greedy_resolving_set,
    is_resolving,
    random_resolving_set,
    twin_pair_count,
)
from backend.services.rgg_model import GraphInstance

from tests.builders import complete_graph, path_graph, random_instance
from tests.oracles import all_distances, nx_graph


def test_path_is_resolved_by_an_end():
    G = path_graph(6)
    assert is_resolving(G, [0])
    assert not is_resolving(G, [2])
    assert greedy_resolving_set(G) == [0]


@pytest.mark.parametrize("m", [2, 3, 5, 8])
def test_complete_graph_needs_m_minus_one(m):
    G = complete_graph(m)
    W = greedy_resolving_set(G)
    assert len(W) == m - 1
    assert is_resolving(G, W)


def test_empty_set_resolves_only_trivial_graphs():
    assert is_resolving(GraphInstance.from_positions([(1.0, 1.0)], r=1.0, side=3.0), [])
    assert not is_resolving(path_graph(2), [])


def test_greedy_set_resolves_random_instance(small_instance):
    W = greedy_resolving_set(small_instance)
    assert is_resolving(small_instance, W)
    dist = all_distances(nx_graph(small_instance))
    assert len({tuple(dist[W, v]) for v in range(small_instance.n)}) == small_instance.n


def test_twin_pairs_are_certified(small_instance):
    G = small_instance
    cert = twin_pair_count(G)
    assert cert.count == len(cert.pairs)
    used = [v for p in cert.pairs for v in p]
    assert len(used) == len(set(used))
    for a, b in cert.pairs:
        assert closed_neighborhood_key(G, a) == closed_neighborhood_key(G, b)


def test_twin_pairs_lower_bound_resolving_sets():
    G = random_instance(400, 3.0, seed=12)
    cert = twin_pair_count(G)
    assert len(greedy_resolving_set(G)) >= cert.count


def test_complete_graph_twins():
    cert = twin_pair_count(complete_graph(5))
    assert cert.count == 2
    assert cert.pairs == [(0, 1), (2, 3)]


def test_random_resolving_set(small_instance):
    W = random_resolving_set(small_instance, 0.2, seed=3)
    assert is_resolving(small_instance, W)
    again = random_resolving_set(small_instance, 0.2, seed=3)
    assert W == again


def test_random_resolving_set_extremes():
    G = path_graph(5)
    assert random_resolving_set(G, 1.0, seed=0) == [0, 1, 2, 3, 4]
    # no sample: every vertex but one goes into the patch
    assert len(random_resolving_set(G, 0.0, seed=0)) == 4
    with pytest.raises(ValueError):
        random_resolving_set(G, 1.5, seed=0)


def test_coincident_vertices_are_split_by_a_sensor_on_either():
    G = GraphInstance.from_positions([(1.0, 1.0), (1.0, 1.0)], r=1.0, side=10.0)
    assert greedy_resolving_set(G) == [0]
    assert np.array_equal(all_distances(nx_graph(G)), [[0, 1], [1, 0]])
