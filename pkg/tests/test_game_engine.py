# tests/test_game_engine.py
import numpy as np
import pytest

from backend.services.cop_strategies import RoundRobinCop
from backend.services.distances import CandidateClass
from backend.services.errors import (
    EmptyInstanceError,
    IllegalCopMoveError,
    IllegalRobberMoveError,
    InstanceTooLargeError,
)
from backend.services.game_engine import CopMove, GameHistory, exact_zeta, play, rounds
from backend.services.rgg_model import GraphInstance, ModelParams, sample_instance
from backend.services.robber_strategies import max_class_robber
from database.models.transcript import GameConfig

from tests.builders import complete_graph, path_graph
from tests.oracles import game_tree_zeta, nx_graph


class FixedCop:
    name = "fixed"

    def __init__(self, sensors):
        self.sensors = tuple(sensors)

    def next_move(self, G, cfg, history):
        return CopMove(self.sensors, "fixed")


class OutsideRobber:
    name = "outside"

    def choose(self, G, history, offered):
        return CandidateClass([G.n - 1, G.n - 2])


def test_end_sensor_localizes_path_in_one_round():
    G = path_graph(7)
    t = play(G, GameConfig(k=1), FixedCop([0]), max_class_robber())
    assert t.cop_won
    assert t.win_round == 1
    assert t.rounds[0].partition_sizes == [1] * 7


def test_complete_graph_needs_all_but_one_sensor():
    G = complete_graph(5)
    short = play(G, GameConfig(k=3, max_rounds=10), FixedCop([0, 1, 2]), max_class_robber())
    assert short.outcome == "robber_survives"
    assert len(short.rounds) == 10
    assert all(rec.chosen_class_size == 2 for rec in short.rounds)
    enough = play(G, GameConfig(k=4), FixedCop([0, 1, 2, 3]), max_class_robber())
    assert enough.cop_won and enough.win_round == 1


def test_second_round_partitions_the_closed_neighbourhood():
    G = path_graph(9)
    history = GameHistory()
    cop = FixedCop([4])
    played = list(rounds(G, GameConfig(k=1, max_rounds=2), cop, max_class_robber(), history))
    assert len(played) == 2
    first, second = history.entries
    # readings from the middle vertex pair up vertices symmetric around it
    assert first.chosen.members.tolist() in ([0, 8], [1, 7], [2, 6], [3, 5])
    assert second.domain.members.tolist() == sorted(
        {v for u in first.chosen.members.tolist() for v in (u - 1, u, u + 1) if 0 <= v < 9}
    )


def test_max_class_robber_prefers_largest_then_smallest_id():
    G = path_graph(5)
    t = play(G, GameConfig(k=1, max_rounds=1), FixedCop([2]), max_class_robber())
    # classes {2}, {1, 3}, {0, 4}: tie between the pairs goes to the smallest member
    assert t.rounds[0].class_min_id == 0


def test_illegal_cop_moves():
    G = path_graph(4)
    with pytest.raises(IllegalCopMoveError):
        play(G, GameConfig(k=2), FixedCop([0]), max_class_robber())
    with pytest.raises(IllegalCopMoveError):
        play(G, GameConfig(k=2), FixedCop([1, 1]), max_class_robber())
    with pytest.raises(IllegalCopMoveError):
        play(G, GameConfig(k=1), FixedCop([4]), max_class_robber())


def test_robber_must_pick_an_offered_class():
    G = path_graph(4)
    with pytest.raises(IllegalRobberMoveError):
        play(G, GameConfig(k=1), FixedCop([0]), OutsideRobber())


def test_empty_instance_rejected():
    G = sample_instance(ModelParams(n=0, r=1.0))
    with pytest.raises(EmptyInstanceError):
        play(G, GameConfig(k=0), FixedCop([]), max_class_robber())


def test_zero_sensors_never_win():
    G = path_graph(3)
    t = play(G, GameConfig(k=0, max_rounds=3), FixedCop([]), max_class_robber())
    assert not t.cop_won
    assert [rec.chosen_class_size for rec in t.rounds] == [3, 3, 3]


def test_single_vertex_is_won_immediately():
    G = GraphInstance.from_positions([(0.5, 0.5)], r=1.0, side=2.0)
    t = play(G, GameConfig(k=0), FixedCop([]), max_class_robber())
    assert t.cop_won and t.win_round == 1
    assert exact_zeta(G) == 0


@pytest.mark.parametrize("m", [2, 3, 4, 5, 6])
def test_exact_zeta_complete_graph(m):
    G = complete_graph(m)
    assert exact_zeta(G) == m - 1
    # m-2 sensors leave a pair forever, so three rounds settle the search
    assert game_tree_zeta(nx_graph(G), depth=3) == m - 1


@pytest.mark.parametrize("m", [2, 3, 4, 5, 6])
def test_exact_zeta_path(m):
    G = path_graph(m)
    assert exact_zeta(G) == 1
    assert game_tree_zeta(nx_graph(G)) == 1


@pytest.mark.parametrize("seed", [0, 1, 2, 3, 4, 5])
def test_exact_zeta_matches_game_tree_search(seed):
    pts = np.random.default_rng(seed).uniform(0.0, 3.0, size=(4, 2))
    G = GraphInstance.from_positions(pts, r=1.2, side=3.0)
    assert exact_zeta(G) == game_tree_zeta(nx_graph(G))


def test_triangle_survives_one_cycling_sensor():
    t = play(complete_graph(3), GameConfig(k=1, max_rounds=30), RoundRobinCop(), max_class_robber())
    assert t.outcome == "robber_survives"
    assert len(t.rounds) == 30
    assert all(rec.chosen_class_size == 2 for rec in t.rounds)


def test_triangle_falls_to_two_sensors_in_one_round():
    t = play(complete_graph(3), GameConfig(k=2), RoundRobinCop(), max_class_robber())
    assert t.cop_won and t.win_round == 1


def test_exact_zeta_refuses_large_graphs():
    with pytest.raises(InstanceTooLargeError):
        exact_zeta(path_graph(13))


def test_transcript_phases():
    G = path_graph(5)
    t = play(G, GameConfig(k=1, max_rounds=2), FixedCop([2]), max_class_robber())
    assert t.phases() == ["fixed"]
    assert t.flags == []
