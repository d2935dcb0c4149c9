# tests/test_cop_strategies.py
import math

import numpy as np
import pytest

from backend.services.cop_strategies import (
    CompositeCop,
    FloodingCop,
    ProbeTracker,
    RoundRobinCop,
    build_distinguishing_set,
    class_inside,
    crown_radius,
    delta_regime,
    family_square_for,
    family_squares,
    family_step,
    grid_probe,
    internal_square,
    pad_sensors,
    probe_needed,
    probe_square,
    probe_vertices,
    quad_sensors,
    quadrilaterate,
    shell_crown,
    snap,
    verify_distinguishing_set,
    whole_torus,
)
from backend.services.distances import UNREACHABLE, CandidateClass, hop_distances
from backend.services.errors import PreconditionViolatedError
from backend.services.game_engine import GameHistory, HistoryEntry, play
from backend.services.geometry import Point, Square
from backend.services.profiles import ConstantsProfile
from backend.services.rgg_model import GraphInstance, nearest_vertex, vertices_in
from backend.services.robber_strategies import max_class_robber
from database.models.transcript import GameConfig

from tests.builders import path_graph, random_instance

DESK = ConstantsProfile.desk()
PAPER = ConstantsProfile.paper()


def test_pad_sensors_dedupes_and_tops_up():
    G = path_graph(6)
    assert pad_sensors(G, [3, 3, 1], 4) == (3, 1, 0, 2)
    assert pad_sensors(G, [5, 4, 3], 2) == (5, 4)
    assert pad_sensors(G, [], 0) == ()


def test_snap_flags_far_targets():
    G = GraphInstance.from_positions([(1.0, 1.0), (50.0, 50.0)], r=1.0, side=100.0)
    v, flags = snap(G, Point(1.2, 1.0), DESK)
    assert v == 0 and not flags
    v, flags = snap(G, Point(25.0, 25.0), DESK)
    assert flags and flags[0].startswith("snap-distance")


def test_probe_vertices_are_distinct(medium_instance):
    vs, _ = probe_vertices(medium_instance, DESK)
    assert len(vs) == len(set(vs))
    assert len(vs) <= DESK.grid_divisions ** 2


def test_probe_needed_only_for_small_radius():
    assert not probe_needed(path_graph(5), DESK)
    G = GraphInstance.from_positions([(1.0, 1.0)], r=1.0, side=100.0)
    assert probe_needed(G, DESK)


def test_search_square_has_a_fixed_side():
    G = GraphInstance.from_positions([(50.0, 50.0), (10.0, 10.0)], r=2.0, side=200.0)
    sq = probe_square(G, DESK, 0, 10)
    assert sq.side == pytest.approx(DESK.probe_square_fraction * 200.0)
    assert (sq.center.x, sq.center.y) == (50.0, 50.0)
    assert probe_square(G, DESK, 0, 40).side == sq.side
    assert probe_square(G, DESK, 0, UNREACHABLE).side == G.side
    assert probe_square(G, DESK, None, UNREACHABLE).side == G.side


def test_probe_tracker_keeps_the_smallest_probed_reading():
    t = ProbeTracker()
    t.update([1, 2, 3, 4], [5, 3, 7, 1], 1, probed=[1, 2, 3])
    assert (t.best_vertex, t.best_reading, t.best_round) == (2, 3, 1)
    t.update([5, 6], [3, 2], 2, probed=[5, 6])
    assert (t.best_vertex, t.best_reading, t.best_round) == (6, 2, 2)


def test_grid_search_reports_containment():
    G = random_instance(10_000, 4.0, seed=21)
    assert probe_needed(G, DESK)
    result = grid_probe(G, DESK, max_class_robber(), k=4, seed=0)
    assert result.rounds == math.ceil(len(probe_vertices(G, DESK)[0]) / 4)
    assert result.square.side == pytest.approx(DESK.probe_square_fraction * G.side)
    assert result.square.center == G.point(result.best_vertex)
    assert result.contained == class_inside(G, result.square, result.final_class)


def _readings_for(G, square, x):
    """Corner readings whose crowns have x well inside them."""
    out = []
    for corner in square.corners(scale=3.0):
        target = math.hypot(corner.x - x.x, corner.y - x.y) - square.side / 12.0
        d = 1
        while crown_radius(G, d, square.side) < target:
            d += 1
        out.append(d)
    return out


def test_quadrilaterate_shrinks_around_the_robber():
    square = Square(Point(500.0, 500.0), 60.0)
    x = Point(505.0, 497.0)
    corners = [(c.x, c.y) for c in square.corners(scale=3.0)]
    G = GraphInstance.from_positions(corners + [(x.x, x.y)], r=1.0, side=1000.0)
    readings = _readings_for(G, square, x)
    result = quadrilaterate(G, square, [0, 1, 2, 3], readings, PAPER)
    assert result.square.side == pytest.approx(60.0 / PAPER.shrink_factor)
    assert result.square.angle == pytest.approx(math.pi / 4.0)
    assert result.square.contains(x.as_array()[None, :])[0]
    for strip in result.strips:
        assert strip.contains(x.as_array()[None, :], tol=1e-6)[0]
        assert strip.width <= 0.242 * square.side


def test_quadrilaterate_needs_reachable_corners():
    G = path_graph(5)
    with pytest.raises(PreconditionViolatedError):
        quadrilaterate(G, Square(Point(2.0, 1.0), 1.0), [0, 1, 2, 3], [1, UNREACHABLE, 2, 2], DESK)


def test_shell_crown_spans_the_hop_shell():
    G = path_graph(6)
    crown = shell_crown(G, 0, 3)
    assert crown.r_inner == pytest.approx(2.7)
    assert crown.r_outer == pytest.approx(2.7)
    assert shell_crown(G, 2, 0).r_outer == 0.0


def test_quadrilaterate_on_a_desk_instance():
    G = random_instance(20_000, 3.0, seed=7)
    s = G.side * DESK.probe_square_fraction
    square = Square(Point(G.side / 2.0, G.side / 2.0), s)
    x, _ = nearest_vertex(G, square.center)
    sensors, _ = quad_sensors(G, square, DESK)
    readings = [int(hop_distances(G, v)[x]) for v in sensors]
    result = quadrilaterate(G, square, sensors, readings, DESK)
    assert result.square.side == pytest.approx(s / DESK.shrink_factor)
    for crown in result.crowns:
        assert crown.contains(G.positions[x][None, :], box=G.box)[0]
    unwrapped = square.center.as_array() + G.box.delta(square.center.as_array(), G.positions[x][None, :])
    for strip in result.strips:
        assert strip.contains(unwrapped, tol=1e-6)[0]


def test_delta_regime_bands():
    n = 10**6
    log_n = math.log(n)
    delta, budget = delta_regime(100.0, n)
    assert delta == pytest.approx(100.0 ** (-2.0 / 3.0))
    assert budget == pytest.approx(1e15 * 100.0 ** (4.0 / 3.0))
    delta, budget = delta_regime(20.0, n)
    assert delta == 1.0
    assert budget == pytest.approx(2e10 * 400.0)
    assert log_n ** 1.5 < 100.0


def test_family_squares_tile_with_overlap():
    G = GraphInstance.from_positions([(1.0, 1.0)], r=1.0, side=1000.0)
    squares = family_squares(G, DESK)
    assert len(squares) == 100 * 100
    assert all(sq.side == pytest.approx(100.0) for sq in squares[:5])
    tiny = family_squares(path_graph(4), DESK)
    assert len(tiny) == 1 and tiny[0].side == path_graph(4).side


def test_family_square_for_fits_a_cluster():
    pts = [(300.0 + i, 400.0 + (i % 3)) for i in range(10)] + [(900.0, 900.0)]
    G = GraphInstance.from_positions(pts, r=1.0, side=1000.0)
    members = np.arange(10)
    square, fits = family_square_for(G, members, DESK)
    assert fits
    assert internal_square(G, square).contains(G.positions[members], box=G.box).all()
    _, fits = family_square_for(G, np.array([0, 10]), DESK)
    assert not fits


def test_family_square_for_lies_on_the_family_grid():
    pts = [(300.0 + i, 400.0 + (i % 3)) for i in range(10)] + [(900.0, 900.0)]
    G = GraphInstance.from_positions(pts, r=1.0, side=1000.0)
    profile = DESK.model_copy(update={"family_square_coef": 70.0})
    # 1000 is not a multiple of the nominal step 7
    assert family_step(G, profile) == pytest.approx(1000.0 / 143)
    square, fits = family_square_for(G, np.arange(10), profile)
    assert fits
    centers = np.array([[sq.center.x, sq.center.y] for sq in family_squares(G, profile)])
    assert G.box.distances(square.center.as_array(), centers).min() < 1e-9


def test_distinguishing_set_is_verified(small_instance):
    G = small_instance
    square = Square(Point(G.side / 2, G.side / 2), 8.0)
    ds = build_distinguishing_set(G, square, 0.3, seed=1)
    assert ds.verified
    assert verify_distinguishing_set(G, ds)
    assert np.isin(ds.X, vertices_in(G, square)).all()
    assert np.array_equal(ds.W, np.union1d(ds.X, ds.Y))
    cert = ds.to_certificate()
    assert cert.W == ds.W.tolist() and cert.targets == ds.targets.size


def test_distinguishing_set_without_sample_is_all_targets(small_instance):
    G = small_instance
    ds = build_distinguishing_set(G, whole_torus(G), 0.0, seed=0, candidates=np.array([4, 9, 2]))
    assert ds.X.size == 0
    assert ds.W.tolist() == [2, 4, 9]
    assert verify_distinguishing_set(G, ds)


def test_unpatched_sample_fails_verification():
    G = path_graph(6)
    # only the middle vertex 2 is sampled; 1 and 3 both read 1 from it
    around_two = Square(G.point(2), 0.5)
    ds = build_distinguishing_set(G, around_two, 1.0, seed=0, candidates=np.array([1, 3]), patch=False)
    assert ds.W.tolist() == [2]
    assert not ds.verified
    assert not verify_distinguishing_set(G, ds)
    patched = build_distinguishing_set(G, around_two, 1.0, seed=0, candidates=np.array([1, 3]))
    assert patched.W.tolist() == [1, 2, 3]
    assert patched.verified and verify_distinguishing_set(G, patched)


def test_empty_sample_without_patch_is_unverified(small_instance):
    G = small_instance
    ds = build_distinguishing_set(G, whole_torus(G), 0.0, seed=0, candidates=np.array([4, 9, 2]), patch=False)
    assert ds.W.size == 0
    assert not ds.verified
    assert not verify_distinguishing_set(G, ds)


def test_distinguishing_set_rejects_bad_delta(small_instance):
    with pytest.raises(ValueError):
        build_distinguishing_set(small_instance, whole_torus(small_instance), 1.5, seed=0)


def test_composite_with_all_sensors_wins_in_one_round(small_instance):
    G = small_instance
    t = play(G, GameConfig(k=G.n), CompositeCop(DESK), max_class_robber())
    assert t.cop_won and t.win_round == 1
    assert t.phases() == ["endgame"]
    assert t.required_k is not None and t.required_k <= G.n


def test_composite_on_path_wins_with_one_sensor():
    t = play(path_graph(8), GameConfig(k=1), CompositeCop(DESK), max_class_robber())
    assert t.cop_won


def test_composite_phases_run_in_order():
    G = random_instance(10_000, 2.5, seed=2)
    profile = DESK.model_copy(update={"loc_square_coef": 6.0})
    # probe square side 20 lies in (6r, L/5], and one shrink brings it below 6r
    assert probe_needed(G, profile)
    probe_rounds = math.ceil(len(probe_vertices(G, profile)[0]) / 4)
    cop = CompositeCop(profile)
    t = play(G, GameConfig(k=4, max_rounds=probe_rounds + 3), cop, max_class_robber())
    assert t.phases() == ["probe", "quadrilaterate", "endgame"]
    assert [rec.phase for rec in t.rounds].count("quadrilaterate") == 1
    assert cop.quad_results or any("abandoned" in f for f in t.flags)
    for result, cls in cop.quad_results:
        assert result.square.side == pytest.approx(profile.probe_square_fraction * G.side / 4.0)
        for crown in result.crowns:
            assert crown.contains(G.positions[cls.members], box=G.box).all()


def test_composite_goes_to_endgame_below_four_sensors():
    G = random_instance(10_000, 2.5, seed=2)
    assert probe_needed(G, DESK)
    t = play(G, GameConfig(k=2, max_rounds=2), CompositeCop(DESK), max_class_robber())
    assert t.phases() == ["endgame"]
    assert "k=2 < 4: quadrilateration skipped" in t.flags


def test_composite_flags_a_leak_and_keeps_the_square():
    G = GraphInstance.from_positions([(10.0, 10.0), (90.0, 90.0), (91.0, 90.0)], r=1.0, side=100.0)
    cls = CandidateClass([1, 2])
    history = GameHistory([HistoryEntry(sensors=(0,), domain=cls, partition=[cls], chosen=cls)])
    cop = CompositeCop(DESK)
    cop._tracker.update([0], [3], 1, probed=[0])
    flags = cop._finish_probe(G, history)
    assert flags and flags[0].startswith("probe-leak")
    assert cop.square == Square(G.point(0), DESK.probe_square_fraction * 100.0)
    assert cop.leaks == 1
    assert cop.phase == "quadrilaterate"
    assert not cop._can_quadrilaterate(G, GameConfig(k=4))


def test_composite_flags_chunked_endgame():
    G = random_instance(200, 2.0, seed=4)
    t = play(G, GameConfig(k=2, max_rounds=5), CompositeCop(DESK), max_class_robber())
    assert any(f.startswith("endgame-chunked") for f in t.flags)


def test_flooding_cop_rotates_through_the_pool():
    G = path_graph(9)
    cop = FloodingCop([5, 6, 7])
    cfg = GameConfig(k=2)
    moves = [cop.next_move(G, cfg, GameHistory()).sensors for _ in range(3)]
    assert moves == [(5, 6), (7, 5), (6, 7)]


def test_round_robin_cycles_subsets():
    G = path_graph(3)
    cop = RoundRobinCop()
    cfg = GameConfig(k=2)
    moves = [cop.next_move(G, cfg, GameHistory()).sensors for _ in range(4)]
    assert moves == [(0, 1), (0, 2), (1, 2), (0, 1)]


@pytest.mark.slow
@pytest.mark.parametrize("regime", ["large-r", "middle-r", "small-r"])
def test_distinguishing_sets_on_desk_instances(regime):
    n, r = 100_000, 12.0
    delta = {
        "large-r": r ** (-2.0 / 3.0),
        "middle-r": math.log(n) ** 2 / r ** 2,
        "small-r": 1.0,
    }[regime]
    for seed in range(20):
        G = random_instance(n, r, seed=seed)
        square = Square(Point(G.side / 2.0, G.side / 2.0), 3.0 * r)
        ds = build_distinguishing_set(G, square, delta, seed=seed)
        assert ds.targets.size > 1
        assert ds.verified
        assert verify_distinguishing_set(G, ds)
