import json

import pytest
from hypothesis import given, settings, strategies as st

from conftest import load_fixture, zero_sum
from efgdom import oracle, reducer, seqform
from efgdom.game import build, decision, has_perfect_recall, leaf, structurally_equal, validate


def test_remove_one_of_two_actions():
    g = build(["P1", "P2"], decision(0, "I", [("a", leaf(1, -1)), ("b", leaf(2, -2))]))
    h = reducer.remove_action(g, 0, 0, 0)
    assert h.infosets[0].actions == ("b",)
    assert h.nodes[h.nodes[0].children[0]].utilities == (2.0, -2.0)


def test_refuses_last_action():
    g = build(["P1", "P2"], decision(0, "I", [("a", leaf(1, -1))]))
    with pytest.raises(reducer.RemovalError):
        reducer.remove_action(g, 0, 0, 0)
    g2 = build(["P1", "P2"], decision(0, "I", [("a", leaf(1, -1)), ("b", leaf(2, -2))]))
    with pytest.raises(reducer.RemovalError):
        reducer.remove_actions(g2, [(0, 0), (0, 1)])


def test_wrong_player():
    g = build(["P1", "P2"], decision(0, "I", [("a", leaf(1, -1)), ("b", leaf(2, -2))]))
    with pytest.raises(reducer.RemovalError):
        reducer.remove_action(g, 1, 0, 0)


def test_leaf_game_strong_removals_give_reduced_fixture():
    g = load_fixture("leaf_dominance")
    top, bottom = g.infoset_by_name(1, "top"), g.infoset_by_name(1, "bottom")
    h = reducer.remove_actions(g, [(top.id, top.actions.index("2")),
                                   (bottom.id, bottom.actions.index("1"))])
    assert structurally_equal(h, load_fixture("leaf_dominance_reduced"))


def test_removing_subtree_drops_infosets():
    g = load_fixture("early_exit")
    p1 = g.infosets_of(0)[0]
    h = reducer.remove_action(g, 0, p1.id, p1.actions.index("1"))
    assert len(h.infosets_of(1)) == 0
    assert not validate(h)


def test_leaf_game_reduction():
    g = load_fixture("leaf_dominance")
    h, log = reducer.reduce_iteratively(g)
    assert log.terminated == reducer.FULLY_SOLVED
    assert all(len(I.actions) == 1 for I in h.infosets)
    assert seqform.solve_zero_sum(h).value == pytest.approx(seqform.solve_zero_sum(g).value, abs=1e-6)


def test_max_rounds():
    g = load_fixture("leaf_dominance")
    _, log = reducer.reduce_iteratively(g, reducer.ReduceConfig(max_rounds=1))
    assert len(log.rounds) == 1
    assert log.terminated in (reducer.MAX_ROUNDS, reducer.FULLY_SOLVED)


def test_config_validation():
    with pytest.raises(ValueError):
        reducer.ReduceConfig(max_rounds=0)
    with pytest.raises(ValueError):
        reducer.ReduceConfig(mode="strong")
    with pytest.raises(ValueError):
        reducer.ReduceConfig(schedule="sometimes")


def test_weak_mode_on_weak_tie():
    g = load_fixture("weak_tie")
    h, log = reducer.reduce_iteratively(g, reducer.ReduceConfig(mode="weak"))
    removed = [(r.infoset, r.action) for rnd in log.rounds for r in rnd.removals]
    assert any(a == "c" for _, a in removed)
    _, strict_log = reducer.reduce_iteratively(
        g, reducer.ReduceConfig(strong_scan_first=False))
    assert all(r.action != "c" for rnd in strict_log.rounds for r in rnd.removals)


def test_log_json_round_trip():
    g = load_fixture("leaf_dominance")
    _, log = reducer.reduce_iteratively(g)
    doc = json.loads(log.to_json())
    assert doc["rounds"][0]["counts"] == [len([r for r in doc["rounds"][0]["removals"] if r["player"] == p])
                                          for p in range(2)]
    again = reducer.ReductionLog.from_dict(doc)
    assert again.to_dict() == log.to_dict()
    with pytest.raises(ValueError):
        reducer.ReductionLog.from_dict({"rounds": [{}]})


def test_depth_order():
    g = load_fixture("leaf_dominance")
    order = reducer.traversal_order(g, [0, 1])
    depths = [g.infoset_depth(i) for i in order]
    assert depths == sorted(depths, reverse=True)


def test_parallel_checks_match_serial():
    g = load_fixture("leaf_dominance")
    a = reducer.reduce_iteratively(g, reducer.ReduceConfig(jobs=1))[1]
    b = reducer.reduce_iteratively(g, reducer.ReduceConfig(jobs=2))[1]
    assert a.to_dict() == b.to_dict()


def _log_invariants(game, log):
    seen = set()
    for rnd in log.rounds:
        counts = rnd.counts(game.num_players)
        for p in range(game.num_players):
            assert counts[p] == sum(r.player == p for r in rnd.removals)
        for r in rnd.removals:
            key = (r.player, r.infoset, r.action)
            assert key not in seen
            seen.add(key)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 100_000), st.sampled_from([reducer.PER_PLAYER, reducer.SIMULTANEOUS]))
def test_reduction_properties(seed, schedule):
    g = zero_sum(oracle.random_game(seed))
    cfg = reducer.ReduceConfig(schedule=schedule)
    h, log = reducer.reduce_iteratively(g, cfg)
    assert not validate(h) and has_perfect_recall(h)
    _log_invariants(g, log)
    # every round but the last removes something
    assert all(r.removals for r in log.rounds[:-1])
    assert seqform.solve_zero_sum(h).value == pytest.approx(seqform.solve_zero_sum(g).value, abs=1e-6)
    h2, log2 = reducer.reduce_iteratively(h, cfg)
    assert sum(len(r.removals) for r in log2.rounds) == 0
    assert reducer.reduce_iteratively(g, cfg)[1].to_dict() == log.to_dict()


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 100_000))
def test_general_sum_reduction_is_valid(seed):
    g = oracle.random_game(seed, num_players=3)
    h, log = reducer.reduce_iteratively(g)
    assert not validate(h)
    _log_invariants(g, log)
