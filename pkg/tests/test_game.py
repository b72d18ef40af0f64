import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from conftest import load_fixture, zero_sum
from efgdom import oracle
from efgdom.game import (InvalidProfileError, build, chance, check_perfect_recall, decision,
                         expected_utility, has_perfect_recall, leaf, pure_profile,
                         uniform_profile, validate)


def test_single_leaf_is_valid():
    g = build(["P1", "P2"], leaf(0, 0))
    assert not validate(g)
    assert len(g.nodes) == 1 and len(g.infosets) == 0


def test_probability_sum_violation():
    g = build(["P1", "P2"], chance([("x", 0.6, leaf(0, 0)), ("y", 0.5, leaf(1, 1))]))
    assert validate(g).violations == ["node 0: probabilities sum 1.1"]


def test_action_count_mismatch():
    i = lambda *acts: decision(0, "i", [(a, leaf(0, 0)) for a in acts])
    g = build(["P1", "P2"], chance([("x", 0.5, i("a", "b")), ("y", 0.5, i("a", "b", "c"))]))
    assert validate(g).violations == ["info set 0: action-count mismatch"]


def test_wrong_utility_count():
    g = build(["P1", "P2"], decision(0, "r", [("a", leaf(1, 2)), ("b", leaf(1))]))
    assert len(validate(g)) == 1


def test_negative_probability():
    g = build(["P1", "P2"], chance([("x", 1.5, leaf(0, 0)), ("y", -0.5, leaf(1, 1))]))
    assert validate(g)


def test_perfect_recall_single_node():
    g = build(["P1", "P2"], decision(0, "r", [("a", leaf(1, -1)), ("b", leaf(0, 0))]))
    assert not check_perfect_recall(g, 0)
    assert has_perfect_recall(g)


def test_forgetting_own_action_is_reported():
    g = build(["P1", "P2"], decision(0, "r", [
        ("a", decision(0, "i", [("x", leaf(0, 0))], info_name="later")),
        ("b", decision(0, "i", [("x", leaf(1, 0))], info_name="later"))]))
    report = check_perfect_recall(g, 0)
    assert list(report.violations) == [1]
    assert not has_perfect_recall(g)
    assert not check_perfect_recall(g, 1)


def test_expected_utility_single_leaf():
    g = build(["P1", "P2"], leaf(3, -3))
    assert expected_utility(g, {}).tolist() == [3, -3]


@pytest.mark.parametrize("action, value", [(0, 0.0), (1, -50.0)])
def test_expected_utility_reduced_leaf_game(action, value):
    # 0.5 (-100) + 0.5 (100) = 0 and 0.5 (-50) + 0.5 (-50) = -50
    g = load_fixture("leaf_dominance_reduced")
    p1 = g.infoset_by_name(0, "P1").id
    u = expected_utility(g, pure_profile(g, {p1: action}))
    assert u[0] == pytest.approx(value, abs=1e-12)


def test_invalid_profile():
    g = build(["P1", "P2"], decision(0, "r", [("a", leaf(1, -1)), ("b", leaf(0, 0))]))
    with pytest.raises(InvalidProfileError):
        expected_utility(g, {0: [0.5, 0.6]})
    with pytest.raises(InvalidProfileError):
        expected_utility(g, {})


def test_tree_helpers():
    g = load_fixture("leaf_dominance")
    assert g.is_zero_sum()
    reach = g.chance_reach
    assert reach[0] == 1.0
    # one chance node with two equally likely branches above every leaf
    assert all(reach[n] == pytest.approx(0.5) for n in g.leaves)
    for n in g.leaves:
        path = g.path(n)
        assert path[0][0] == g.root
        assert g.nodes[path[-1][0]].children[path[-1][1]] == n


def _random_profile(game, rng):
    prof = {}
    for I in game.infosets:
        w = rng.random(len(I.actions))
        prof[I.id] = list(w / w.sum())
    return prof


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 10_000))
def test_multilinearity(seed, pseed):
    g = oracle.random_game(seed)
    assume(len(g.infosets) > 0)
    rng = np.random.default_rng(pseed)
    prof = _random_profile(g, rng)
    I = g.infosets[rng.integers(len(g.infosets))]
    dist = prof[I.id]
    pure_values = []
    for a in range(len(I.actions)):
        pure = dict(prof)
        pure[I.id] = [1.0 if b == a else 0.0 for b in range(len(I.actions))]
        pure_values.append(expected_utility(g, pure))
    mixed = expected_utility(g, prof)
    combo = sum(p * v for p, v in zip(dist, pure_values))
    assert np.allclose(mixed, combo, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 10_000))
def test_zero_sum_utilities_sum_to_zero(seed, pseed):
    g = zero_sum(oracle.random_game(seed))
    assert g.is_zero_sum(1e-12)
    u = expected_utility(g, _random_profile(g, np.random.default_rng(pseed)))
    assert abs(u.sum()) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_random_games_are_valid(seed):
    g = oracle.random_game(seed, num_players=3)
    assert not validate(g)
    assert has_perfect_recall(g)
    assert expected_utility(g, uniform_profile(g)).shape == (3,)
