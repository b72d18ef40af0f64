import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import load_fixture, zero_sum
from efgdom import oracle, seqform
from efgdom.game import build, chance, decision, expected_utility, leaf, relabel_players


def dense(M):
    return np.asarray(M.todense() if hasattr(M, "todense") else M)


def one_decision(u_a=1.0, u_b=5.0):
    return build(["P1", "P2"], decision(0, "I", [("c", leaf(u_a, -u_a)), ("d", leaf(u_b, -u_b))]))


def plan(seqs, profile):
    """Realization plan induced by a behavioral profile."""
    x = np.zeros(seqs.d)
    x[0] = 1.0
    for k in range(1, seqs.d):
        parent, infoset, _ = seqs.sequences[k]
        a = next(a for (i, a), j in seqs.index.items() if j == k)
        x[k] = x[parent] * profile[infoset][a]
    return x


def random_profile(game, rng):
    out = {}
    for I in game.infosets:
        w = rng.random(len(I.actions))
        out[I.id] = w / w.sum()
    return out


def test_player_who_never_moves():
    g = build(["P1", "P2"], leaf(3, -3))
    s = seqform.build_sequences(g, 0)
    assert s.d == 1
    E, e = seqform.build_constraints(g, 0)
    assert dense(E).tolist() == [[1]] and list(e) == [1]
    assert dense(seqform.build_payoffs(g, 0)).tolist() == [[3]]


def test_one_infoset_two_actions():
    g = one_decision()
    assert seqform.build_sequences(g, 0).d == 3
    E, e = seqform.build_constraints(g, 0)
    assert dense(E).tolist() == [[1, 0, 0], [-1, 1, 1]]
    assert list(e) == [1, 0]


def test_chance_only_payoff():
    g = build(["P1", "P2"], chance([("x", 0.5, leaf(4, 0)), ("y", 0.5, leaf(-2, 0))]))
    assert dense(seqform.build_payoffs(g, 0)).tolist() == [[1.0]]


def test_imperfect_recall_rejected():
    g = build(["P1", "P2"], decision(0, "r", [
        ("a", decision(0, "i", [("x", leaf(0, 0)), ("y", leaf(1, 0))])),
        ("b", decision(0, "i", [("x", leaf(1, 0)), ("y", leaf(0, 0))]))]))
    with pytest.raises(seqform.ImperfectRecallError):
        seqform.build_sequences(g, 0)


def test_root_infoset_reach_sets():
    g = load_fixture("early_exit")
    I = g.infosets_of(0)[0]
    r = seqform.reach_sets(g, 0, I.id, 0)
    assert r.own == ()
    assert r.target == seqform.build_sequences(g, 0).index[(I.id, 0)]


def test_branch_away_sequences():
    g = load_fixture("early_exit")
    p1 = g.infosets_of(0)[0]
    p2 = g.infosets_of(1)[0]
    r = seqform.reach_sets(g, 1, p2.id, 0)
    s1 = seqform.build_sequences(g, 0)
    assert r.zero_of(0) == (s1.index[(p1.id, p1.actions.index("2"))],)


def test_merge_two_players_is_identity():
    g = load_fixture("leaf_dominance")
    m = seqform.merge_opponents(g, 0)
    assert [n.utilities for n in m.nodes] == [n.utilities for n in g.nodes]
    assert [(n.player, n.infoset) for n in m.nodes] == [(n.player, n.infoset) for n in g.nodes]


def test_merge_three_players():
    g = build(["A", "B", "C"], decision(1, "b", [
        ("x", decision(2, "c", [("y", decision(0, "a", [("p", leaf(1, 2, 3)), ("q", leaf(0, 0, 0))])),
                                ("z", leaf(4, 5, 6))])),
        ("w", leaf(7, 8, 9))]))
    m = seqform.merge_opponents(g, 0)
    assert m.num_players == 2
    assert len(m.infosets_of(1)) == 2
    assert all(n.utilities[1] == 0 for n in m.nodes if n.is_leaf)
    assert [n.utilities[0] for n in m.nodes if n.is_leaf] == [1, 0, 4, 7]


def test_merged_agent_only_protagonist_moves():
    g = one_decision()
    m = seqform.build_merged_single_agent(g, 0)
    E, _ = seqform.build_constraints(g, 0)
    assert m.seqs.d == 3
    assert np.array_equal(dense(m.E), dense(E))
    assert np.allclose(np.asarray(m.a).ravel(), dense(seqform.build_payoffs(g, 0)).ravel())


def test_merged_agent_early_exit():
    g = load_fixture("early_exit")
    m = seqform.build_merged_single_agent(g, 0)
    assert m.seqs.d == 5
    assert not m.warning


def test_zero_sum_values():
    assert seqform.solve_zero_sum(build(["P1", "P2"], leaf(3, -3))).value == pytest.approx(3)
    assert seqform.solve_zero_sum(load_fixture("matching_pennies")).value == pytest.approx(0, abs=1e-9)


def test_solution_satisfies_flow():
    g = load_fixture("leaf_dominance")
    sol = seqform.solve_zero_sum(g)
    for p, x in ((0, sol.x), (1, sol.y)):
        E, e = seqform.build_constraints(g, p)
        assert np.allclose(dense(E) @ x, e, atol=1e-8)
        assert (x >= -1e-9).all()


def test_dense_switch():
    g = one_decision()
    E, _ = seqform.build_constraints(g, 0)
    assert isinstance(E, np.ndarray)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000), st.integers(0, 100_000))
def test_realization_plans_and_utility(seed, pseed):
    g = oracle.random_game(seed)
    rng = np.random.default_rng(pseed)
    prof = random_profile(g, rng)
    sf = seqform.build_sequence_form(g)
    x = plan(sf.seqs[0], prof)
    y = plan(sf.seqs[1], prof)
    # flow: each sequence's weight splits over its extensions at every info set
    assert np.allclose(dense(sf.E) @ x, sf.e, atol=1e-12)
    assert np.allclose(dense(sf.F) @ y, sf.f, atol=1e-12)
    u = expected_utility(g, prof)
    assert x @ (sf.A @ y) == pytest.approx(u[0], abs=1e-9)
    assert x @ (sf.B @ y) == pytest.approx(u[1], abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_sequence_index_invariants(seed):
    g = oracle.random_game(seed)
    for p in range(2):
        s = seqform.build_sequences(g, p)
        assert all(s.sequences[k][0] < k for k in range(1, s.d))
        assert s.d == 1 + sum(len(I.actions) for I in g.infosets_of(p))
        E, e = seqform.build_constraints(g, p)
        E = dense(E)
        assert E.shape == (s.c, s.d)
        assert E[0].tolist() == [1] + [0] * (s.d - 1)
        for row in E[1:]:
            assert (row == -1).sum() == 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_zero_sum_properties(seed):
    g = zero_sum(oracle.random_game(seed))
    sf = seqform.build_sequence_form(g)
    assert abs(sf.A + sf.B).max() <= 1e-12
    v = seqform.solve_zero_sum(g).value
    swapped = _swap_players(g)
    assert seqform.solve_zero_sum(swapped).value == pytest.approx(-v, abs=1e-8)


def _swap_players(g):
    import dataclasses
    from efgdom.game import from_arena
    nodes = []
    for n in g.nodes:
        if n.is_leaf:
            n = dataclasses.replace(n, utilities=tuple(reversed(n.utilities)), payoff_text=None)
        elif n.is_decision:
            n = dataclasses.replace(n, player=1 - n.player)
        nodes.append(n)
    return relabel_players(from_arena(g.players, nodes), reversed(g.players))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_reach_set_invariants(seed):
    g = oracle.random_game(seed)
    for I in g.infosets:
        s = {p: seqform.build_sequences(g, p) for p in range(2)}
        r = seqform.reach_sets(g, I.player, I.id, 0, s)
        own = s[I.player]
        # own path is a prefix chain ending at the leading sequence
        chain, k = [], own.leading[I.id]
        while k:
            chain.append(k)
            k = own.sequences[k][0]
        assert r.own == tuple(sorted(chain))
        opp = 1 - I.player
        reaching = {int(s[opp].node_seq[m]) for m in I.members}
        prefixes = set()
        for k in reaching:
            while k:
                prefixes.add(k)
                k = s[opp].sequences[k][0]
        assert not prefixes & set(r.zero_of(opp))
