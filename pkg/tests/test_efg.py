import json

import pytest
from hypothesis import given, settings, strategies as st

from conftest import FIXTURES, load_fixture
from efgdom import efg, oracle, seqform
from efgdom.game import build, leaf, structurally_equal, validate

HEADER = 'EFG 2 R "g" { "P1" "P2" }\n'


def test_single_leaf_parse():
    g = efg.parse_efg(HEADER + 't "" 1 "" { 3, -3 }\n')
    assert len(g.nodes) == 1
    assert g.nodes[0].utilities == (3.0, -3.0)
    assert list(g.players) == ["P1", "P2"]


def test_single_leaf_writes_two_lines():
    text = efg.write_efg(build(["P1", "P2"], leaf(3, -3)))
    assert text.splitlines() == ['EFG 2 R "" { "P1" "P2" }', 't "" 1 "" { 3, -3 }']


def test_bad_probabilities_parse_but_fail_validation():
    text = HEADER + ('c "" 1 "" { "a" 0.5 "b" 0.6 } 0\n'
                     't "" 1 "" { 1, -1 }\n'
                     't "" 2 "" { 0, 0 }\n')
    g = efg.parse_efg(text)
    assert len(validate(g)) == 1


def test_rational_probabilities():
    text = HEADER + ('c "" 1 "" { "a" 1/3 "b" 2/3 } 0\n'
                     't "" 1 "" { 1, -1 }\n'
                     't "" 2 "" { 0, 0 }\n')
    g = efg.parse_efg(text)
    assert g.nodes[0].probs == (1 / 3, 2 / 3)
    assert "1/3" in efg.write_efg(g)


def test_leaf_dominance_fixture_shape():
    g = load_fixture("leaf_dominance")
    assert sum(n.is_chance for n in g.nodes) == 1
    p1 = g.infosets_of(0)
    assert len(p1) == 1 and len(p1[0].members) == 2
    assert sorted(I.name for I in g.infosets_of(1)) == ["bottom", "top"]


def test_lex_error_reports_position():
    with pytest.raises(efg.EfgLexError) as info:
        efg.parse_efg(HEADER + 't "" 1 "" { 3, -3 } @\n')
    assert info.value.line == 2


def test_arity_mismatch():
    text = HEADER + 'p "" 1 1 "" { "a" "b" } 0\nt "" 1 "" { 1, -1 }\n'
    with pytest.raises(efg.EfgError):
        efg.parse_efg(text)


def test_infoset_conflict():
    text = HEADER + ('c "" 1 "" { "x" 1/2 "y" 1/2 } 0\n'
                     'p "" 1 1 "" { "a" "b" } 0\n'
                     't "" 1 "" { 1, -1 }\n'
                     't "" 2 "" { 0, 0 }\n'
                     'p "" 1 1 "" { "a" "c" } 0\n'
                     't "" 3 "" { 1, -1 }\n'
                     't "" 4 "" { 0, 0 }\n')
    with pytest.raises(efg.EfgInfoSetConflict):
        efg.parse_efg(text)


def test_unsupported_revision():
    with pytest.raises(efg.EfgVersionError):
        efg.parse_efg('EFG 1 R "g" { "P1" "P2" }\nt "" 1 "" { 3, -3 }\n')


def test_same_infoset_numbers_merge():
    g = load_fixture("leaf_dominance")
    assert len(g.infosets_of(0)[0].members) == 2


@pytest.mark.parametrize("name", oracle.FIXTURE_NAMES)
def test_fixture_round_trip(name):
    g = load_fixture(name)
    text = efg.write_efg(g)
    again = efg.parse_efg(text)
    assert structurally_equal(g, again)
    assert efg.write_efg(again) == text


@pytest.mark.parametrize("name", oracle.FIXTURE_NAMES)
def test_fixture_json_round_trip(name):
    g = load_fixture(name)
    doc = json.loads(json.dumps(efg.to_json(g)))
    assert structurally_equal(g, efg.from_json(doc))


def test_single_leaf_json():
    doc = efg.to_json(build(["P1", "P2"], leaf(3, -3)))
    assert len(doc["nodes"]) == 1


def test_json_missing_child():
    g = load_fixture("early_exit")
    doc = efg.to_json(g)
    parent = next(n for n in doc["nodes"] if n.get("children"))
    parent["children"][0] = 999
    with pytest.raises(efg.GameSchemaError):
        efg.from_json(doc)


def test_writer_is_deterministic():
    for path in sorted(FIXTURES.glob("*.efg")):
        a = efg.write_efg(efg.read_efg(path))
        b = efg.write_efg(efg.read_efg(path))
        assert a == b


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 100_000), st.sampled_from([2, 3]))
def test_random_round_trip(seed, players):
    g = oracle.random_game(seed, num_players=players)
    again = efg.parse_efg(efg.write_efg(g))
    assert structurally_equal(g, again)
    # bit-for-bit payoffs and probabilities
    assert [n.utilities for n in g.nodes] == [n.utilities for n in again.nodes]
    assert [n.probs for n in g.nodes] == [n.probs for n in again.nodes]
    assert structurally_equal(g, efg.from_json(efg.to_json(g)))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_round_trip_preserves_sequence_form(seed):
    g = oracle.random_game(seed)
    a = seqform.build_sequence_form(g)
    b = seqform.build_sequence_form(efg.parse_efg(efg.write_efg(g)))
    assert (a.A != b.A).nnz == 0 and (a.B != b.B).nnz == 0
