import dataclasses
import functools
import json
import os
from pathlib import Path

import pytest

from efgdom import efg, oracle
from efgdom.game import LEAF, from_arena
from efgdom.poker import aof, equity

FIXTURES = oracle.FIXTURE_DIR


def load_fixture(name):
    return efg.read_efg(FIXTURES / f"{name}.efg")


def zero_sum(game):
    """Copy of a two-player game with player 2's payoffs replaced by -u1."""
    nodes = []
    for node in game.nodes:
        if node.kind == LEAF:
            u = node.utilities[0]
            node = dataclasses.replace(node, utilities=(u, -u), payoff_text=None)
        nodes.append(node)
    return from_arena(game.players, nodes, game.title)


@functools.lru_cache(maxsize=None)
def equity_table():
    path = os.environ.get("EFG_EQUITY_TABLE") or equity.DEFAULT_TABLE
    return equity.EquityTable.read_csv(path)


@functools.lru_cache(maxsize=None)
def aof_game(stack_bb):
    return aof.gen_aof_game(aof.AofConfig.from_bb(stack_bb), equity_table())


@functools.lru_cache(maxsize=None)
def aof_reduction(stack_bb):
    """Strict per-player reduction of the AOF game, shared across test modules."""
    from efgdom import reducer
    return reducer.reduce_iteratively(aof_game(stack_bb), reducer.ReduceConfig())


@pytest.fixture
def fixture_game():
    return load_fixture


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: builds and reduces full poker games (minutes)")


ANNOTATIONS = Path(__file__).parent / "data" / "corpus_annotations.json"


def verdict_class(result):
    from efgdom import dominance as dom
    if result in (dom.STRICT, dom.STRONG_STRICT):
        return "strict"
    if result in (dom.WEAK, dom.STRONG_WEAK):
        return "weak"
    return "not"


@functools.lru_cache(maxsize=None)
def corpus_comparison():
    """Pipeline vs oracle verdicts for every multi-action (player, infoset,
    action) of the fixture corpus, in strict and weak mode."""
    from efgdom import dominance as dom
    strict_cfg = dom.CheckConfig(mode=dom.STRICT_ONLY)
    weak_cfg = dom.CheckConfig(mode=dom.STRICT_THEN_WEAK)
    rows = []
    for name, g in oracle.fixtures(20).items():
        for I in g.infosets:
            if len(I.actions) < 2:
                continue
            for a, label in enumerate(I.actions):
                ps = dom.check_action(g, I.player, I.id, a, strict_cfg)
                pw = dom.check_action(g, I.player, I.id, a, weak_cfg)
                rows.append({
                    "game": name, "infoset": I.id, "action": label, "player": I.player,
                    "strict_pipeline": ps.dominated,
                    "strict_oracle": oracle.oracle_check(g, I.player, I.id, a, "strict").result
                    == dom.STRICT,
                    "weak_pipeline": verdict_class(pw.result),
                    "weak_oracle": verdict_class(oracle.oracle_check(g, I.player, I.id, a, "weak").result),
                })
    return rows


def annotated(row):
    doc = json.loads(ANNOTATIONS.read_text())
    return any(e["game"] == row["game"] and e["infoset"] == row["infoset"]
               and e["action"] == row["action"] and e["pipeline"] == row["weak_pipeline"]
               and e["oracle"] == row["weak_oracle"] and e["tag"] == doc["tag"]
               for e in doc["entries"])


ACCEPTANCE_LINES: list[str] = []


def pytest_collection_modifyitems(session, config, items):
    # acceptance last, so the tie-sanity criterion sees every check of the session
    items.sort(key=lambda item: "test_acceptance.py" in item.nodeid.split("::")[0])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
