"""Two-player all-in-or-fold hold'em.

The small blind (player 1) either shoves its whole stack or folds; facing a
shove the big blind (player 2) calls or folds. Each player only sees its own
canonical hand. Payoffs are the net chips won by player 1; player 2 gets the
negation.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from ..game import GameTree, build, chance, decision, leaf
from . import cards as C
from .equity import N_DEALS, EquityTable

SHOVE, FOLD, CALL = "shove", "fold", "call"
P1_ACTIONS = (SHOVE, FOLD)
P2_ACTIONS = (CALL, FOLD)
OUTCOMES, EXPECTED = "outcomes", "expected"


@dataclass(frozen=True)
class AofConfig:
    """Blinds and the common pre-blind stack, in chips."""

    stack: int
    sb: int = 100
    bb: int = 200

    def __post_init__(self):
        if not 0 < self.sb < self.bb <= self.stack:
            raise ValueError(f"need 0 < sb < bb <= stack, got sb={self.sb} bb={self.bb} "
                             f"stack={self.stack}")

    @classmethod
    def from_bb(cls, stack_bb: float, sb: int = 100, bb: int = 200) -> "AofConfig":
        stack = stack_bb * bb
        if stack != int(stack):
            raise ValueError(f"{stack_bb} big blinds is not a whole number of chips")
        return cls(int(stack), sb, bb)

    @property
    def stack_bb(self) -> float:
        return self.stack / self.bb


def p1_infoset_name(hand) -> str:
    return f"P1 {hand}"


def p2_infoset_name(hand) -> str:
    return f"P2 {hand}"


def showdown_payoff(config: AofConfig, equity: Fraction) -> Fraction:
    """Player 1's expected net chips when both players are all in."""
    return equity * 2 * config.stack - config.stack


def deal_probabilities(table: EquityTable) -> dict[tuple[str, str], Fraction]:
    """Exact probability of each (player 1 hand, player 2 hand) deal."""
    probs = {}
    for a, h1 in enumerate(table.hands):
        for b, h2 in enumerate(table.hands):
            w = int(table.weight[a, b])
            if w:
                probs[(h1.code, h2.code)] = Fraction(w, N_DEALS)
    return probs


def _showdown(config: AofConfig, equity: Fraction, mode: str):
    if mode == EXPECTED:
        u = float(showdown_payoff(config, equity))
        return leaf(u, -u)
    s = config.stack
    return chance([("win", equity, leaf(s, -s)), ("lose", 1 - equity, leaf(-s, s))],
                  prob_text=[str(equity), str(1 - equity)])


def gen_aof_game(config: AofConfig, table: EquityTable, showdown: str = OUTCOMES) -> GameTree:
    """All-in-or-fold game tree over canonical hands.

    With ``showdown="outcomes"`` a call leads to a chance node where player 1
    wins the opponent's stack with probability equal to its equity and loses
    its own otherwise; ``"expected"`` replaces that node by a single leaf
    paying the expectation. Both give the same expected utilities.
    """
    if showdown not in (OUTCOMES, EXPECTED):
        raise ValueError(f"showdown must be {OUTCOMES!r} or {EXPECTED!r}")
    probs = deal_probabilities(table)
    if sum(probs.values()) != 1:
        raise ValueError("equity table weights do not sum to the number of deals")
    outcomes = []
    for (c1, c2), p in probs.items():
        p2 = decision(1, ("P2", c2), [
            (CALL, _showdown(config, table.equity(c1, c2), showdown)),
            (FOLD, leaf(config.bb, -config.bb)),
        ], info_name=p2_infoset_name(c2))
        p1 = decision(0, ("P1", c1), [
            (SHOVE, p2),
            (FOLD, leaf(-config.sb, config.sb)),
        ], info_name=p1_infoset_name(c1))
        outcomes.append((f"{c1} v {c2}", p, p1))
    root = chance(outcomes, prob_text=[str(p) for _, p, _ in outcomes])
    title = f"AOF {config.stack_bb:g}bb"
    comment = f"All-in or fold, stack {config.stack}, blinds {config.sb}/{config.bb}"
    return build(("P1", "P2"), root, title=title, comment=comment)


# -- grid report -------------------------------------------------------------

def grid_cells(removals, player: int) -> dict[str, str]:
    """Status per canonical hand code from a player's removal records.

    ``removals`` yields (round, infoset name, action) triples.
    """
    prefix = ("P1 ", "P2 ")[player]
    keep_action = (SHOVE, CALL)[player]
    status = {h.code: "?" for h in C.canonical_hands()}
    for rnd, name, action in removals:
        if not name.startswith(prefix):
            continue
        hand = name[len(prefix):]
        if hand not in status:
            raise ValueError(f"{name!r} is not an all-in-or-fold info set")
        if action == FOLD:
            status[hand] = f"S({rnd})"
        elif action == keep_action:
            status[hand] = f"F({rnd})"
        else:
            raise ValueError(f"unexpected action {action!r} at {name!r}")
    return status


def grid_layout(status: dict[str, str]) -> list[list[str]]:
    """13x13 grid, aces first: pairs on the diagonal, suited hands above it,
    offsuit hands below it."""
    ranks = list(range(12, -1, -1))
    grid = []
    for i, r in enumerate(ranks):
        row = []
        for j, c in enumerate(ranks):
            if i == j:
                code = C.RANKS[r] * 2
            elif j > i:
                code = C.RANKS[r] + C.RANKS[c] + "s"
            else:
                code = C.RANKS[c] + C.RANKS[r] + "o"
            row.append(status[code])
        grid.append(row)
    return grid


def grid_report(log) -> dict[int, list[list[str]]]:
    """Per-player 13x13 grids of S(r) / F(r) / ? from a reduction log."""
    records = [(r.round, x.infoset, x.action) for r in log.rounds for x in r.removals]
    for _, name, _ in records:
        if not name.startswith(("P1 ", "P2 ")):
            raise ValueError(f"{name!r} is not an all-in-or-fold info set")
    out = {}
    for player in (0, 1):
        mine = [rec for rec, x in zip(records, (x for r in log.rounds for x in r.removals))
                if x.player == player]
        out[player] = grid_layout(grid_cells(mine, player))
    return out


def format_grid(grid: list[list[str]]) -> str:
    header = "     " + " ".join(f"{r:>5}" for r in reversed(C.RANKS))
    lines = [header]
    for r, row in zip(reversed(C.RANKS), grid):
        lines.append(f"{r:>4} " + " ".join(f"{cell:>5}" for cell in row))
    return "\n".join(lines)
