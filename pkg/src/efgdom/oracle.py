"""Brute-force dominance checks by pure-strategy enumeration, for testing.

Everything here works on the game tree directly and solves its small LPs
with the package's own dense simplex, so it shares no sequence-form code
with :mod:`efgdom.dominance`.

Why pure strategies suffice. Utilities are linear in each side's mixture,
so "for every mixed strategy that plays c" reduces to every pure one, and
"for every opponent profile" to every pure opponent profile. For the weak
test let M be the set of mixtures over non-c strategies that do at least as
well as every c-strategy against every opponent profile. M is convex: if
for each pure c-strategy p some member of M is strictly better than p
against some profile, the average of those members is strictly better than
every p somewhere, and hence better than every mixture of them too.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import lp
from .dominance import NOT_DOMINATED, STRICT, WEAK, DominanceVerdict
from .efg import read_efg
from .game import CHANCE, DECISION, GameTree, build, chance, decision, leaf

DEFAULT_LIMIT = 10**6
FIXTURE_DIR = Path(__file__).parent / "fixtures"


class OracleLimitError(ValueError):
    pass


@dataclass
class PureStrategySet:
    player: int
    infosets: list[int]
    strategies: list[dict[int, int]]
    reduced: bool = False

    def __len__(self) -> int:
        return len(self.strategies)


def _reachable_sets(game: GameTree, player: int, strategy: dict[int, int]) -> list[int]:
    seen, stack = set(), [game.root]
    while stack:
        node = game.nodes[stack.pop()]
        if node.kind == DECISION and node.player == player:
            seen.add(node.infoset)
            stack.append(node.children[strategy[node.infoset]])
        else:
            stack.extend(node.children)
    return sorted(seen)


def enumerate_pure(game: GameTree, player: int, limit: int = DEFAULT_LIMIT,
                   reduced: bool = False) -> PureStrategySet:
    """All pure strategies of ``player`` in lexicographic info-set order.

    With ``reduced`` strategies that agree on every info set they can reach
    are merged (the first in lexicographic order is kept).
    """
    sets = [I.id for I in game.infosets if I.player == player]
    sizes = [len(game.infosets[i].actions) for i in sets]
    total = math.prod(sizes)
    if total > limit:
        raise OracleLimitError(f"player {player} has {total} pure strategies (limit {limit})")
    strategies = [dict(zip(sets, combo)) for combo in itertools.product(*(range(k) for k in sizes))]
    if reduced:
        seen, kept = set(), []
        for s in strategies:
            key = tuple((i, s[i]) for i in _reachable_sets(game, player, s))
            if key not in seen:
                seen.add(key)
                kept.append(s)
        strategies = kept
    return PureStrategySet(player, sets, strategies, reduced)


def _toward(game: GameTree, infoset: int) -> tuple[set[int], dict[int, set[int]]]:
    """Proper ancestors of the info set's members and, per info set met on
    the way, the actions that lead toward a member from at least one node."""
    ancestors, toward = set(), {}
    for m in game.infosets[infoset].members:
        n = m
        while game.nodes[n].parent is not None:
            parent = game.nodes[n].parent
            ancestors.add(parent)
            pn = game.nodes[parent]
            if pn.kind == DECISION:
                toward.setdefault(pn.infoset, set()).add(game.nodes[n].parent_action)
            n = parent
    return ancestors, toward


def restricted_utility(game: GameTree, player: int, infoset: int, profile: dict[int, int]) -> float:
    """Player's chance-weighted payoff over leaves below the info set's members
    when every player follows the pure ``profile``."""
    members = set(game.infosets[infoset].members)
    total, stack = 0.0, [(game.root, 1.0, False)]
    while stack:
        n, w, inside = stack.pop()
        node = game.nodes[n]
        inside = inside or n in members
        if node.is_leaf:
            if inside:
                total += w * node.utilities[player]
        elif node.kind == CHANCE:
            stack.extend((c, w * p, inside) for c, p in zip(node.children, node.probs) if p > 0)
        else:
            stack.append((node.children[profile[node.infoset]], w, inside))
    return total


@dataclass
class OracleData:
    P_c: list[dict[int, int]]
    P_nc: list[dict[int, int]]
    Q: list[dict[int, int]]
    U_c: np.ndarray     # |P_c| x |Q|
    U_nc: np.ndarray    # |P_nc| x |Q|


def oracle_data(game: GameTree, player: int, infoset: int, action: int,
                limit: int = DEFAULT_LIMIT) -> OracleData:
    _, toward = _toward(game, infoset)
    own = enumerate_pure(game, player, limit, reduced=True)

    def reaches(s):
        return all(s[J] in acts for J, acts in toward.items() if game.infosets[J].player == player)

    P = [s for s in own.strategies if reaches(s)]
    P_c = [s for s in P if s[infoset] == action]
    P_nc = [s for s in P if s[infoset] != action]
    others = [enumerate_pure(game, p, limit) for p in range(game.num_players) if p != player]
    if math.prod(len(o) for o in others) > limit:
        raise OracleLimitError("too many opponent profiles")
    Q = []
    for combo in itertools.product(*(o.strategies for o in others)):
        q = {}
        for part in combo:
            q.update(part)
        if all(q[J] in acts for J, acts in toward.items() if J in q):
            Q.append(q)
    U = lambda S: np.array([[restricted_utility(game, player, infoset, {**s, **q}) for q in Q]
                            for s in S]).reshape(len(S), len(Q))
    return OracleData(P_c, P_nc, Q, U(P_c), U(P_nc))


def _tolerance(data: OracleData, rel_eps: float) -> float:
    mags = [np.abs(data.U_c).max(initial=0.0), np.abs(data.U_nc).max(initial=0.0)]
    return rel_eps * (1.0 + max(mags))


def strict_margin(data: OracleData) -> tuple[float, np.ndarray]:
    """max delta such that a mixture over P_nc beats every P_c strategy by
    delta against every q in Q."""
    k, m = data.U_nc.shape
    best_c = data.U_c.max(axis=0)
    # variables: mu (k), delta (free)
    A_ge = np.hstack([data.U_nc.T, -np.ones((m, 1))])
    A_eq = np.hstack([np.ones((1, k)), np.zeros((1, 1))])
    lower = np.concatenate([np.zeros(k), [-np.inf]])
    obj = np.concatenate([np.zeros(k), [1.0]])
    prob = lp.LpProblem(obj, "max", A_eq=A_eq, b_eq=[1.0], A_ge=A_ge, b_ge=best_c, lower=lower)
    sol = lp.solve(prob, "simplex").require()
    return sol.value, sol.x[:k]


def weak_margins(data: OracleData) -> list[float] | None:
    """Per c-strategy p: max over weakly-better mixtures of the total gain over
    p across Q; None when no mixture is weakly better everywhere."""
    k, m = data.U_nc.shape
    best_c = data.U_c.max(axis=0)
    base = lp.LpProblem(np.zeros(k), "max", A_eq=np.ones((1, k)), b_eq=[1.0],
                        A_ge=data.U_nc.T, b_ge=best_c)
    if not lp.solve(base, "simplex").ok:
        return None
    out = []
    row_sum = data.U_nc.sum(axis=1)
    for p in range(data.U_c.shape[0]):
        prob = lp.LpProblem(row_sum, "max", A_eq=np.ones((1, k)), b_eq=[1.0],
                            A_ge=data.U_nc.T, b_ge=best_c)
        sol = lp.solve(prob, "simplex").require()
        out.append(sol.value - data.U_c[p].sum())
    return out


def oracle_check(game: GameTree, player: int, infoset: int, action: int, mode: str = "strict",
                 rel_eps: float = 1e-7, limit: int = DEFAULT_LIMIT) -> DominanceVerdict:
    """Verdict from the definitions directly. ``mode`` is "strict" or "weak";
    weak mode reports StrictlyDominated first when that already holds."""
    I = game.infosets[infoset]
    label = I.actions[action]
    data = oracle_data(game, player, infoset, action, limit)
    verdict = DominanceVerdict(player, infoset, action, label, NOT_DOMINATED)
    if not data.P_nc or not data.Q:
        return verdict
    eps = _tolerance(data, rel_eps)
    delta, mu = strict_margin(data)
    verdict.margin = delta
    if delta > eps:
        verdict.result = STRICT
        verdict.witness = {k: float(w) for k, w in enumerate(mu) if w > 1e-12}
        return verdict
    if mode == "weak":
        margins = weak_margins(data)
        if margins is not None and margins and min(margins) > eps:
            verdict.result = WEAK
            verdict.margin = min(margins)
    return verdict


# -- corpus -------------------------------------------------------------------------

FIXTURE_NAMES = ("leaf_dominance", "leaf_dominance_reduced", "early_exit", "weak_tie",
                 "matching_pennies", "three_player")


def random_game(seed: int, max_depth: int = 4, num_players: int = 2) -> GameTree:
    """Small random game in which players see every player action.

    Each player sees a random subset of the chance outcomes; nodes with the
    same player-action history and the same observed chance outcomes share
    an info set. Payoffs are small integers so ties occur.
    """
    rng = np.random.default_rng(seed)
    observes: dict[tuple[int, int], bool] = {}
    n_actions: dict[tuple, int] = {}

    def grow(depth, history, seen, chance_id):
        if depth >= max_depth or (depth > 0 and rng.random() < 0.2):
            return leaf(*(float(v) for v in rng.integers(-4, 5, num_players)))
        if rng.random() < 0.25:
            cid = chance_id[0]
            chance_id[0] += 1
            k = 2
            w = rng.integers(1, 4, k)
            outcomes = []
            for o in range(k):
                new_seen = []
                for p in range(num_players):
                    obs = observes.setdefault((p, cid), bool(rng.random() < 0.5))
                    new_seen.append(seen[p] + (((cid, o),) if obs else ()))
                outcomes.append((f"o{o}", w[o] / w.sum(),
                                 grow(depth + 1, history, tuple(new_seen), chance_id)))
            return chance(outcomes)
        player = int(rng.integers(num_players))
        key = (player, history, seen[player])
        k = n_actions.setdefault(key, int(rng.integers(1, 3)) if depth else 2)
        return decision(player, key, [
            (f"a{a}", grow(depth + 1, history + ((player, a),), seen, chance_id)) for a in range(k)])

    root = grow(0, (), tuple(() for _ in range(num_players)), [0])
    players = [f"P{p + 1}" for p in range(num_players)]
    return build(players, root, title=f"random {seed}")


def fixtures(n_random: int = 20) -> dict[str, GameTree]:
    """Shipped fixture games plus ``n_random`` seeded random games."""
    out = {name: read_efg(FIXTURE_DIR / f"{name}.efg") for name in FIXTURE_NAMES}
    for seed in range(n_random):
        out[f"random_{seed:02d}"] = random_game(seed)
    return out
