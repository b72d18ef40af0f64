"""Sequence-form representation of two-player (or opponent-merged) games.

A player's sequences are the empty sequence (index 0) followed by one entry
per (info set, action) pair, with info sets taken in depth-first preorder of
their first member node. Realization plans x satisfy ``E x = e, x >= 0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import lp
from .game import CHANCE, DECISION, GameTree, InfoSet, Node, check_perfect_recall

DENSE_LIMIT = 2000


class ImperfectRecallError(ValueError):
    def __init__(self, player: int, infoset: int):
        super().__init__(f"player {player} lacks perfect recall at info set {infoset}")
        self.player = player
        self.infoset = infoset


class StructuralError(RuntimeError):
    pass


@dataclass
class SequenceIndex:
    """Sequences of one player (or of a merged agent, player -1)."""

    player: int
    sequences: list[tuple[int, int, str]]
    leading: dict[int, int]
    index: dict[tuple[int, int], int]
    node_seq: np.ndarray
    infoset_order: list[int] = field(default_factory=list)

    @property
    def d(self) -> int:
        return len(self.sequences)

    @property
    def c(self) -> int:
        return 1 + len(self.infoset_order)

    def label(self, k: int) -> str:
        if k == 0:
            return "∅"
        _, infoset, action = self.sequences[k]
        return f"{infoset}:{action}"


def _index_from_keys(game: GameTree, player: int, key_of_node) -> SequenceIndex:
    """Shared builder: ``key_of_node(n)`` gives the info-set key owning node n
    (or None when n is not a decision of this agent)."""
    sequences: list[tuple[int, int, str]] = [(-1, -1, "")]
    leading: dict = {}
    index: dict = {}
    order: list = []
    node_seq = np.zeros(len(game.nodes), dtype=np.int64)
    for n, node in enumerate(game.nodes):
        if node.parent is not None:
            parent = game.nodes[node.parent]
            pkey = key_of_node(node.parent)
            node_seq[n] = index[(pkey, node.parent_action)] if pkey is not None else node_seq[node.parent]
        key = key_of_node(n)
        if key is None:
            continue
        if key not in leading:
            leading[key] = int(node_seq[n])
            order.append(key)
            for a, label in enumerate(node.actions):
                index[(key, a)] = len(sequences)
                sequences.append((int(node_seq[n]), key, label))
        elif leading[key] != node_seq[n]:
            raise ImperfectRecallError(player, key)
    return SequenceIndex(player, sequences, leading, index, node_seq, order)


def build_sequences(game: GameTree, player: int) -> SequenceIndex:
    """Sequence index of ``player``; rejects imperfect recall."""
    report = check_perfect_recall(game, player)
    if report:
        raise ImperfectRecallError(player, next(iter(report.violations)))

    def key(n):
        node = game.nodes[n]
        return node.infoset if node.kind == DECISION and node.player == player else None

    return _index_from_keys(game, player, key)


def _constraints(seqs: SequenceIndex, dense: bool | None = None):
    rows, cols, vals = [0], [0], [1.0]
    for r, key in enumerate(seqs.infoset_order, start=1):
        rows.append(r)
        cols.append(seqs.leading[key])
        vals.append(-1.0)
        a = 0
        while (key, a) in seqs.index:
            rows.append(r)
            cols.append(seqs.index[(key, a)])
            vals.append(1.0)
            a += 1
    E = sp.csr_matrix((vals, (rows, cols)), shape=(seqs.c, seqs.d))
    e = np.zeros(seqs.c)
    e[0] = 1.0
    if dense if dense is not None else seqs.d <= DENSE_LIMIT:
        E = E.toarray()
    return E, e


def build_constraints(game: GameTree, player: int, seqs: SequenceIndex | None = None):
    """(E, e) for ``player``; E is a dense array up to 2000 sequences, sparse above."""
    return _constraints(seqs or build_sequences(game, player))


def _payoff_matrix(game: GameTree, rows: SequenceIndex, cols: SequenceIndex, player: int,
                   leaves=None, scale: float = 1.0) -> sp.csr_matrix:
    leaves = np.asarray(game.leaves if leaves is None else leaves, dtype=np.int64)
    if leaves.size == 0:
        return sp.csr_matrix((rows.d, cols.d))
    reach = game.chance_reach[leaves]
    util = np.array([game.nodes[l].utilities[player] for l in leaves])
    M = sp.coo_matrix((reach * util * scale, (rows.node_seq[leaves], cols.node_seq[leaves])),
                      shape=(rows.d, cols.d))
    return M.tocsr()


def build_payoffs(game: GameTree, for_player: int, seqs=None) -> sp.csr_matrix:
    """d_1 x d_2 matrix of ``for_player``'s chance-weighted leaf utilities."""
    if game.num_players != 2:
        raise ValueError("build_payoffs needs a two-player game; merge opponents first")
    s0, s1 = seqs or (build_sequences(game, 0), build_sequences(game, 1))
    return _payoff_matrix(game, s0, s1, for_player)


@dataclass
class SequenceForm:
    seqs: tuple[SequenceIndex, SequenceIndex]
    E: object
    e: np.ndarray
    F: object
    f: np.ndarray
    A: sp.csr_matrix
    B: sp.csr_matrix


def build_sequence_form(game: GameTree) -> SequenceForm:
    s0, s1 = build_sequences(game, 0), build_sequences(game, 1)
    E, e = _constraints(s0)
    F, f = _constraints(s1)
    return SequenceForm((s0, s1), E, e, F, f,
                        build_payoffs(game, 0, (s0, s1)), build_payoffs(game, 1, (s0, s1)))


# -- the region of a target info set -------------------------------------------

@dataclass
class Region:
    """Nodes relevant to a check at info set ``infoset``.

    ``ancestors`` are proper ancestors of members; ``toward`` holds the
    (node, action) edges from an ancestor into the region; ``leaves`` are the
    leaves below members and ``mass`` the total chance reach of the members.
    """

    infoset: int
    ancestors: set[int]
    toward: set[tuple[int, int]]
    leaves: list[int]
    mass: float


def region(game: GameTree, infoset: int) -> Region:
    I = game.infosets[infoset]
    ancestors: set[int] = set()
    toward: set[tuple[int, int]] = set()
    for m in I.members:
        for a, act in game.path(m):
            ancestors.add(a)
            toward.add((a, act))
    leaves = sorted(l for m in I.members for l in game.subtree_leaves(m))
    # members differing only by player moves share one chance history
    chance_paths = {}
    for m in I.members:
        key = tuple((a, act) for a, act in game.path(m) if game.nodes[a].kind == CHANCE)
        chance_paths[key] = game.chance_reach[m]
    mass = float(sum(chance_paths.values()))
    return Region(infoset, ancestors, toward, leaves, mass)


@dataclass
class ReachSets:
    player: int
    infoset: int
    action: int
    own: tuple[int, ...]
    opp_zero: dict[int, tuple[int, ...]]
    target: int

    def zero_of(self, opponent: int) -> tuple[int, ...]:
        return self.opp_zero.get(opponent, ())


def reach_sets(game: GameTree, player: int, infoset: int, action: int,
               seqs: dict[int, SequenceIndex] | None = None,
               reg: Region | None = None) -> ReachSets:
    """Index sets pinning play toward ``infoset``.

    ``own`` lists the player's non-empty sequences on the path to the info
    set. ``opp_zero[j]`` lists opponent j's sequences (J, a) where J has a
    node on a path to the info set and a leads away at every such node.
    """
    I = game.infosets[infoset]
    if I.player != player:
        raise ValueError(f"info set {infoset} belongs to player {I.player}, not {player}")
    if not 0 <= action < len(I.actions):
        raise ValueError(f"info set {infoset} has no action {action}")
    seqs = seqs or {}
    for p in range(game.num_players):
        if p not in seqs:
            seqs[p] = build_sequences(game, p)
    reg = reg or region(game, infoset)
    own = []
    k = seqs[player].leading[infoset]
    while k:
        own.append(k)
        k = seqs[player].sequences[k][0]
    toward_sets: dict[int, set[int]] = {}
    for a in reg.ancestors:
        node = game.nodes[a]
        if node.kind == DECISION and node.player != player:
            toward_sets.setdefault(node.infoset, set())
    for a, act in reg.toward:
        node = game.nodes[a]
        if node.kind == DECISION and node.player != player:
            toward_sets[node.infoset].add(act)
    opp_zero: dict[int, list[int]] = {}
    for J, acts in sorted(toward_sets.items()):
        p = game.infosets[J].player
        for a in range(len(game.infosets[J].actions)):
            if a not in acts:
                opp_zero.setdefault(p, []).append(seqs[p].index[(J, a)])
    return ReachSets(player, infoset, action, tuple(sorted(own)),
                     {p: tuple(sorted(v)) for p, v in opp_zero.items()},
                     seqs[player].index[(infoset, action)])


# -- opponent merging ------------------------------------------------------------

def merge_opponents(game: GameTree, protagonist: int) -> GameTree:
    """Two-player game: the protagonist (player 0) against everyone else.

    Info sets keep their ids. With a single opponent its utilities are kept;
    otherwise the merged player's utilities are 0.
    """
    if game.num_players < 2:
        raise ValueError("need at least two players")
    names = (game.players[protagonist],
             "+".join(p for i, p in enumerate(game.players) if i != protagonist))
    single = game.num_players == 2

    def remap(p):
        return 0 if p == protagonist else 1

    nodes = []
    for node in game.nodes:
        kw = {}
        if node.kind == DECISION:
            kw["player"] = remap(node.player)
        if node.is_leaf:
            u = node.utilities
            other = u[1 - protagonist] if single else 0.0
            kw["utilities"] = (u[protagonist], other)
            kw["payoff_text"] = None
        nodes.append(_replace(node, **kw))
    infosets = [InfoSet(I.id, remap(I.player), I.members, I.actions, I.name, I.number)
                for I in game.infosets]
    return GameTree(names, nodes, infosets, game.title, game.comment)


def split_by_history(game: GameTree, player: int) -> tuple[GameTree, bool]:
    """Refine ``player``'s info sets by own history so the player has perfect recall.

    Returns the refined game and whether anything was split. Refining gives
    the player more information, never less. Ids of unsplit info sets and of
    the first part of each split set are kept; extra parts are appended.
    """
    report = check_perfect_recall(game, player)
    if not report:
        return game, False
    nodes = list(game.nodes)
    infosets = list(game.infosets)
    for old_id, _ in sorted(report.violations.items()):
        old = game.infosets[old_id]
        parts: dict[tuple, list[int]] = {}
        for m in old.members:
            parts.setdefault(game.own_history(m, player), []).append(m)
        for k, members in enumerate(parts.values()):
            i = old_id if k == 0 else len(infosets)
            part = InfoSet(i, player, tuple(members), old.actions, f"{old.name}[{k}]", None)
            if k == 0:
                infosets[i] = part
            else:
                infosets.append(part)
            for m in members:
                nodes[m] = _replace(nodes[m], infoset=i, info_number=None)
    refined = GameTree(game.players, nodes, infosets, game.title, game.comment)
    # splitting one set can change the histories seen at later ones
    return split_by_history(refined, player)[0], True


def _replace(node: Node, **kw) -> Node:
    from dataclasses import replace
    return replace(node, **kw) if kw else node


# -- merged single agent -------------------------------------------------------------

@dataclass
class MergedAgent:
    """Sequence form of one agent controlling every decision.

    ``infosets[k]`` is the (original info set, combined history) key of merged
    info set k. ``target`` lists the merged sequences playing the tested action
    at the target info set, ``target_other`` the other actions there, and
    ``away`` the sequences leading away from it. ``warning`` is set when an
    info set other than the target had to be split by history, i.e. the
    original info-set structure is not respected by the merged agent.
    """

    seqs: SequenceIndex
    infosets: list[tuple]
    E: sp.csr_matrix
    e: np.ndarray
    a: np.ndarray
    target: tuple[int, ...] = ()
    target_other: tuple[int, ...] = ()
    away: tuple[int, ...] = ()
    warning: bool = False
    split_infosets: tuple[int, ...] = ()

    @property
    def d(self) -> int:
        return self.seqs.d


def build_merged_single_agent(game: GameTree, protagonist: int, infoset: int | None = None,
                              action: int | None = None) -> MergedAgent:
    """Merged single-agent sequence form.

    Without a target, every decision node is assigned to one agent that keeps
    the original info sets; ``warning`` reports that this agent lacks perfect
    recall (the form is still built, grouping by first-seen leading sequence).

    With a target info set, only its region is kept (paths toward it and the
    subtrees below its members), merged info sets are (info set, combined
    history) pairs so the agent always has perfect recall, and payoffs are
    normalized by the chance mass of the target.
    """
    if infoset is None:
        return _merged_full(game, protagonist)
    return _merged_region(game, protagonist, infoset, action)


def _merged_full(game: GameTree, protagonist: int) -> MergedAgent:
    hist = [()] * len(game.nodes)
    for n, node in enumerate(game.nodes):
        if node.parent is not None:
            p = game.nodes[node.parent]
            h = hist[node.parent]
            hist[n] = h + ((p.infoset, node.parent_action),) if p.kind == DECISION else h
    warning = any(len({hist[m] for m in I.members}) > 1 for I in game.infosets)

    sequences = [(-1, -1, "")]
    leading, index, order = {}, {}, []
    node_seq = np.zeros(len(game.nodes), dtype=np.int64)
    for n, node in enumerate(game.nodes):
        if node.parent is not None:
            p = game.nodes[node.parent]
            node_seq[n] = index[(p.infoset, node.parent_action)] if p.kind == DECISION \
                else node_seq[node.parent]
        if node.kind == DECISION and node.infoset not in leading:
            leading[node.infoset] = int(node_seq[n])
            order.append(node.infoset)
            for a, label in enumerate(node.actions):
                index[(node.infoset, a)] = len(sequences)
                sequences.append((int(node_seq[n]), node.infoset, label))
    seqs = SequenceIndex(-1, sequences, leading, index, node_seq, order)
    E, e = _constraints(seqs, dense=False)
    a = np.zeros(seqs.d)
    leaves = np.asarray(game.leaves, dtype=np.int64)
    if leaves.size:
        util = np.array([game.nodes[l].utilities[protagonist] for l in leaves])
        np.add.at(a, node_seq[leaves], game.chance_reach[leaves] * util)
    return MergedAgent(seqs, [(k, None) for k in order], E, e, a, warning=warning)


def _merged_region(game: GameTree, protagonist: int, infoset: int, action: int | None) -> MergedAgent:
    reg = region(game, infoset)
    members = set(game.infosets[infoset].members)
    in_region = set(reg.ancestors)
    for m in members:
        stack = [m]
        while stack:
            x = stack.pop()
            in_region.add(x)
            stack.extend(game.nodes[x].children)

    hist: dict[int, tuple] = {0: ()}
    key_of: dict[int, int] = {}
    keys: dict[tuple, int] = {}
    key_list: list[tuple] = []
    hists_of: dict[int, set] = {}
    sequences = [(-1, -1, "")]
    leading: dict[int, int] = {}
    index: dict[tuple[int, int], int] = {}
    node_seq = np.zeros(len(game.nodes), dtype=np.int64)
    toward: dict[int, set[int]] = {}
    anc_keys: set[int] = set()

    for n in sorted(in_region):
        node = game.nodes[n]
        if node.parent is not None:
            p = game.nodes[node.parent]
            h = hist[node.parent]
            if p.kind == DECISION:
                h = h + ((p.infoset, node.parent_action),)
                node_seq[n] = index[(key_of[node.parent], node.parent_action)]
            else:
                node_seq[n] = node_seq[node.parent]
            hist[n] = h
        if node.kind != DECISION:
            continue
        k = (node.infoset, hist[n])
        hists_of.setdefault(node.infoset, set()).add(hist[n])
        if k not in keys:
            keys[k] = mk = len(key_list)
            key_list.append(k)
            leading[mk] = int(node_seq[n])
            for a, label in enumerate(node.actions):
                index[(mk, a)] = len(sequences)
                sequences.append((int(node_seq[n]), mk, label))
        mk = keys[k]
        key_of[n] = mk
        if n in reg.ancestors:
            anc_keys.add(mk)
            toward.setdefault(mk, set()).update(
                act for act in range(len(node.children)) if (n, act) in reg.toward)

    seqs = SequenceIndex(-1, sequences, leading, index, node_seq, list(range(len(key_list))))
    E, e = _constraints(seqs, dense=False)
    a = np.zeros(seqs.d)
    if reg.leaves and reg.mass > 0:
        leaves = np.asarray(reg.leaves, dtype=np.int64)
        util = np.array([game.nodes[l].utilities[protagonist] for l in leaves])
        np.add.at(a, node_seq[leaves], game.chance_reach[leaves] * util / reg.mass)

    away = sorted(index[(mk, act)] for mk in anc_keys
                  for act in range(len(game.infosets[key_list[mk][0]].actions))
                  if act not in toward[mk])
    target, other = [], []
    for mk, (J, _) in enumerate(key_list):
        if J == infoset:
            for act in range(len(game.infosets[J].actions)):
                (target if act == action else other).append(index[(mk, act)])
    split = tuple(sorted(J for J, hs in hists_of.items() if len(hs) > 1))
    return MergedAgent(seqs, key_list, E, e, a, tuple(sorted(target)), tuple(sorted(other)),
                       tuple(away), warning=any(J != infoset for J in split), split_infosets=split)


# -- zero-sum solve -----------------------------------------------------------------

@dataclass
class ZeroSumSolution:
    value: float
    x: np.ndarray
    y: np.ndarray


def solve_zero_sum(game: GameTree, backend: str = "highs") -> ZeroSumSolution:
    """Value for player 0 and equilibrium realization plans of a zero-sum game.

    Solves min e·p s.t. -A y + Eᵀp >= 0, F y = f, y >= 0; player 0's plan is
    read from the duals of the first constraint block.
    """
    sf = build_sequence_form(game)
    E = sp.csr_matrix(sf.E)
    F = sp.csr_matrix(sf.F)
    d1, d2 = sf.A.shape
    c1 = E.shape[0]
    obj = np.concatenate([np.zeros(d2), sf.e])
    A_ge = sp.hstack([-sf.A, E.T]).tocsr()
    A_eq = sp.hstack([F, sp.csr_matrix((F.shape[0], c1))]).tocsr()
    lower = np.concatenate([np.zeros(d2), np.full(c1, -np.inf)])
    prob = lp.LpProblem(obj, "min", A_eq=A_eq, b_eq=sf.f, A_ge=A_ge, b_ge=np.zeros(d1), lower=lower)
    sol = lp.solve(prob, backend)
    if not sol.ok:
        raise StructuralError(f"zero-sum LP {sol.status}: {sol.message}")
    x = np.clip(sol.duals_ge, 0.0, None)
    return ZeroSumSolution(sol.value, x, sol.x[:d2])
