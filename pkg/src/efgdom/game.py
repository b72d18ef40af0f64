"""In-memory extensive-form games.

Nodes live in an arena indexed in depth-first preorder (the root is node 0).
Information sets are numbered in order of their first member in preorder, and
list their members in preorder too, so every derived index is deterministic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

DECISION = "decision"
CHANCE = "chance"
LEAF = "leaf"

PROB_TOL = 1e-12
PROFILE_TOL = 1e-9


class InvalidProfileError(ValueError):
    pass


@dataclass(frozen=True)
class Node:
    kind: str
    label: str = ""
    parent: int | None = None
    parent_action: int | None = None
    children: tuple[int, ...] = ()
    actions: tuple[str, ...] = ()
    player: int | None = None
    infoset: int | None = None
    probs: tuple[float, ...] = ()
    utilities: tuple[float, ...] = ()
    # Presentation details kept for faithful .efg output.
    info_name: str = ""
    info_number: int | None = None
    outcome_name: str = ""
    prob_text: tuple[str, ...] | None = None
    payoff_text: tuple[str, ...] | None = None

    @property
    def is_leaf(self) -> bool:
        return self.kind == LEAF

    @property
    def is_chance(self) -> bool:
        return self.kind == CHANCE

    @property
    def is_decision(self) -> bool:
        return self.kind == DECISION


@dataclass(frozen=True)
class InfoSet:
    id: int
    player: int
    members: tuple[int, ...]
    actions: tuple[str, ...]
    name: str = ""
    number: int | None = None


class GameTree:
    """A finite extensive-form game. Treat instances as immutable."""

    def __init__(self, players: Sequence[str], nodes: Sequence[Node],
                 infosets: Sequence[InfoSet], title: str = "", comment: str = ""):
        self.players = tuple(players)
        self.nodes = tuple(nodes)
        self.infosets = tuple(infosets)
        self.title = title
        self.comment = comment
        self.root = 0

    def __repr__(self) -> str:
        return (f"GameTree({self.title!r}, players={len(self.players)}, "
                f"nodes={len(self.nodes)}, infosets={len(self.infosets)})")

    @property
    def num_players(self) -> int:
        return len(self.players)

    def infosets_of(self, player: int) -> list[InfoSet]:
        return [I for I in self.infosets if I.player == player]

    def infoset_by_name(self, player: int, name: str) -> InfoSet:
        """Look up an info set by name, number or ``#id``."""
        for I in self.infosets_of(player):
            if I.name == name or str(I.number) == name or f"#{I.id}" == name:
                return I
        raise KeyError(f"player {player} has no info set {name!r}")

    @cached_property
    def leaves(self) -> tuple[int, ...]:
        return tuple(n for n, node in enumerate(self.nodes) if node.kind == LEAF)

    @cached_property
    def depth(self) -> np.ndarray:
        d = np.zeros(len(self.nodes), dtype=np.int64)
        for n, node in enumerate(self.nodes):
            if node.parent is not None:
                d[n] = d[node.parent] + 1
        return d

    @cached_property
    def chance_reach(self) -> np.ndarray:
        """Product of chance probabilities on the path to each node."""
        reach = np.ones(len(self.nodes))
        for n, node in enumerate(self.nodes):
            if node.parent is not None:
                p = self.nodes[node.parent]
                reach[n] = reach[node.parent] * (p.probs[node.parent_action] if p.is_chance else 1.0)
        return reach

    def infoset_depth(self, infoset: int) -> int:
        return int(max(self.depth[m] for m in self.infosets[infoset].members))

    def path(self, n: int) -> list[tuple[int, int]]:
        """(ancestor node, action index taken there) from the root down to ``n``."""
        out = []
        while self.nodes[n].parent is not None:
            node = self.nodes[n]
            out.append((node.parent, node.parent_action))
            n = node.parent
        out.reverse()
        return out

    def own_history(self, n: int, player: int) -> tuple[tuple[int, int], ...]:
        """Sequence of (info set, action) pairs ``player`` took on the way to ``n``."""
        return tuple(
            (self.nodes[a].infoset, act)
            for a, act in self.path(n)
            if self.nodes[a].is_decision and self.nodes[a].player == player
        )

    def subtree_leaves(self, n: int) -> list[int]:
        out, stack = [], [n]
        while stack:
            m = stack.pop()
            node = self.nodes[m]
            if node.is_leaf:
                out.append(m)
            else:
                stack.extend(reversed(node.children))
        return out

    def action_count(self) -> int:
        return sum(len(I.actions) for I in self.infosets)

    def is_zero_sum(self, tol: float = PROB_TOL) -> bool:
        return all(abs(sum(self.nodes[l].utilities)) <= tol for l in self.leaves)


# -- construction -------------------------------------------------------------

@dataclass
class Spec:
    """Recursive description of a subtree, used by :func:`build`.

    ``infoset`` is any hashable key; decision nodes sharing (player, key) end up
    in the same information set.
    """

    kind: str
    label: str = ""
    player: int | None = None
    infoset: object = None
    actions: Sequence[str] = ()
    children: Sequence["Spec"] = ()
    probs: Sequence[float] = ()
    utilities: Sequence[float] = ()
    info_name: str = ""
    info_number: int | None = None
    outcome_name: str = ""
    prob_text: Sequence[str] | None = None
    payoff_text: Sequence[str] | None = None


def leaf(*utilities: float, label: str = "", outcome_name: str = "", payoff_text=None) -> Spec:
    return Spec(LEAF, label=label, utilities=tuple(float(u) for u in utilities),
                outcome_name=outcome_name, payoff_text=payoff_text)


def chance(outcomes: Mapping[str, tuple[float, Spec]] | Sequence[tuple[str, float, Spec]],
           label: str = "", **kw) -> Spec:
    items = list(outcomes.items()) if isinstance(outcomes, Mapping) else list(outcomes)
    if items and len(items[0]) == 2:
        items = [(a, p, s) for a, (p, s) in items]
    return Spec(CHANCE, label=label, actions=[a for a, _, _ in items],
                probs=[float(p) for _, p, _ in items], children=[s for _, _, s in items], **kw)


def decision(player: int, infoset, branches: Mapping[str, Spec] | Sequence[tuple[str, Spec]],
             label: str = "", **kw) -> Spec:
    items = list(branches.items()) if isinstance(branches, Mapping) else list(branches)
    return Spec(DECISION, label=label, player=player, infoset=infoset,
                actions=[a for a, _ in items], children=[s for _, s in items], **kw)


def build(players: Sequence[str], root: Spec, title: str = "", comment: str = "") -> GameTree:
    """Assemble a :class:`GameTree` from a :class:`Spec`, assigning preorder ids."""
    nodes: list[Node] = []
    members: dict[tuple[int, object], list[int]] = {}
    order: list[tuple[int, object]] = []
    meta: dict[tuple[int, object], tuple[str, int | None]] = {}
    pending: list[tuple[Spec, int | None, int | None]] = [(root, None, None)]
    child_lists: list[list[int]] = []

    while pending:
        spec, parent, pact = pending.pop()
        n = len(nodes)
        nodes.append(None)  # placeholder, filled below
        child_lists.append([])
        if parent is not None:
            child_lists[parent].append(n)
        key = None
        if spec.kind == DECISION:
            key = (spec.player, spec.infoset)
            if key not in members:
                members[key] = []
                order.append(key)
                meta[key] = (spec.info_name, spec.info_number)
            members[key].append(n)
        nodes[n] = (spec, parent, pact, key)
        for a in range(len(spec.children) - 1, -1, -1):
            pending.append((spec.children[a], n, a))

    iset_id = {key: i for i, key in enumerate(order)}
    final: list[Node] = []
    for n, (spec, parent, pact, key) in enumerate(nodes):
        final.append(Node(
            kind=spec.kind, label=spec.label, parent=parent, parent_action=pact,
            children=tuple(child_lists[n]), actions=tuple(spec.actions),
            player=spec.player if spec.kind == DECISION else None,
            infoset=iset_id[key] if key is not None else None,
            probs=tuple(float(p) for p in spec.probs),
            utilities=tuple(float(u) for u in spec.utilities),
            info_name=spec.info_name, info_number=spec.info_number,
            outcome_name=spec.outcome_name,
            prob_text=tuple(spec.prob_text) if spec.prob_text is not None else None,
            payoff_text=tuple(spec.payoff_text) if spec.payoff_text is not None else None,
        ))
    infosets = []
    for key in order:
        first = final[members[key][0]]
        name, number = meta[key]
        infosets.append(InfoSet(iset_id[key], key[0], tuple(members[key]), first.actions,
                                name=name, number=number))
    return GameTree(players, final, infosets, title=title, comment=comment)


def from_arena(players: Sequence[str], nodes: Sequence[Node], title: str = "",
               comment: str = "") -> GameTree:
    """Renumber an arbitrary arena (root = node 0) into canonical preorder form.

    Info sets are regrouped from the nodes' ``(player, infoset)`` fields, so
    callers may leave stale info-set ids as long as they are consistent keys.
    """
    # iterative conversion keeps deep trees off the recursion limit
    specs: dict[int, Spec] = {}
    order, stack = [], [0]
    while stack:
        n = stack.pop()
        order.append(n)
        stack.extend(nodes[n].children)
    for n in reversed(order):
        node = nodes[n]
        specs[n] = Spec(node.kind, label=node.label, player=node.player, infoset=node.infoset,
                        actions=node.actions, children=[specs[c] for c in node.children],
                        probs=node.probs, utilities=node.utilities, info_name=node.info_name,
                        info_number=node.info_number, outcome_name=node.outcome_name,
                        prob_text=node.prob_text, payoff_text=node.payoff_text)
    return build(players, specs[0], title=title, comment=comment)


# -- validation ---------------------------------------------------------------

@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:  # truthy when there is something to report
        return bool(self.violations)

    def __len__(self) -> int:
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)


def validate(game: GameTree) -> ValidationReport:
    """Check every structural invariant; problems are returned, not raised."""
    out: list[str] = []
    nodes = game.nodes
    n_players = game.num_players
    if not nodes:
        return ValidationReport(["game has no nodes"])
    if nodes[0].parent is not None:
        out.append("root has a parent")

    seen_parent: dict[int, int] = {}
    for n, node in enumerate(nodes):
        for a, c in enumerate(node.children):
            if not 0 <= c < len(nodes):
                out.append(f"node {n}: child {c} does not exist")
                continue
            if c in seen_parent:
                out.append(f"node {c}: more than one parent")
            seen_parent[c] = n
            if nodes[c].parent != n or nodes[c].parent_action != a:
                out.append(f"node {c}: parent link does not match node {n}")
    for n in range(1, len(nodes)):
        if n not in seen_parent:
            out.append(f"node {n}: unreachable from the root")
    # cycle check: walking parents from any node must reach the root
    for n in range(len(nodes)):
        steps, m = 0, n
        while m is not None and steps <= len(nodes):
            m = nodes[m].parent if 0 <= m < len(nodes) else None
            steps += 1
        if steps > len(nodes):
            out.append(f"node {n}: parent chain contains a cycle")
            break

    for n, node in enumerate(nodes):
        if node.kind == LEAF:
            if node.children:
                out.append(f"node {n}: leaf has children")
            if len(node.utilities) != n_players:
                out.append(f"node {n}: {len(node.utilities)} utilities for {n_players} players")
            elif not all(math.isfinite(u) for u in node.utilities):
                out.append(f"node {n}: non-finite utility")
        elif node.kind == CHANCE:
            if not node.children:
                out.append(f"node {n}: chance node without outcomes")
            if len(node.probs) != len(node.children):
                out.append(f"node {n}: {len(node.probs)} probabilities for {len(node.children)} outcomes")
            if any(p < 0 for p in node.probs):
                out.append(f"node {n}: negative probability")
            total = math.fsum(node.probs)
            if abs(total - 1.0) > PROB_TOL:
                out.append(f"node {n}: probabilities sum {total:.12g}")
        elif node.kind == DECISION:
            if not node.children:
                out.append(f"node {n}: decision node without actions")
            if len(node.actions) != len(node.children):
                out.append(f"node {n}: {len(node.actions)} actions for {len(node.children)} children")
            if node.player is None or not 0 <= node.player < n_players:
                out.append(f"node {n}: unknown player {node.player}")
            if node.infoset is None or not 0 <= node.infoset < len(game.infosets):
                out.append(f"node {n}: no information set")
        else:
            out.append(f"node {n}: unknown kind {node.kind!r}")

    owner: dict[int, int] = {}
    for I in game.infosets:
        if not I.members:
            out.append(f"info set {I.id}: no member nodes")
            continue
        if len(set(I.members)) != len(I.members):
            out.append(f"info set {I.id}: repeated member node")
        for m in I.members:
            if not 0 <= m < len(nodes):
                out.append(f"info set {I.id}: member {m} does not exist")
                continue
            node = nodes[m]
            if node.kind != DECISION:
                out.append(f"info set {I.id}: member {m} is not a decision node")
                continue
            if m in owner:
                out.append(f"node {m}: in info sets {owner[m]} and {I.id}")
            owner[m] = I.id
            if node.player != I.player:
                out.append(f"info set {I.id}: node {m} belongs to player {node.player}, not {I.player}")
            if node.infoset != I.id:
                out.append(f"node {m}: claims info set {node.infoset} but is listed in {I.id}")
        acts = [nodes[m].actions for m in I.members if 0 <= m < len(nodes)]
        if any(len(a) != len(acts[0]) for a in acts):
            out.append(f"info set {I.id}: action-count mismatch")
        elif any(a != acts[0] for a in acts):
            out.append(f"info set {I.id}: action labels differ between members")
    for n, node in enumerate(nodes):
        if node.kind == DECISION and n not in owner:
            out.append(f"node {n}: decision node outside every info set")
    return ValidationReport(out)


@dataclass
class PerfectRecallReport:
    player: int
    violations: dict[int, list[tuple]] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return bool(self.violations)

    def __len__(self) -> int:
        return len(self.violations)


def check_perfect_recall(game: GameTree, player: int) -> PerfectRecallReport:
    """Info sets of ``player`` whose members disagree on the player's own history.

    The report maps each offending info set id to the distinct histories seen.
    """
    report = PerfectRecallReport(player)
    history = _own_histories(game, player)
    for I in game.infosets_of(player):
        seen = list(dict.fromkeys(history[m] for m in I.members))
        if len(seen) > 1:
            report.violations[I.id] = seen
    return report


def _own_histories(game: GameTree, player: int) -> list[tuple]:
    hist: list[tuple] = [()] * len(game.nodes)
    for n, node in enumerate(game.nodes):
        if node.parent is None:
            continue
        p = game.nodes[node.parent]
        h = hist[node.parent]
        if p.is_decision and p.player == player:
            h = h + ((p.infoset, node.parent_action),)
        hist[n] = h
    return hist


def has_perfect_recall(game: GameTree) -> bool:
    return not any(check_perfect_recall(game, p) for p in range(game.num_players))


# -- evaluation ---------------------------------------------------------------

BehavioralProfile = Mapping[int, Sequence[float]]


def expected_utility(game: GameTree, profile: BehavioralProfile) -> np.ndarray:
    """Per-player expected utility of a behavioral profile.

    ``profile`` maps every info-set id to a distribution over its actions.
    """
    for I in game.infosets:
        dist = profile.get(I.id)
        if dist is None:
            raise InvalidProfileError(f"no distribution for info set {I.id}")
        if len(dist) != len(I.actions):
            raise InvalidProfileError(f"info set {I.id}: {len(dist)} probabilities for {len(I.actions)} actions")
        if any(p < -PROFILE_TOL for p in dist) or abs(math.fsum(dist) - 1.0) > PROFILE_TOL:
            raise InvalidProfileError(f"info set {I.id}: not a distribution: {list(dist)}")
    total = np.zeros(game.num_players)
    stack = [(0, 1.0)]
    while stack:
        n, w = stack.pop()
        if w == 0.0:
            continue
        node = game.nodes[n]
        if node.is_leaf:
            total += w * np.asarray(node.utilities)
        elif node.is_chance:
            stack.extend((c, w * p) for c, p in zip(node.children, node.probs))
        else:
            dist = profile[node.infoset]
            stack.extend((c, w * p) for c, p in zip(node.children, dist))
    return total


def uniform_profile(game: GameTree) -> dict[int, list[float]]:
    return {I.id: [1.0 / len(I.actions)] * len(I.actions) for I in game.infosets}


def pure_profile(game: GameTree, choices: Mapping[int, int]) -> dict[int, list[float]]:
    """Profile playing ``choices[infoset]`` with certainty (uniform elsewhere)."""
    prof = uniform_profile(game)
    for i, a in choices.items():
        dist = [0.0] * len(game.infosets[i].actions)
        dist[a] = 1.0
        prof[i] = dist
    return prof


def structurally_equal(g1: GameTree, g2: GameTree) -> bool:
    """Same tree shape, labels, chance probabilities, payoffs and info-set partition."""
    if g1.players != g2.players or len(g1.nodes) != len(g2.nodes):
        return False
    if len(g1.infosets) != len(g2.infosets):
        return False
    for a, b in zip(g1.nodes, g2.nodes):
        if (a.kind, a.children, a.actions, a.player, a.infoset, a.label) != \
           (b.kind, b.children, b.actions, b.player, b.infoset, b.label):
            return False
        if a.probs != b.probs or a.utilities != b.utilities:
            return False
    return all(I.members == J.members and I.player == J.player
               for I, J in zip(g1.infosets, g2.infosets))


def relabel_players(game: GameTree, names: Iterable[str]) -> GameTree:
    return GameTree(tuple(names), game.nodes, game.infosets, game.title, game.comment)
