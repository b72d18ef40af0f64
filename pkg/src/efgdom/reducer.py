"""Iterated removal of dominated actions."""
from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

from .dominance import (STRICT_ONLY, STRICT_THEN_WEAK, CheckConfig, DominanceChecker,
                        DominanceVerdict, NotCheckable)
from .game import GameTree, from_arena

log = logging.getLogger(__name__)

FIXED_POINT = "fixed point"
MAX_ROUNDS = "max rounds"
FULLY_SOLVED = "fully solved"

PER_PLAYER = "per-player"
SIMULTANEOUS = "simultaneous"


class RemovalError(ValueError):
    pass


def remove_actions(game: GameTree, removals) -> GameTree:
    """Delete the subtrees of several (infoset, action index) pairs at once."""
    by_set: dict[int, set[int]] = {}
    for i, a in removals:
        by_set.setdefault(i, set()).add(a)
    nodes = list(game.nodes)
    for i, acts in by_set.items():
        I = game.infosets[i]
        if not all(0 <= a < len(I.actions) for a in acts):
            raise RemovalError(f"info set {i} has no action among {sorted(acts)}")
        if len(acts) >= len(I.actions):
            raise RemovalError(f"refusing to remove every action at info set {i}")
        for m in I.members:
            node = nodes[m]
            keep = [a for a in range(len(node.actions)) if a not in acts]
            nodes[m] = replace(node, children=tuple(node.children[a] for a in keep),
                               actions=tuple(node.actions[a] for a in keep))
    # carry info-set names on every member so they survive losing the first one
    for I in game.infosets:
        for m in I.members:
            nodes[m] = replace(nodes[m], info_name=I.name, info_number=I.number)
    return from_arena(game.players, nodes, game.title, game.comment)


def remove_action(game: GameTree, player: int, infoset: int, action: int) -> GameTree:
    """Copy of ``game`` without ``action`` (an index) at ``infoset``."""
    I = game.infosets[infoset]
    if I.player != player:
        raise RemovalError(f"info set {infoset} belongs to player {I.player}, not {player}")
    return remove_actions(game, [(infoset, action)])


@dataclass
class ReduceConfig:
    """``schedule`` controls when removals take effect within a round.

    ``per-player`` checks and prunes one player at a time, so later players in
    the round see the earlier players' removals. ``simultaneous`` checks every
    player against the round-start game and prunes once at the end.
    """

    mode: str = "strict"
    max_rounds: int | None = None
    order: str = "depth"
    strong_scan_first: bool = True
    eps: float | None = None
    rel_eps: float = 1e-7
    schedule: str = SIMULTANEOUS
    jobs: int = 1
    backend: str = "highs"

    def __post_init__(self):
        if self.mode not in ("strict", "weak"):
            raise ValueError(f"mode must be 'strict' or 'weak', not {self.mode!r}")
        if self.order not in ("depth", "declaration"):
            raise ValueError(f"unknown order {self.order!r}")
        if self.schedule not in (PER_PLAYER, SIMULTANEOUS):
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.max_rounds is not None and self.max_rounds < 1:
            raise ValueError("max_rounds must be at least 1")

    def check_config(self) -> CheckConfig:
        return CheckConfig(mode=STRICT_ONLY if self.mode == "strict" else STRICT_THEN_WEAK,
                           rel_eps=self.rel_eps, eps=self.eps,
                           strong_scan_first=self.strong_scan_first, backend=self.backend)


@dataclass
class Removal:
    player: int
    infoset: str
    infoset_id: int
    action: str
    mode: str
    u1: float | None
    u2: float | None
    u3: float | None = None
    u4: float | None = None
    witness: dict[str, float] | None = None

    def to_dict(self) -> dict:
        return {"player": self.player, "infoset": self.infoset, "infoset_id": self.infoset_id,
                "action": self.action, "mode": self.mode, "u1": self.u1, "u2": self.u2,
                "u3": self.u3, "u4": self.u4, "witness": self.witness}


@dataclass
class Round:
    round: int
    removals: list[Removal] = field(default_factory=list)

    def counts(self, num_players: int) -> list[int]:
        out = [0] * num_players
        for r in self.removals:
            out[r.player] += 1
        return out


@dataclass
class ReductionLog:
    num_players: int
    config: dict
    rounds: list[Round] = field(default_factory=list)
    terminated: str = ""

    def counts(self) -> list[tuple[int, ...]]:
        """Per-round removal counts, one entry per player."""
        return [tuple(r.counts(self.num_players)) for r in self.rounds]

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "rounds": [{"round": r.round, "counts": r.counts(self.num_players),
                        "removals": [x.to_dict() for x in r.removals]} for r in self.rounds],
            "terminated": self.terminated,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, doc: dict) -> "ReductionLog":
        try:
            rounds = [Round(r["round"], [Removal(**x) for x in r["removals"]]) for r in doc["rounds"]]
            num_players = max((len(r["counts"]) for r in doc["rounds"]), default=2)
            return cls(num_players, doc.get("config", {}), rounds, doc["terminated"])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed reduction log: {exc}") from None


def infoset_label(game: GameTree, i: int) -> str:
    I = game.infosets[i]
    return I.name or (str(I.number) if I.number is not None else f"#{i}")


def traversal_order(game: GameTree, players, order: str = "depth") -> list[int]:
    """Multi-action info sets of ``players``, deepest first (ties by id)."""
    sets = [I.id for I in game.infosets if I.player in players and len(I.actions) > 1]
    if order == "depth":
        sets.sort(key=lambda i: (-game.infoset_depth(i), i))
    return sets


_worker_checker: DominanceChecker | None = None


def _init_worker(game, cfg):
    global _worker_checker
    _worker_checker = DominanceChecker(game, cfg)


def _check_in_worker(i):
    return _check_set(_worker_checker, i)


def _check_set(checker: DominanceChecker, i: int) -> list[DominanceVerdict]:
    try:
        return checker.check_infoset(i)
    except NotCheckable:
        return []


def check_sets(game: GameTree, sets: list[int], cfg: CheckConfig, jobs: int = 1):
    """Verdict lists for ``sets`` in the given order (parallel when jobs > 1)."""
    if jobs > 1 and len(sets) > 1:
        with ProcessPoolExecutor(jobs, initializer=_init_worker, initargs=(game, cfg)) as pool:
            return list(pool.map(_check_in_worker, sets, chunksize=max(1, len(sets) // (4 * jobs))))
    checker = DominanceChecker(game, cfg)
    return [_check_set(checker, i) for i in sets]


def _select(game: GameTree, sets: list[int], verdicts) -> list[tuple[int, int, DominanceVerdict]]:
    chosen = []
    for i, vs in zip(sets, verdicts):
        hit = [v for v in vs if v.dominated]
        if len(hit) == len(game.infosets[i].actions):
            # weak dominance can flag every action; keep the first one
            log.info("info set %s: every action flagged, keeping %s",
                     infoset_label(game, i), hit[0].action_label)
            hit = hit[1:]
        chosen += [(i, v.action, v) for v in hit]
    return chosen


def _record(game: GameTree, i: int, v: DominanceVerdict) -> Removal:
    witness = None
    if v.witness is not None:
        witness = {str(k): w for k, w in v.witness.items()}
    return Removal(v.player, infoset_label(game, i), i, v.action_label, v.result,
                   v.u1, v.u2, v.u3, v.u4, witness)


def reduce_iteratively(game: GameTree, config: ReduceConfig | None = None,
                       progress=None) -> tuple[GameTree, ReductionLog]:
    """Remove dominated actions round by round until nothing changes."""
    config = config or ReduceConfig()
    cfg = config.check_config()
    rlog = ReductionLog(game.num_players, {
        "mode": config.mode, "order": config.order, "schedule": config.schedule,
        "strong_scan_first": config.strong_scan_first, "eps": config.eps,
        "rel_eps": config.rel_eps, "max_rounds": config.max_rounds})
    groups = ([[p] for p in range(game.num_players)] if config.schedule == PER_PLAYER
              else [list(range(game.num_players))])
    k = 0
    while True:
        if all(len(I.actions) == 1 for I in game.infosets):
            rlog.terminated = FULLY_SOLVED
            break
        if config.max_rounds is not None and k >= config.max_rounds:
            rlog.terminated = MAX_ROUNDS
            break
        k += 1
        rnd = Round(k)
        for players in groups:
            sets = traversal_order(game, players, config.order)
            verdicts = check_sets(game, sets, cfg, config.jobs)
            chosen = _select(game, sets, verdicts)
            if chosen:
                rnd.removals += [_record(game, i, v) for i, _, v in chosen]
                game = remove_actions(game, [(i, a) for i, a, _ in chosen])
        if progress:
            progress(rnd)
        log.info("round %d: removed %s", k, rnd.counts(game.num_players))
        rlog.rounds.append(rnd)
        if not rnd.removals:
            rlog.terminated = FIXED_POINT
            break
    return game, rlog
