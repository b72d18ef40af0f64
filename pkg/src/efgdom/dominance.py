"""Dominated-action detection.

For an action c at info set I of player i, all four values below are
expected utilities conditional on reaching I, with the protagonist playing
toward I and opponents never taking an action that leads away from I:

* u2: best worst-case value over strategies that avoid c,
* u1: best case (over opponents too) of playing c,
* u4: worst case of playing c,
* u3: best case among strategies that avoid c and still guarantee u2.

c is strictly dominated when u2 > u1, and weakly dominated when u2 = u1 and
u3 > u4 (up to ``eps``).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import lp
from .game import DECISION, GameTree
from .seqform import (MergedAgent, Region, SequenceIndex, _constraints, _payoff_matrix,
                      build_merged_single_agent, build_sequences, merge_opponents,
                      reach_sets, region, split_by_history)

log = logging.getLogger(__name__)

STRICT = "StrictlyDominated"
WEAK = "WeaklyDominated"
NOT_DOMINATED = "NotDominated"
STRONG_STRICT = "StronglyStrict"
STRONG_WEAK = "StronglyWeak"

STRICT_ONLY = "strict-only"
STRICT_THEN_WEAK = "strict-then-weak"


class NotCheckable(ValueError):
    pass


# (u3, u4, eps) of every tie examined in this process, for diagnostics
TIE_RECORDS: list[tuple[float, float, float]] = []


@dataclass
class CheckConfig:
    """``eps`` overrides the relative tolerance ``rel_eps * (1 + max(|u1|, |u2|))``."""

    mode: str = STRICT_THEN_WEAK
    rel_eps: float = 1e-7
    eps: float | None = None
    strong_scan_first: bool = True
    backend: str = "highs"

    def __post_init__(self):
        if self.mode not in (STRICT_ONLY, STRICT_THEN_WEAK):
            raise ValueError(f"unknown mode {self.mode!r}")
        if (self.eps is not None and self.eps <= 0) or self.rel_eps <= 0:
            raise ValueError("tolerance must be positive")

    def tolerance(self, u1: float, u2: float) -> float:
        if self.eps is not None:
            return self.eps
        return self.rel_eps * (1.0 + max(abs(u1), abs(u2)))


@dataclass
class DominanceVerdict:
    player: int
    infoset: int
    action: int
    action_label: str
    result: str
    u1: float | None = None
    u2: float | None = None
    u3: float | None = None
    u4: float | None = None
    witness: dict[int, float] | None = None
    merged_warning: bool = False
    dominating: str | None = None
    anomaly: str | None = None
    margin: float | None = None

    @property
    def dominated(self) -> bool:
        return self.result != NOT_DOMINATED

    def to_dict(self) -> dict:
        return {
            "player": self.player, "infoset": self.infoset, "action": self.action_label,
            "result": self.result, "u1": self.u1, "u2": self.u2, "u3": self.u3, "u4": self.u4,
            "witness": None if self.witness is None else {str(k): v for k, v in self.witness.items()},
            "merged_warning": self.merged_warning, "dominating": self.dominating,
            "anomaly": self.anomaly,
        }


# -- strong dominance ------------------------------------------------------------

def _leaf_payoffs_after(game: GameTree, infoset: int, action: int) -> np.ndarray:
    I = game.infosets[infoset]
    vals = [game.nodes[l].utilities[I.player]
            for m in I.members for l in game.subtree_leaves(game.nodes[m].children[action])]
    return np.asarray(vals)


def strong_scan(game: GameTree, infoset: int) -> list[tuple[int, int, str]]:
    """(dominated, dominating, "strict"|"weak") triples by direct leaf comparison.

    b strongly dominates a when every leaf after b pays the player at least as
    much as every leaf after a; strictly when the inequality is always strict.
    Comparisons are exact.
    """
    I = game.infosets[infoset]
    payoffs = [_leaf_payoffs_after(game, infoset, a) for a in range(len(I.actions))]
    found = []
    for a, pa in enumerate(payoffs):
        for b, pb in enumerate(payoffs):
            if a == b or not pa.size or not pb.size:
                continue
            if pb.min() > pa.max():
                found.append((a, b, "strict"))
            elif pb.min() >= pa.max() and pb.max() > pa.min():
                found.append((a, b, "weak"))
    return found


# -- LP checks ------------------------------------------------------------------------

@dataclass
class U2Result:
    value: float
    x: np.ndarray
    mu: np.ndarray
    lam: np.ndarray
    gamma: dict[int, float]


class _Context:
    """Sequence-form data for one info set of one (two-player) game."""

    def __init__(self, checker: "DominanceChecker", infoset: int):
        game = checker.game
        self.game = game
        self.infoset = infoset
        self.player = game.infosets[infoset].player
        self.opp = 1 - self.player
        self.own: SequenceIndex = checker.seqs[self.player]
        self.other: SequenceIndex = checker.seqs[self.opp]
        self.E, self.e = checker.constraints[self.player]
        self.F, self.f = checker.constraints[self.opp]
        self.region: Region = region(game, infoset)
        scale = 1.0 / self.region.mass if self.region.mass > 0 else 0.0
        self.A = _payoff_matrix(game, self.own, self.other, self.player, self.region.leaves, scale)
        self.backend = checker.config.backend
        self._merged: dict[int, MergedAgent] = {}

    def reach(self, action: int):
        return reach_sets(self.game, self.player, self.infoset, action,
                          {self.player: self.own, self.opp: self.other}, self.region)

    def merged(self, action: int) -> MergedAgent:
        if action not in self._merged:
            self._merged[action] = build_merged_single_agent(self.game, self.player, self.infoset, action)
        return self._merged[action]

    # u2 variables: x (d_own, >= 0) then mu (c_opp, free)
    def u2_problem(self, action: int):
        rs = self.reach(action)
        d, c = self.own.d, self.other.c
        zero = np.zeros(self.other.d, dtype=bool)
        zero[list(rs.zero_of(self.opp))] = True
        keep = np.flatnonzero(~zero)
        A_ge = sp.hstack([self.A.T[keep], -self.F.T[keep]]).tocsr()
        A_eq = sp.hstack([self.E, sp.csr_matrix((self.E.shape[0], c))]).tocsr()
        obj = np.concatenate([np.zeros(d), self.f])
        lower = np.concatenate([np.zeros(d), np.full(c, -np.inf)])
        upper = np.full(d + c, np.inf)
        prob = lp.LpProblem(obj, "max", A_eq=A_eq, b_eq=self.e, A_ge=A_ge,
                            b_ge=np.zeros(keep.size), lower=lower, upper=upper)
        prob.fix(rs.target, 0.0)
        for k in rs.own:
            prob.fix(k, 1.0)
        return prob, rs, zero

    def u2(self, action: int) -> U2Result:
        prob, rs, zero = self.u2_problem(action)
        sol = lp.solve(prob, self.backend)
        if sol.status == lp.INFEASIBLE:
            raise NotCheckable(f"no strategy reaches info set {self.infoset} without action {action}")
        sol.require()
        d = self.own.d
        x, mu = sol.x[:d], sol.x[d:]
        slack = self.A.T @ x - self.F.T @ mu
        gamma = {int(k): float(slack[k]) for k in np.flatnonzero(zero)}
        return U2Result(sol.value, x, mu, -mu, gamma)

    def merged_problem(self, action: int, sense: str, avoid: bool = False):
        m = self.merged(action)
        prob = lp.LpProblem(m.a, sense, A_eq=m.E, b_eq=m.e)
        for k in m.away + (m.target if avoid else m.target_other):
            prob.fix(k, 0.0)
        return prob, m

    def u1(self, action: int, sense: str = "max") -> tuple[float, bool]:
        prob, m = self.merged_problem(action, sense)
        sol = lp.solve(prob, self.backend)
        if sol.status == lp.INFEASIBLE:
            raise NotCheckable(f"action {action} cannot be played at info set {self.infoset}")
        sol.require()
        return sol.value, m.warning

    def u3(self, action: int, u2: float, pin_tol: float) -> float:
        """Best case over merged plans that avoid c, coupled to a u2-optimal x.

        Variables: x, mu as in u2, then the merged plan xbar. Each merged
        sequence's weight is bounded by the weight x puts on its protagonist
        projection.
        """
        p2, rs, zero = self.u2_problem(action)
        pm, m = self.merged_problem(action, "max", avoid=True)
        n2, nm = p2.n, pm.n
        proj = self._projection(m)
        rows = np.arange(1, nm)
        link = sp.csr_matrix(
            (np.concatenate([np.ones(nm - 1), -np.ones(nm - 1)]),
             (np.concatenate([rows - 1, rows - 1]), np.concatenate([n2 + rows, proj[1:]]))),
            shape=(nm - 1, n2 + nm))
        pin = sp.csr_matrix(np.concatenate([p2.objective, np.zeros(nm)])[None, :])
        prob = lp.LpProblem(
            np.concatenate([np.zeros(n2), pm.objective]), "max",
            A_eq=sp.block_diag([p2.A_eq, pm.A_eq]).tocsr(),
            b_eq=np.concatenate([p2.b_eq, pm.b_eq]),
            A_ge=sp.vstack([sp.hstack([p2.A_ge, sp.csr_matrix((p2.A_ge.shape[0], nm))]), pin]).tocsr(),
            b_ge=np.concatenate([p2.b_ge, [u2 - pin_tol]]),
            A_le=link, b_le=np.zeros(nm - 1),
            lower=np.concatenate([p2.lower, pm.lower]),
            upper=np.concatenate([p2.upper, pm.upper]),
        )
        sol = lp.solve(prob, self.backend)
        if not sol.ok:
            raise lp.LpError(sol.status, f"weak-dominance LP at info set {self.infoset}")
        return sol.value

    def _projection(self, m: MergedAgent) -> np.ndarray:
        """Protagonist sequence index of each merged sequence's history."""
        proj = np.zeros(m.d, dtype=np.int64)
        for k in range(1, m.d):
            parent, mk, _ = m.seqs.sequences[k]
            J, _ = m.infosets[mk]
            if self.game.infosets[J].player == self.player:
                a = k - m.seqs.index[(mk, 0)]
                proj[k] = self.own.index[(J, a)]
            else:
                proj[k] = proj[parent]
        return proj


class DominanceChecker:
    """Runs checks on one game, caching sequence-form data across calls.

    Games with more than two players are checked on their opponent-merged
    two-player version (one per protagonist).
    """

    def __init__(self, game: GameTree, config: CheckConfig | None = None):
        self.original = game
        self.config = config or CheckConfig()
        self._merged_games: dict[int, DominanceChecker] = {}
        self.game = game
        self.split = False
        if game.num_players == 2:
            for p in (0, 1):
                game, split = split_by_history(game, p)
                self.split |= split
            self.game = game
            self.seqs = {p: build_sequences(game, p) for p in (0, 1)}
            self.constraints = {p: _constraints(self.seqs[p], dense=False) for p in (0, 1)}
        self._contexts: dict[int, _Context] = {}

    def _for_player(self, player: int) -> tuple["DominanceChecker", int]:
        if self.game.num_players == 2:
            return self, player
        if player not in self._merged_games:
            self._merged_games[player] = DominanceChecker(merge_opponents(self.game, player), self.config)
        return self._merged_games[player], 0

    def context(self, infoset: int) -> _Context:
        player = self.original.infosets[infoset].player
        checker, _ = self._for_player(player)
        if infoset not in checker._contexts:
            checker._contexts[infoset] = _Context(checker, infoset)
        return checker._contexts[infoset]

    def _validate(self, player: int, infoset: int, action: int):
        I = self.original.infosets[infoset]
        if I.player != player:
            raise ValueError(f"info set {infoset} belongs to player {I.player}, not {player}")
        if not 0 <= action < len(I.actions):
            raise ValueError(f"info set {infoset} has no action {action}")
        if len(I.actions) < 2:
            raise NotCheckable(f"info set {infoset} has a single action")

    def u2_maxmin(self, player: int, infoset: int, action: int) -> U2Result:
        self._validate(player, infoset, action)
        return self.context(infoset).u2(action)

    def u1_bestcase(self, player: int, infoset: int, action: int) -> float:
        self._validate(player, infoset, action)
        return self.context(infoset).u1(action, "max")[0]

    def u4_worstcase(self, player: int, infoset: int, action: int) -> float:
        self._validate(player, infoset, action)
        return self.context(infoset).u1(action, "min")[0]

    def u3_weak(self, player: int, infoset: int, action: int, u2: float) -> float:
        self._validate(player, infoset, action)
        ctx = self.context(infoset)
        return ctx.u3(action, u2, 1e-9 * (1 + abs(u2)))

    def check(self, player: int, infoset: int, action: int,
              strong: tuple[int, str] | None = None) -> DominanceVerdict:
        """Verdict for one action; ``strong`` passes a strong-scan hit (dominator, kind)."""
        self._validate(player, infoset, action)
        cfg = self.config
        ctx = self.context(infoset)
        label = self.original.infosets[infoset].actions[action]
        r2 = ctx.u2(action)
        u2 = r2.value
        u1, warn = ctx.u1(action, "max")
        warn = warn or self._for_player(player)[0].split
        eps = cfg.tolerance(u1, u2)
        v = DominanceVerdict(player, infoset, action, label, NOT_DOMINATED, u1, u2, merged_warning=warn)
        witness = {int(k): float(w) for k, w in enumerate(r2.x) if abs(w) > 1e-12}
        if strong is not None:
            v.dominating = self.original.infosets[infoset].actions[strong[0]]
        if u2 > u1 + eps:
            v.result, v.witness = STRICT, witness
        elif u2 >= u1 - eps and cfg.mode == STRICT_THEN_WEAK:
            v.u3 = ctx.u3(action, u2, 1e-9 * (1 + abs(u2)))
            v.u4 = ctx.u1(action, "min")[0]
            TIE_RECORDS.append((v.u3, v.u4, eps))
            if v.u3 < v.u4 - eps:
                v.anomaly = f"u3 {v.u3!r} < u4 {v.u4!r}"
                log.warning("info set %d action %s: %s", infoset, label, v.anomaly)
            if v.u3 > v.u4 + eps:
                v.result, v.witness = WEAK, witness
        if strong is not None:
            kind = strong[1]
            if v.result == STRICT and kind == "strict":
                v.result = STRONG_STRICT
            elif v.result == WEAK and kind == "weak":
                v.result = STRONG_WEAK
            elif v.result == NOT_DOMINATED and (kind == "strict" or cfg.mode == STRICT_THEN_WEAK):
                v.anomaly = f"strong {kind} dominance not confirmed by LP (result {v.result})"
                log.warning("info set %d action %s: %s", infoset, label, v.anomaly)
        return v

    def check_infoset(self, infoset: int) -> list[DominanceVerdict]:
        """Verdicts for every action at an info set (empty for single-action sets)."""
        I = self.original.infosets[infoset]
        if len(I.actions) < 2:
            return []
        hits: dict[int, tuple[int, str]] = {}
        if self.config.strong_scan_first:
            for a, b, kind in strong_scan(self.original, infoset):
                if kind == "weak" and self.config.mode == STRICT_ONLY:
                    continue
                if a not in hits or (kind == "strict" and hits[a][1] == "weak"):
                    hits[a] = (b, kind)
        return [self.check(I.player, infoset, a, hits.get(a)) for a in range(len(I.actions))]


def check_action(game: GameTree, player: int, infoset: int, action: int,
                 config: CheckConfig | None = None) -> DominanceVerdict:
    checker = DominanceChecker(game, config)
    hit = None
    if checker.config.strong_scan_first:
        for a, b, kind in strong_scan(game, infoset):
            if a == action and (hit is None or kind == "strict"):
                if kind == "weak" and checker.config.mode == STRICT_ONLY:
                    continue
                hit = (b, kind)
    return checker.check(player, infoset, action, hit)


def u2_maxmin(game, player, infoset, action) -> U2Result:
    return DominanceChecker(game).u2_maxmin(player, infoset, action)


def u1_bestcase(game, player, infoset, action) -> float:
    return DominanceChecker(game).u1_bestcase(player, infoset, action)


def u4_worstcase(game, player, infoset, action) -> float:
    return DominanceChecker(game).u4_worstcase(player, infoset, action)


def u3_weak(game, player, infoset, action, u2) -> float:
    return DominanceChecker(game).u3_weak(player, infoset, action, u2)


def witness_is_valid(game: GameTree, player: int, infoset: int, action: int,
                     witness: dict[int, float], tol: float = 1e-8) -> bool:
    """Re-check a witness plan against flow, reach and avoidance constraints."""
    g = game if game.num_players == 2 else merge_opponents(game, player)
    p = player if game.num_players == 2 else 0
    seqs = build_sequences(g, p)
    E, e = _constraints(seqs, dense=True)
    x = np.zeros(seqs.d)
    for k, w in witness.items():
        x[int(k)] = w
    rs = reach_sets(g, p, infoset, action, {p: seqs})
    return bool(np.abs(E @ x - e).max() <= tol and x.min() >= -tol
                and abs(x[rs.target]) <= tol and all(abs(x[k] - 1) <= tol for k in rs.own))
