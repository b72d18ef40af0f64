"""Exact preflop all-in equities.

Every two-card-versus-two-card matchup is reduced to a representative of its
suit-isomorphism class; each class is settled by enumerating all
C(48, 5) = 1,712,304 boards. Class results are then aggregated into a table
keyed by the ordered pair of canonical hands, which is what the all-in-or-fold
game needs.
"""
from __future__ import annotations

import csv
import itertools
import logging
import os
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
from numba import njit

from . import cards as C

log = logging.getLogger(__name__)

N_BOARDS = 1_712_304
N_COMBOS = 1326
N_DEALS = 1326 * 1225
CSV_HEADER = ["hand1", "hand2", "weight", "equity_num", "equity_den"]
DEFAULT_TABLE = Path(__file__).parent / "data" / "aof_equity.csv"
MC_CHUNK = 100_000


@njit(cache=True)
def _score(key, suits, c1, c2, board, rank_keys, rank_table, flush_table):
    value = rank_table[key + rank_keys[c1 >> 2] + rank_keys[c2 >> 2]]
    s = suits + (1 << (4 * (c1 & 3))) + (1 << (4 * (c2 & 3)))
    if ((s + 0x3333) & 0x8888) != 0:
        for suit in range(4):
            if (s >> (4 * suit)) & 0xF >= 5:
                mask = 0
                for k in range(5):
                    if board[k] & 3 == suit:
                        mask |= 1 << (board[k] >> 2)
                if c1 & 3 == suit:
                    mask |= 1 << (c1 >> 2)
                if c2 & 3 == suit:
                    mask |= 1 << (c2 >> 2)
                fv = flush_table[mask]
                if fv > value:
                    value = fv
    return value


@njit(cache=True)
def _showdown_counts(a1, a2, b1, b2, rank_keys, rank_table, flush_table):
    """(wins, ties, losses) of hand a against hand b over every board."""
    deck = np.empty(48, dtype=np.int64)
    n = 0
    for c in range(52):
        if c != a1 and c != a2 and c != b1 and c != b2:
            deck[n] = c
            n += 1
    rk = np.empty(48, dtype=np.int64)
    sk = np.empty(48, dtype=np.int64)
    for i in range(48):
        rk[i] = rank_keys[deck[i] >> 2]
        sk[i] = 1 << (4 * (deck[i] & 3))
    board = np.empty(5, dtype=np.int64)
    wins = 0
    ties = 0
    losses = 0
    for i0 in range(44):
        board[0] = deck[i0]
        k0 = rk[i0]
        s0 = sk[i0]
        for i1 in range(i0 + 1, 45):
            board[1] = deck[i1]
            k1 = k0 + rk[i1]
            s1 = s0 + sk[i1]
            for i2 in range(i1 + 1, 46):
                board[2] = deck[i2]
                k2 = k1 + rk[i2]
                s2 = s1 + sk[i2]
                for i3 in range(i2 + 1, 47):
                    board[3] = deck[i3]
                    k3 = k2 + rk[i3]
                    s3 = s2 + sk[i3]
                    for i4 in range(i3 + 1, 48):
                        board[4] = deck[i4]
                        k4 = k3 + rk[i4]
                        s4 = s3 + sk[i4]
                        va = _score(k4, s4, a1, a2, board, rank_keys, rank_table, flush_table)
                        vb = _score(k4, s4, b1, b2, board, rank_keys, rank_table, flush_table)
                        if va > vb:
                            wins += 1
                        elif va == vb:
                            ties += 1
                        else:
                            losses += 1
    return wins, ties, losses


def _check_combo(c1: int, c2: int, c3: int, c4: int) -> None:
    cs = (c1, c2, c3, c4)
    if len(set(cs)) != 4:
        raise ValueError("hands share a card")
    for c in cs:
        if not 0 <= c < 52:
            raise ValueError(f"card out of range: {c}")


def showdown_counts(hand1, hand2) -> tuple[int, int, int]:
    """Exact (wins, ties, losses) of ``hand1`` versus ``hand2``."""
    (a1, a2), (b1, b2) = hand1, hand2
    _check_combo(a1, a2, b1, b2)
    return tuple(int(v) for v in _showdown_counts(a1, a2, b1, b2, *C.tables()))


def equity_exact(hand1, hand2) -> Fraction:
    """Exact equity of ``hand1`` against ``hand2``, ties counting one half."""
    wins, ties, _ = showdown_counts(hand1, hand2)
    return Fraction(2 * wins + ties, 2 * N_BOARDS)


def equity_monte_carlo(hand1, hand2, samples: int, seed: int = 0) -> tuple[float, float]:
    """Sampled equity and its standard error."""
    (a1, a2), (b1, b2) = hand1, hand2
    _check_combo(a1, a2, b1, b2)
    rng = np.random.default_rng(seed)
    deck = np.array([c for c in range(52) if c not in (a1, a2, b1, b2)])
    keys, rank_table, flush_table = C.tables()
    total = total_sq = 0.0
    for start in range(0, samples, MC_CHUNK):
        n = min(MC_CHUNK, samples - start)
        # five distinct cards per row: the positions of the 5 smallest keys
        boards = deck[np.argpartition(rng.random((n, 48)), 5, axis=1)[:, :5]]
        va = _vector_values(boards, a1, a2, keys, rank_table, flush_table)
        vb = _vector_values(boards, b1, b2, keys, rank_table, flush_table)
        score = (va > vb) + 0.5 * (va == vb)
        total += score.sum()
        total_sq += (score * score).sum()
    mean = total / samples
    var = (total_sq - samples * mean * mean) / (samples - 1) if samples > 1 else 0.0
    return float(mean), float(np.sqrt(max(var, 0.0) / samples))


@njit(cache=True)
def _vector_values(boards, c1, c2, rank_keys, rank_table, flush_table):
    out = np.empty(boards.shape[0], dtype=np.int64)
    for n in range(boards.shape[0]):
        key = 0
        suits = 0
        for k in range(5):
            key += rank_keys[boards[n, k] >> 2]
            suits += 1 << (4 * (boards[n, k] & 3))
        out[n] = _score(key, suits, c1, c2, boards[n], rank_keys, rank_table, flush_table)
    return out


# -- suit-isomorphism classes -------------------------------------------------

def all_combos() -> np.ndarray:
    """The 1326 two-card combos as (high card, low card) rows."""
    return np.array([(b, a) for a, b in itertools.combinations(range(52), 2)], dtype=np.int64)


def _deal_arrays() -> tuple[np.ndarray, np.ndarray]:
    combos = all_combos()
    i, j = np.meshgrid(np.arange(N_COMBOS), np.arange(N_COMBOS), indexing="ij")
    i, j = i.ravel(), j.ravel()
    a, b = combos[i], combos[j]
    disjoint = (
        (a[:, 0] != b[:, 0]) & (a[:, 0] != b[:, 1]) & (a[:, 1] != b[:, 0]) & (a[:, 1] != b[:, 1])
    )
    return i[disjoint], j[disjoint]


def _canonical_codes(cards4: np.ndarray) -> np.ndarray:
    """Minimum encoding of each (a_hi, a_lo, b_hi, b_lo) row over suit relabelings."""
    best = None
    for perm in itertools.permutations(range(4)):
        p = np.array(perm, dtype=np.int64)
        mapped = (cards4 // 4) * 4 + p[cards4 % 4]
        a = np.sort(mapped[:, :2], axis=1)[:, ::-1]
        b = np.sort(mapped[:, 2:], axis=1)[:, ::-1]
        code = ((a[:, 0] * 52 + a[:, 1]) * 52 + b[:, 0]) * 52 + b[:, 1]
        best = code if best is None else np.minimum(best, code)
    return best


def _decode(code: int) -> tuple[int, int, int, int]:
    b_lo = code % 52
    code //= 52
    b_hi = code % 52
    code //= 52
    return code // 52, code % 52, b_hi, b_lo


@dataclass
class MatchupClasses:
    """Ordered concrete deals grouped by suit-isomorphism class."""

    deal_class: np.ndarray      # class index per ordered concrete deal
    codes: np.ndarray           # canonical code per class
    mirror: np.ndarray          # class index of the swapped matchup
    counts: np.ndarray          # number of concrete ordered deals per class
    deal_hands: tuple[np.ndarray, np.ndarray]  # canonical-hand index of each side per deal

    def representative(self, k: int) -> tuple[int, int, int, int]:
        return _decode(int(self.codes[k]))


def matchup_classes() -> MatchupClasses:
    combos = all_combos()
    i, j = _deal_arrays()
    cards4 = np.concatenate([combos[i], combos[j]], axis=1)
    codes = _canonical_codes(cards4)
    swapped = _canonical_codes(np.concatenate([combos[j], combos[i]], axis=1))
    uniq, deal_class, counts = np.unique(codes, return_inverse=True, return_counts=True)
    mirror = np.searchsorted(uniq, swapped[np.unique(deal_class, return_index=True)[1]])
    hands = C.canonical_hands()
    hand_index = {h: n for n, h in enumerate(hands)}
    combo_hand = np.array([hand_index[C.hand_of_combo(int(a), int(b))] for a, b in combos])
    return MatchupClasses(deal_class, uniq, mirror, counts, (combo_hand[i], combo_hand[j]))


# -- tables -------------------------------------------------------------------

@dataclass
class EquityTable:
    """Equity of canonical hand pairs, aggregated over concrete deals.

    ``weight[h1, h2]`` counts ordered concrete deals (card removal respected)
    and ``wins2[h1, h2]`` is the summed ``2*wins + ties`` over those deals,
    so the exact equity is ``wins2 / (2 * N_BOARDS * weight)``.
    """

    hands: list
    weight: np.ndarray
    wins2: np.ndarray

    def index(self, hand) -> int:
        code = hand if isinstance(hand, str) else hand.code
        return self._codes[code]

    def __post_init__(self):
        self._codes = {h.code: n for n, h in enumerate(self.hands)}

    def equity(self, h1, h2) -> Fraction:
        a, b = self.index(h1), self.index(h2)
        return Fraction(int(self.wins2[a, b]), 2 * N_BOARDS * int(self.weight[a, b]))

    def rows(self):
        for a, h1 in enumerate(self.hands):
            for b, h2 in enumerate(self.hands):
                eq = Fraction(int(self.wins2[a, b]), 2 * N_BOARDS * int(self.weight[a, b]))
                yield h1.code, h2.code, int(self.weight[a, b]), eq.numerator, eq.denominator

    def write_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(path.suffix + ".tmp")
        with open(tmp, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(CSV_HEADER)
            w.writerows(self.rows())
        os.replace(tmp, path)

    @classmethod
    def read_csv(cls, path) -> "EquityTable":
        hands = C.canonical_hands()
        index = {h.code: n for n, h in enumerate(hands)}
        weight = np.zeros((169, 169), dtype=np.int64)
        wins2 = np.zeros((169, 169), dtype=object)
        seen = 0
        with open(path, newline="") as f:
            reader = csv.reader(f)
            if next(reader) != CSV_HEADER:
                raise ValueError(f"{path}: unexpected header")
            for row in reader:
                h1, h2, wt, num, den = row
                a, b = index[h1], index[h2]
                wt, eq = int(wt), Fraction(int(num), int(den))
                scaled = eq * 2 * N_BOARDS * wt
                if scaled.denominator != 1:
                    raise ValueError(f"{path}: equity {h1} vs {h2} inconsistent with weight")
                weight[a, b] = wt
                wins2[a, b] = int(scaled)
                seen += 1
        if seen != 169 * 169:
            raise ValueError(f"{path}: expected {169 * 169} rows, found {seen}")
        return cls(hands, weight, wins2.astype(np.int64))


def class_results(classes: MatchupClasses, cache_path=None, progress=None) -> np.ndarray:
    """``2*wins + ties`` for every class, resuming from ``cache_path`` if present."""
    n = len(classes.codes)
    result = np.full(n, -1, dtype=np.int64)
    if cache_path is not None and Path(cache_path).exists():
        try:
            cached = np.load(cache_path)
            if cached.shape == (n,):
                result = cached.astype(np.int64)
        except (OSError, ValueError):
            log.warning("ignoring unreadable class cache %s", cache_path)
    keys, rank_table, flush_table = C.tables()
    done_since_save = 0
    for k in range(n):
        if result[k] >= 0:
            continue
        m = classes.mirror[k]
        if result[m] >= 0:
            result[k] = 2 * N_BOARDS - result[m]
            continue
        a1, a2, b1, b2 = classes.representative(k)
        w, t, l = _showdown_counts(a1, a2, b1, b2, keys, rank_table, flush_table)
        result[k] = 2 * w + t
        result[m] = 2 * l + t
        done_since_save += 1
        if progress is not None:
            progress(k, n)
        if cache_path is not None and done_since_save >= 500:
            np.save(cache_path, result)
            done_since_save = 0
    if cache_path is not None:
        np.save(cache_path, result)
    return result


def aggregate(classes: MatchupClasses, results: np.ndarray) -> EquityTable:
    h1, h2 = classes.deal_hands
    weight = np.zeros((169, 169), dtype=np.int64)
    wins2 = np.zeros((169, 169), dtype=np.int64)
    np.add.at(weight, (h1, h2), 1)
    np.add.at(wins2, (h1, h2), results[classes.deal_class])
    return EquityTable(C.canonical_hands(), weight, wins2)


def build_equity_table(cache_path=None, class_cache=None, progress=None) -> EquityTable:
    """Load the persisted table at ``cache_path`` or compute (and persist) it.

    A corrupt table file is recomputed with a warning. ``class_cache`` is an
    optional ``.npy`` checkpoint of per-class results so an interrupted build
    resumes where it stopped.
    """
    if cache_path is not None and Path(cache_path).exists():
        try:
            return EquityTable.read_csv(cache_path)
        except (ValueError, KeyError, OSError) as exc:
            log.warning("equity table %s unusable (%s); recomputing", cache_path, exc)
    classes = matchup_classes()
    table = aggregate(classes, class_results(classes, class_cache, progress))
    if cache_path is not None:
        table.write_csv(cache_path)
    return table


def load_default_table() -> EquityTable:
    path = os.environ.get("EFG_EQUITY_TABLE") or DEFAULT_TABLE
    return EquityTable.read_csv(path)


def monte_carlo_table(samples: int, seed: int = 0) -> EquityTable:
    """Sampled stand-in for the exact table: one sampled class equity per class.

    Borderline dominance verdicts can flip under sampling noise.
    """
    classes = matchup_classes()
    rng = np.random.default_rng(seed)
    keys, rank_table, flush_table = C.tables()
    n = len(classes.codes)
    result = np.full(n, -1, dtype=np.int64)
    for k in range(n):
        if result[k] >= 0:
            continue
        m = classes.mirror[k]
        a1, a2, b1, b2 = classes.representative(k)
        deck = np.array([c for c in range(52) if c not in (a1, a2, b1, b2)])
        boards = deck[np.argpartition(rng.random((samples, 48)), 5, axis=1)[:, :5]]
        va = _vector_values(boards, a1, a2, keys, rank_table, flush_table)
        vb = _vector_values(boards, b1, b2, keys, rank_table, flush_table)
        # rescale sampled counts onto the board total so the table stays integral
        w2 = int(round((2 * (va > vb).sum() + (va == vb).sum()) * N_BOARDS / samples))
        result[k] = w2
        if m != k:
            result[m] = 2 * N_BOARDS - w2
    return aggregate(classes, result)
