"""Cards, canonical preflop hands and a table-driven 7-card evaluator.

A card is an integer ``rank * 4 + suit`` with ranks 0..12 for deuce..ace and
suits 0..3 for clubs, diamonds, hearts, spades.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

RANKS = "23456789TJQKA"
SUITS = "cdhs"

# Per-rank keys whose sums over any 7-card rank multiset (at most four of a
# rank) are pairwise distinct; checked in ``_rank_table``.
RANK_KEYS = (0, 1, 5, 22, 98, 453, 2031, 8698, 22854, 83661, 262349, 636345, 1479181)

HIGH_CARD, PAIR, TWO_PAIR, TRIPS, STRAIGHT, FLUSH, FULL_HOUSE, QUADS, STRAIGHT_FLUSH = range(9)
CATEGORY_NAMES = (
    "high card", "pair", "two pair", "three of a kind", "straight",
    "flush", "full house", "four of a kind", "straight flush",
)


def card(text: str) -> int:
    rank = RANKS.index(text[0].upper())
    suit = SUITS.index(text[1].lower())
    return rank * 4 + suit


def card_str(c: int) -> str:
    return RANKS[c // 4] + SUITS[c % 4]


def parse_cards(text: str) -> list[int]:
    text = text.replace(" ", "")
    if len(text) % 2:
        raise ValueError(f"odd-length card string: {text!r}")
    return [card(text[i:i + 2]) for i in range(0, len(text), 2)]


def _pack(category: int, kickers) -> int:
    value = category
    kickers = list(kickers) + [0] * (5 - len(kickers))
    for k in kickers[:5]:
        value = (value << 4) | k
    return value


def category_of(value: int) -> int:
    return value >> 20


def _straight_top(mask: int) -> int:
    """Highest straight top rank present in a 13-bit rank mask, or -1."""
    wheel = (1 << 12) | 0b1111
    for top in range(12, 3, -1):
        run = 0b11111 << (top - 4)
        if mask & run == run:
            return top
    if mask & wheel == wheel:
        return 3
    return -1


def _rank_only_value(counts: tuple[int, ...]) -> int:
    """Best 5-card value ignoring suits, from per-rank counts."""
    mask = 0
    for r, n in enumerate(counts):
        if n:
            mask |= 1 << r
    by_count = sorted(((n, r) for r, n in enumerate(counts) if n), reverse=True)
    quads = [r for n, r in by_count if n == 4]
    trips = [r for n, r in by_count if n == 3]
    pairs = [r for n, r in by_count if n == 2]
    singles_desc = [r for r in range(12, -1, -1) if counts[r]]

    if quads:
        q = quads[0]
        kicker = max(r for r in singles_desc if r != q)
        return _pack(QUADS, [q, kicker])
    if trips and (len(trips) > 1 or pairs):
        t = trips[0]
        rest = trips[1:] + pairs
        return _pack(FULL_HOUSE, [t, max(rest)])
    top = _straight_top(mask)
    if top >= 0:
        return _pack(STRAIGHT, [top])
    if trips:
        t = trips[0]
        kick = [r for r in singles_desc if r != t][:2]
        return _pack(TRIPS, [t] + kick)
    if len(pairs) >= 2:
        p1, p2 = sorted(pairs, reverse=True)[:2]
        kick = [r for r in singles_desc if r not in (p1, p2)][:1]
        return _pack(TWO_PAIR, [p1, p2] + kick)
    if pairs:
        p = pairs[0]
        kick = [r for r in singles_desc if r != p][:3]
        return _pack(PAIR, [p] + kick)
    return _pack(HIGH_CARD, singles_desc[:5])


def _flush_value(mask: int) -> int:
    """Value of the best hand made from >=5 suited cards with rank mask."""
    top = _straight_top(mask)
    if top >= 0:
        return _pack(STRAIGHT_FLUSH, [top])
    ranks = [r for r in range(12, -1, -1) if mask >> r & 1][:5]
    return _pack(FLUSH, ranks)


@lru_cache(maxsize=None)
def _rank_table() -> np.ndarray:
    size = 4 * RANK_KEYS[12] + 3 * RANK_KEYS[11] + 1
    table = np.full(size, -1, dtype=np.int32)
    for combo in itertools.combinations_with_replacement(range(13), 7):
        counts = [0] * 13
        for r in combo:
            counts[r] += 1
        if max(counts) > 4:
            continue
        key = sum(RANK_KEYS[r] for r in combo)
        value = _rank_only_value(tuple(counts))
        if table[key] != -1 and table[key] != value:
            raise AssertionError("rank keys are not collision-free")
        table[key] = value
    return table


@lru_cache(maxsize=None)
def _flush_table() -> np.ndarray:
    table = np.zeros(1 << 13, dtype=np.int32)
    for mask in range(1 << 13):
        if bin(mask).count("1") >= 5:
            table[mask] = _flush_value(mask)
    return table


def tables() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(rank keys, rank table, flush table) for the compiled enumerators."""
    return np.array(RANK_KEYS, dtype=np.int64), _rank_table(), _flush_table()


def evaluate7(cards) -> int:
    """Strength of the best 5-card hand within 7 distinct cards.

    Larger is better; equal values tie.
    """
    cards = list(cards)
    if len(cards) != 7:
        raise ValueError(f"expected 7 cards, got {len(cards)}")
    if len(set(cards)) != 7:
        raise ValueError("duplicate card")
    for c in cards:
        if not 0 <= c < 52:
            raise ValueError(f"card out of range: {c}")
    key = 0
    suit_masks = [0, 0, 0, 0]
    for c in cards:
        key += RANK_KEYS[c // 4]
        suit_masks[c % 4] |= 1 << (c // 4)
    value = int(_rank_table()[key])
    for m in suit_masks:
        if bin(m).count("1") >= 5:
            value = max(value, int(_flush_table()[m]))
    return value


# -- canonical starting hands -------------------------------------------------

@dataclass(frozen=True, order=True)
class CanonicalHand:
    high: int
    low: int
    suited: bool

    @property
    def code(self) -> str:
        if self.high == self.low:
            return RANKS[self.high] * 2
        return RANKS[self.high] + RANKS[self.low] + ("s" if self.suited else "o")

    @property
    def is_pair(self) -> bool:
        return self.high == self.low

    @property
    def multiplicity(self) -> int:
        if self.is_pair:
            return 6
        return 4 if self.suited else 12

    def combos(self) -> list[tuple[int, int]]:
        """Concrete two-card combos, each as (higher card, lower card)."""
        out = []
        for s1 in range(4):
            for s2 in range(4):
                if self.is_pair:
                    if s1 < s2:
                        out.append((self.high * 4 + s2, self.low * 4 + s1))
                elif self.suited == (s1 == s2):
                    out.append((self.high * 4 + s1, self.low * 4 + s2))
        return out

    def __str__(self) -> str:
        return self.code


def canonical_hands() -> list[CanonicalHand]:
    """All 169 hands, ordered pairs first (AA..22), then suited, then offsuit,
    each block by descending high card then descending low card."""
    pairs = [CanonicalHand(r, r, False) for r in range(12, -1, -1)]
    suited = [CanonicalHand(h, l, True) for h in range(12, -1, -1) for l in range(h - 1, -1, -1)]
    offsuit = [CanonicalHand(h, l, False) for h in range(12, -1, -1) for l in range(h - 1, -1, -1)]
    return pairs + suited + offsuit


def hand_from_code(code: str) -> CanonicalHand:
    hi, lo = RANKS.index(code[0].upper()), RANKS.index(code[1].upper())
    if hi < lo:
        hi, lo = lo, hi
    if hi == lo:
        if len(code) != 2:
            raise ValueError(f"bad pair code {code!r}")
        return CanonicalHand(hi, lo, False)
    if len(code) != 3 or code[2] not in "so":
        raise ValueError(f"bad hand code {code!r}")
    return CanonicalHand(hi, lo, code[2] == "s")


def hand_of_combo(c1: int, c2: int) -> CanonicalHand:
    r1, r2 = c1 // 4, c2 // 4
    hi, lo = max(r1, r2), min(r1, r2)
    return CanonicalHand(hi, lo, hi != lo and c1 % 4 == c2 % 4)
