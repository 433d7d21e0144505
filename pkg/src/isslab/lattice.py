"""Exhaustive triple enumeration, value scales with ranks, and rank-reversal
censuses between scoring rules."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .core import Aggregator, Score, SeverityTriple, aggregate

N_TRIPLES = 55
N_PAIRS = 1485  # C(55, 2)


def enumerate_triples() -> tuple[SeverityTriple, ...]:
    """All 55 sorted triples over grades 0..5, excluding (0,0,0).

    Returned in ascending lexicographic order, which downstream code relies
    on for deterministic output.
    """
    return tuple(
        SeverityTriple(a, b, c)
        for a in range(6)
        for b in range(a + 1)
        for c in range(b + 1)
        if (a, b, c) != (0, 0, 0)
    )


@dataclass(frozen=True)
class ValueLattice:
    """The distinct achievable scores of one rule, with 1-based ranks."""

    aggregator_name: str
    values: tuple[Score, ...]
    rank_of: Mapping[Score, int]
    triples_of: Mapping[Score, tuple[SeverityTriple, ...]]

    def __len__(self) -> int:
        return len(self.values)


def build_lattice(agg: Aggregator) -> ValueLattice:
    by_score: dict[Score, list[SeverityTriple]] = {}
    for triple in enumerate_triples():
        by_score.setdefault(aggregate(agg, triple), []).append(triple)
    values = tuple(sorted(by_score))
    rank_of = {value: rank for rank, value in enumerate(values, start=1)}
    triples_of = {value: tuple(by_score[value]) for value in values}
    return ValueLattice(agg.name, values, rank_of, triples_of)


@dataclass(frozen=True)
class GapStep:
    """One consecutive step of a value scale: value at `rank`, the next
    value, and their difference."""

    rank: int
    value: Score
    next_value: Score
    gap: Score


GapProfile = tuple[GapStep, ...]


def gaps(lattice: ValueLattice) -> GapProfile:
    """Consecutive differences over the distinct-value list."""
    return tuple(
        GapStep(rank, value, nxt, nxt - value)
        for rank, (value, nxt) in enumerate(zip(lattice.values, lattice.values[1:]), start=1)
    )


@dataclass(frozen=True)
class DiscordantPair:
    """Two triples that the rules f and g order in opposite directions."""

    x: SeverityTriple
    y: SeverityTriple
    f_x: Score
    f_y: Score
    g_x: Score
    g_y: Score


@dataclass(frozen=True)
class DiscordanceReport:
    """Census of strict rank reversals between two rules over all 1485
    unordered pairs of triples.

    `witnesses` lists every reversing pair once, in canonical (lexicographic)
    order.  `count` tallies orientations: a reversing pair {x, y} reverses
    both as (x, y) and as (y, x) and contributes 2, the convention used in
    published reversal rates for these scales, so `fraction` is
    ``count / total_pairs``.
    """

    f_name: str
    g_name: str
    total_pairs: int
    witnesses: tuple[DiscordantPair, ...]
    count: int
    fraction: Fraction


def discordance(f: Aggregator, g: Aggregator) -> DiscordanceReport:
    """Find every pair of triples on which f and g strictly disagree.

    A pair is discordant iff one rule strictly increases where the other
    strictly decreases; ties under either rule never count.
    """
    triples = enumerate_triples()
    f_scores = {t: aggregate(f, t) for t in triples}
    g_scores = {t: aggregate(g, t) for t in triples}
    witnesses = []
    for x, y in itertools.combinations(triples, 2):
        fx, fy = f_scores[x], f_scores[y]
        gx, gy = g_scores[x], g_scores[y]
        if (fx > fy and gx < gy) or (fx < fy and gx > gy):
            witnesses.append(DiscordantPair(x, y, fx, fy, gx, gy))
    count = 2 * len(witnesses)
    return DiscordanceReport(
        f_name=f.name,
        g_name=g.name,
        total_pairs=N_PAIRS,
        witnesses=tuple(witnesses),
        count=count,
        fraction=Fraction(count, N_PAIRS),
    )
