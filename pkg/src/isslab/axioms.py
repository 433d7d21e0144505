"""Change-vector algebra and exhaustive auditors for three pathologies of
aggregate severity scores: unstable compensation between injuries, priority
flips under identical treatment, and failures of independence."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

from .core import Aggregator, Score, SeverityTriple, aggregate
from .errors import InvalidChangeError, ValidationError
from .lattice import enumerate_triples

_POSITIONS = ("A", "B", "C")


@dataclass(frozen=True)
class ChangeVector:
    """Signed grade deltas applied to the most, second most and third most
    severe injury of a triple."""

    da: int
    db: int
    dc: int

    def __iter__(self) -> Iterator[int]:
        return iter((self.da, self.db, self.dc))

    def __str__(self) -> str:
        return "[" + ",".join(f"{d:+d}" if d else "0" for d in self) + "]"

    @classmethod
    def parse(cls, text: str) -> "ChangeVector":
        parts = [p.strip() for p in str(text).split(",")]
        if len(parts) != 3:
            raise ValidationError(f"change vector needs 3 comma-separated deltas, got {text!r}")
        try:
            return cls(*(int(p) for p in parts))
        except ValueError:
            raise ValidationError(f"change vector has non-integer delta: {text!r}") from None


def apply_change(triple: SeverityTriple, change: ChangeVector) -> SeverityTriple:
    """Add the deltas position-wise, then re-sort so the result is again a
    severity triple.

    A change is valid only if every resulting grade stays in [0, 5]; the
    offending position is named otherwise.
    """
    results = []
    for position, grade, delta in zip(_POSITIONS, triple, change):
        value = grade + delta
        if not 0 <= value <= 5:
            raise InvalidChangeError(
                f"position {position}: {grade}{delta:+d} = {value} leaves the AIS range [0, 5]"
            )
        results.append(value)
    a, b, c = sorted(results, reverse=True)
    return SeverityTriple(a, b, c)


def _try_apply(triple: SeverityTriple, change: ChangeVector) -> SeverityTriple | None:
    try:
        return apply_change(triple, change)
    except InvalidChangeError:
        return None


def _sign(delta: Score) -> int:
    return (delta > 0) - (delta < 0)


@dataclass(frozen=True)
class PatientChange:
    before: SeverityTriple
    after: SeverityTriple
    score_before: Score
    score_after: Score


@dataclass(frozen=True)
class CompensationWitness:
    """The same change improves one patient's score and degrades the
    other's (a decrease counts as an improvement)."""

    change: ChangeVector
    patient_1: PatientChange
    patient_2: PatientChange


def audit_compensation(agg: Aggregator, change: ChangeVector) -> tuple[CompensationWitness, ...]:
    """Scan all ordered pairs of triples on which the change is valid for
    pairs whose score deltas have strictly opposite signs."""
    moved = {}
    for triple in enumerate_triples():
        after = _try_apply(triple, change)
        if after is not None:
            moved[triple] = PatientChange(triple, after, aggregate(agg, triple), aggregate(agg, after))
    witnesses = []
    for x, y in itertools.permutations(sorted(moved), 2):
        px, py = moved[x], moved[y]
        dx = _sign(px.score_after - px.score_before)
        dy = _sign(py.score_after - py.score_before)
        if dx * dy == -1:
            witnesses.append(CompensationWitness(change, px, py))
    return tuple(witnesses)


@dataclass(frozen=True)
class AlternationTrace:
    """Two patients receiving the same sequence of changes whose priority
    order flips at least once along the way."""

    patient_1: SeverityTriple
    patient_2: SeverityTriple
    steps: tuple[ChangeVector, ...]
    score_history: tuple[tuple[Score, Score], ...]
    flips: int


def _count_flips(history: Sequence[tuple[Score, Score]]) -> int:
    # A flip is a strict sign change of (score1 - score2) between
    # consecutive steps; a tie at either end breaks the chain.
    signs = [_sign(s1 - s2) for s1, s2 in history]
    return sum(
        1
        for prev, cur in zip(signs, signs[1:])
        if prev != 0 and cur != 0 and prev != cur
    )


def _trace_pair(
    agg: Aggregator,
    start_1: SeverityTriple,
    start_2: SeverityTriple,
    steps: Sequence[ChangeVector],
) -> AlternationTrace | None:
    t1, t2 = start_1, start_2
    history = [(aggregate(agg, t1), aggregate(agg, t2))]
    for step in steps:
        t1 = _try_apply(t1, step)
        t2 = _try_apply(t2, step)
        if t1 is None or t2 is None:
            return None
        history.append((aggregate(agg, t1), aggregate(agg, t2)))
    flips = _count_flips(history)
    if flips < 1:
        return None
    return AlternationTrace(start_1, start_2, tuple(steps), tuple(history), flips)


def audit_alternation(
    agg: Aggregator, steps: Sequence[ChangeVector]
) -> tuple[AlternationTrace, ...]:
    """Scan all ordered pairs of initial triples for which every step stays
    valid, reporting those whose priority order flips at least once."""
    if not steps:
        raise ValidationError("alternation audit needs at least one step")
    triples = sorted(enumerate_triples())
    witnesses = []
    for x, y in itertools.permutations(triples, 2):
        trace = _trace_pair(agg, x, y, steps)
        if trace is not None:
            witnesses.append(trace)
    return tuple(witnesses)


def unit_changes() -> tuple[ChangeVector, ...]:
    """The six one-point changes (plus or minus one on one position)."""
    units = []
    for index in range(3):
        for delta in (1, -1):
            deltas = [0, 0, 0]
            deltas[index] = delta
            units.append(ChangeVector(*deltas))
    return tuple(units)


def search_alternations(agg: Aggregator, depth: int = 2) -> tuple[AlternationTrace, ...]:
    """Enumerate every sequence of unit changes up to `depth` steps and
    collect all alternation traces.

    Cost grows as (pairs) x (6^1 + ... + 6^depth); depth 2 is the default
    and runs in well under a second, each extra level multiplies work by 6.
    """
    if depth < 1:
        raise ValidationError(f"search depth must be at least 1, got {depth}")
    witnesses = []
    for length in range(1, depth + 1):
        for steps in itertools.product(unit_changes(), repeat=length):
            witnesses.extend(audit_alternation(agg, steps))
    return tuple(witnesses)


@dataclass(frozen=True)
class PairComparison:
    """One pair of patients, their scores before and after a change, and
    whether their strict order reversed."""

    first: SeverityTriple
    second: SeverityTriple
    scores_before: tuple[Score, Score]
    scores_after: tuple[Score, Score]
    reversed_order: bool


@dataclass(frozen=True)
class IndependenceWitness:
    """Two pairs that differ only by a common shift respond differently to
    one identical change: exactly one of them reverses order."""

    shift: ChangeVector
    change: ChangeVector
    base: PairComparison
    shifted: PairComparison


def _strict_reversal(before: tuple[Score, Score], after: tuple[Score, Score]) -> bool:
    sb = _sign(before[0] - before[1])
    sa = _sign(after[0] - after[1])
    return sb != 0 and sa != 0 and sb != sa


def _compare_pair(
    agg: Aggregator, x: SeverityTriple, y: SeverityTriple, change: ChangeVector
) -> PairComparison | None:
    x2 = _try_apply(x, change)
    y2 = _try_apply(y, change)
    if x2 is None or y2 is None:
        return None
    before = (aggregate(agg, x), aggregate(agg, y))
    after = (aggregate(agg, x2), aggregate(agg, y2))
    return PairComparison(x, y, before, after, _strict_reversal(before, after))


def audit_independence(
    agg: Aggregator, shift: ChangeVector, change: ChangeVector
) -> tuple[IndependenceWitness, ...]:
    """Scan all ordered base pairs (x, y); shift both members to form the
    second pair; apply the change to all four; report every case where
    exactly one of the two pairs reverses strict order."""
    triples = sorted(enumerate_triples())
    witnesses = []
    for x, y in itertools.permutations(triples, 2):
        xs = _try_apply(x, shift)
        ys = _try_apply(y, shift)
        if xs is None or ys is None:
            continue
        base = _compare_pair(agg, x, y, change)
        shifted = _compare_pair(agg, xs, ys, change)
        if base is None or shifted is None:
            continue
        if base.reversed_order != shifted.reversed_order:
            witnesses.append(IndependenceWitness(shift, change, base, shifted))
    return tuple(witnesses)
