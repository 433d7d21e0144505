"""AIS data model, region mapping, triple extraction and scoring rules.

A patient is described either by an :class:`AisProfile` (one AIS grade per
ISS body region) or by an :class:`InjuryCase` (raw list of graded injuries
over the nine AIS regions).  Every scoring rule studied here operates on a
:class:`SeverityTriple`, the three highest grades in descending order, so
the two extraction rules (`triple_iss`, `triple_niss`) and the aggregation
step are kept strictly separate.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence, Union

from .errors import MalformedAggregatorError, ValidationError

MIN_GRADE = 0
MAX_GRADE = 5

Score = Union[int, float, Fraction]


def check_grade(value: int, where: str = "grade") -> int:
    """Validate a single AIS grade.

    Grade 6 (untreatable injury) is not scorable and is rejected with its
    own diagnostic rather than a generic range error.
    """
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{where}: expected an integer AIS grade, got {value!r}")
    if value == 6:
        raise ValidationError(
            f"{where}: grade 6 marks an untreatable injury and is excluded from scoring"
        )
    if not MIN_GRADE <= value <= MAX_GRADE:
        raise ValidationError(
            f"{where}: grade {value} outside the AIS range [{MIN_GRADE}, {MAX_GRADE}]"
        )
    return value


class BodyRegion(Enum):
    """The nine AIS body regions."""

    HEAD = "head"
    FACE = "face"
    NECK = "neck"
    THORAX = "thorax"
    ABDOMEN = "abdomen"
    SPINE = "spine"
    UPPER_EXTREMITIES = "upper extremities"
    LOWER_EXTREMITIES = "lower extremities"
    EXTERNAL = "external"

    @classmethod
    def parse(cls, text: str) -> "BodyRegion":
        normalized = " ".join(str(text).strip().lower().replace("-", " ").replace("_", " ").split())
        alias = _REGION_ALIASES.get(normalized)
        if alias is None:
            names = ", ".join(r.value for r in cls)
            raise ValidationError(f"unknown body region {text!r} (expected one of: {names})")
        return alias


_REGION_ALIASES: dict[str, BodyRegion] = {r.value: r for r in BodyRegion}
_REGION_ALIASES.update(
    {
        "chest": BodyRegion.THORAX,
        "upper extremity": BodyRegion.UPPER_EXTREMITIES,
        "lower extremity": BodyRegion.LOWER_EXTREMITIES,
    }
)

N_ISS_REGIONS = 6


@dataclass(frozen=True)
class RegionMapping:
    """Total map from the nine AIS regions onto the six ISS regions (1..6)."""

    slots: Mapping[BodyRegion, int]

    def __post_init__(self) -> None:
        missing = [r.value for r in BodyRegion if r not in self.slots]
        if missing:
            raise ValidationError(f"region mapping is not total, missing: {', '.join(missing)}")
        for region, slot in self.slots.items():
            if not isinstance(slot, int) or not 1 <= slot <= N_ISS_REGIONS:
                raise ValidationError(
                    f"region mapping sends {region.value!r} to invalid ISS region {slot!r}"
                )

    def slot_of(self, region: BodyRegion) -> int:
        return self.slots[region]


# Conventional grouping: head and neck share R1, spine is grouped with the
# chest, both extremity regions share R5.  Triple extraction depends only on
# per-slot maxima, so analyses downstream are insensitive to this choice; it
# is injectable for sites that follow a different convention.
DEFAULT_REGION_MAPPING = RegionMapping(
    {
        BodyRegion.HEAD: 1,
        BodyRegion.NECK: 1,
        BodyRegion.FACE: 2,
        BodyRegion.THORAX: 3,
        BodyRegion.SPINE: 3,
        BodyRegion.ABDOMEN: 4,
        BodyRegion.UPPER_EXTREMITIES: 5,
        BodyRegion.LOWER_EXTREMITIES: 5,
        BodyRegion.EXTERNAL: 6,
    }
)


@dataclass(frozen=True)
class AisProfile:
    """AIS grades over the six ISS body regions, in slot order R1..R6."""

    grades: tuple[int, int, int, int, int, int]

    def __post_init__(self) -> None:
        if len(self.grades) != N_ISS_REGIONS:
            raise ValidationError(f"profile needs {N_ISS_REGIONS} grades, got {len(self.grades)}")
        for i, g in enumerate(self.grades, start=1):
            check_grade(g, where=f"r{i}")

    def __iter__(self) -> Iterator[int]:
        return iter(self.grades)


@dataclass(frozen=True)
class Injury:
    """One graded injury to one of the nine AIS regions."""

    region: BodyRegion
    grade: int

    def __post_init__(self) -> None:
        if not isinstance(self.region, BodyRegion):
            raise ValidationError(f"injury region must be a BodyRegion, got {self.region!r}")
        check_grade(self.grade, where=f"{self.region.value} injury")


@dataclass(frozen=True)
class InjuryCase:
    """A patient's raw injury list; may be empty (uninjured case)."""

    case_id: str
    injuries: tuple[Injury, ...] = ()


@dataclass(frozen=True, order=True)
class SeverityTriple:
    """The three highest AIS grades of a patient, sorted descending."""

    a: int
    b: int
    c: int

    def __post_init__(self) -> None:
        for name, g in (("a", self.a), ("b", self.b), ("c", self.c)):
            check_grade(g, where=name)
        if not self.a >= self.b >= self.c:
            raise ValidationError(
                f"severity triple ({self.a}, {self.b}, {self.c}) is not sorted descending"
            )

    @classmethod
    def from_grades(cls, grades: Iterable[int]) -> "SeverityTriple":
        """Keep the three largest grades, padding with zeros."""
        top = sorted(grades, reverse=True)[:3]
        top += [0] * (3 - len(top))
        return cls(top[0], top[1], top[2])

    def __iter__(self) -> Iterator[int]:
        return iter((self.a, self.b, self.c))

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.a, self.b, self.c)

    def __str__(self) -> str:
        return f"({self.a},{self.b},{self.c})"


def triple_from_profile(profile: AisProfile) -> SeverityTriple:
    """The three largest of the six per-region grades."""
    return SeverityTriple.from_grades(profile.grades)


def triple_iss(case: InjuryCase, mapping: RegionMapping = DEFAULT_REGION_MAPPING) -> SeverityTriple:
    """ISS extraction: per ISS-region maximum first, then the top three.

    Several injuries in one region mask each other; only the worst one per
    region can enter the triple.
    """
    slot_max = [0] * N_ISS_REGIONS
    for injury in case.injuries:
        slot = mapping.slot_of(injury.region) - 1
        if injury.grade > slot_max[slot]:
            slot_max[slot] = injury.grade
    return SeverityTriple.from_grades(slot_max)


def triple_niss(case: InjuryCase) -> SeverityTriple:
    """NISS extraction: the three most severe injuries regardless of region."""
    return SeverityTriple.from_grades(injury.grade for injury in case.injuries)


@dataclass(frozen=True)
class PowerSum:
    """Score a triple as a^p + b^p + c^p for a fixed positive exponent p."""

    exponent: int

    def __post_init__(self) -> None:
        if isinstance(self.exponent, bool) or not isinstance(self.exponent, int) or self.exponent < 1:
            raise MalformedAggregatorError(
                f"power-sum exponent must be a positive integer, got {self.exponent!r}"
            )

    @property
    def name(self) -> str:
        return f"power:{self.exponent}"


@dataclass(frozen=True, eq=True)
class TableAggregator:
    """Score triples by exact lookup in an explicit evaluation table.

    The table is expected to cover all 56 sorted triples (including the
    uninjured (0,0,0)) and must be monotone in every component; a partial
    table is tolerated at construction but evaluating a missing triple is an
    error.
    """

    name: str
    table: Mapping[tuple[int, int, int], Score]

    def __post_init__(self) -> None:
        for key, value in self.table.items():
            a, b, c = key
            for g in key:
                check_grade(g, where=f"table triple {key}")
            if not a >= b >= c:
                raise MalformedAggregatorError(f"table triple {key} is not sorted descending")
            if value < 0:
                raise MalformedAggregatorError(f"table score for {key} is negative: {value}")
        items = list(self.table.items())
        for key, value in items:
            for other, other_value in items:
                if all(k >= o for k, o in zip(key, other)) and value < other_value:
                    raise MalformedAggregatorError(
                        f"table is not monotone: {key} scores {value} "
                        f"but dominated triple {other} scores {other_value}"
                    )

    # Mapping fields are unhashable; aggregators are keyed by name instead.
    __hash__ = None  # type: ignore[assignment]


Aggregator = Union[PowerSum, TableAggregator]


def aggregate(agg: Aggregator, triple: SeverityTriple) -> Score:
    """Evaluate a scoring rule on a severity triple."""
    if isinstance(agg, PowerSum):
        p = agg.exponent
        return triple.a**p + triple.b**p + triple.c**p
    value = agg.table.get(triple.as_tuple())
    if value is None:
        raise MalformedAggregatorError(
            f"aggregator {agg.name!r} has no score for triple {triple}"
        )
    return value


def aggregator_name(agg: Aggregator) -> str:
    return agg.name


# --- CSV ingestion ----------------------------------------------------------

PROFILE_COLUMNS = ("r1", "r2", "r3", "r4", "r5", "r6")
INJURY_COLUMNS = ("case_id", "region", "grade")
AGGREGATOR_COLUMNS = ("a", "b", "c", "score")


def _open_rows(path: Path, required: Sequence[str]) -> tuple[csv.DictReader, "object"]:
    handle = open(path, newline="", encoding="utf-8")
    reader = csv.DictReader(handle)
    header = reader.fieldnames or []
    missing = [col for col in required if col not in header]
    if missing:
        handle.close()
        raise ValidationError(f"{path}: missing column(s) {', '.join(missing)}")
    return reader, handle


def _parse_int(text: str, context: str) -> int:
    try:
        return int(str(text).strip())
    except (TypeError, ValueError):
        raise ValidationError(f"{context}: not an integer: {text!r}") from None


def load_profiles(path: str | Path) -> list[AisProfile]:
    """Read a profile CSV (columns r1..r6) with row-level diagnostics."""
    path = Path(path)
    reader, handle = _open_rows(path, PROFILE_COLUMNS)
    profiles = []
    with handle:
        for row in reader:
            line = reader.line_num
            grades = []
            for col in PROFILE_COLUMNS:
                value = _parse_int(row[col], f"{path}:{line}: field {col}")
                try:
                    check_grade(value, where=col)
                except ValidationError as exc:
                    raise ValidationError(f"{path}:{line}: {exc}") from None
                grades.append(value)
            profiles.append(AisProfile(tuple(grades)))
    return profiles


def load_injury_cases(path: str | Path) -> list[InjuryCase]:
    """Read an injury-record CSV (case_id, region, grade), one row per injury.

    Rows for the same case_id are grouped; case order follows first
    appearance in the file.
    """
    path = Path(path)
    reader, handle = _open_rows(path, INJURY_COLUMNS)
    by_case: dict[str, list[Injury]] = {}
    with handle:
        for row in reader:
            line = reader.line_num
            case_id = str(row["case_id"]).strip()
            if not case_id:
                raise ValidationError(f"{path}:{line}: empty case_id")
            try:
                region = BodyRegion.parse(row["region"])
                grade = check_grade(_parse_int(row["grade"], f"{path}:{line}: field grade"))
                injury = Injury(region, grade)
            except ValidationError as exc:
                msg = str(exc)
                if not msg.startswith(str(path)):
                    msg = f"{path}:{line}: {msg}"
                raise ValidationError(msg) from None
            by_case.setdefault(case_id, []).append(injury)
    return [InjuryCase(case_id, tuple(injuries)) for case_id, injuries in by_case.items()]


def sorted_triples_universe() -> list[tuple[int, int, int]]:
    """All 56 sorted triples over grades 0..5, including (0,0,0)."""
    return [
        (a, b, c)
        for a in range(MAX_GRADE + 1)
        for b in range(a + 1)
        for c in range(b + 1)
    ]


def load_custom_aggregator(path: str | Path, name: str | None = None) -> TableAggregator:
    """Read a custom evaluation table (columns a,b,c,score).

    The file must cover all 56 sorted triples exactly once.  Scores are
    parsed exactly (integers, decimals or fractions like ``3/4``).
    """
    path = Path(path)
    reader, handle = _open_rows(path, AGGREGATOR_COLUMNS)
    table: dict[tuple[int, int, int], Score] = {}
    with handle:
        for row in reader:
            line = reader.line_num
            a = _parse_int(row["a"], f"{path}:{line}: field a")
            b = _parse_int(row["b"], f"{path}:{line}: field b")
            c = _parse_int(row["c"], f"{path}:{line}: field c")
            try:
                for col, g in zip("abc", (a, b, c)):
                    check_grade(g, where=col)
            except ValidationError as exc:
                raise ValidationError(f"{path}:{line}: {exc}") from None
            if not a >= b >= c:
                raise ValidationError(f"{path}:{line}: triple ({a},{b},{c}) is not sorted descending")
            if (a, b, c) in table:
                raise ValidationError(f"{path}:{line}: duplicate triple ({a},{b},{c})")
            try:
                score = Fraction(str(row["score"]).strip())
            except (ValueError, ZeroDivisionError):
                raise ValidationError(
                    f"{path}:{line}: field score: not a number: {row['score']!r}"
                ) from None
            if score.denominator == 1:
                score = int(score)
            table[(a, b, c)] = score
    missing = [t for t in sorted_triples_universe() if t not in table]
    if missing:
        raise ValidationError(
            f"{path}: table covers {len(table)} of 56 sorted triples; "
            f"first missing: {missing[0]}"
        )
    try:
        return TableAggregator(name or path.stem, table)
    except MalformedAggregatorError as exc:
        raise MalformedAggregatorError(f"{path}: {exc}") from None
