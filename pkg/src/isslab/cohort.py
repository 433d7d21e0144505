"""Cohort tables (triple, mortality rate), embedded reference fixtures,
association reports and step-plot data."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .core import Aggregator, Score, SeverityTriple, aggregate, check_grade
from .errors import InsufficientSampleError, IssLabError, ValidationError
from .stats import (
    AssociationStats,
    mi_permutation_pvalue,
    mutual_information_bits,
    normalized_mi,
    pearson,
    spearman,
)


@dataclass(frozen=True)
class CohortRow:
    """One severity triple with its observed mortality rate (percent)."""

    triple: SeverityTriple
    mortality_pct: float
    count: int | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.mortality_pct <= 100.0:
            raise ValidationError(
                f"mortality {self.mortality_pct} out of range [0, 100] for triple {self.triple}"
            )
        if self.count is not None and self.count < 1:
            raise ValidationError(f"count must be positive, got {self.count}")


@dataclass(frozen=True)
class CohortTable:
    name: str
    rows: tuple[CohortRow, ...]

    def __post_init__(self) -> None:
        seen: set[tuple[int, int, int]] = set()
        for row in self.rows:
            key = row.triple.as_tuple()
            if key in seen:
                raise ValidationError(f"duplicate triple {row.triple} in cohort {self.name!r}")
            seen.add(key)

    def __len__(self) -> int:
        return len(self.rows)


# --- embedded reference fixtures ---------------------------------------------
#
# The tables below are the classic published figures for this scoring family
# (the 1974 motor-vehicle cohort of 2,128 patients that introduced the score).
# They are embedded so that analyses and regression tests do not depend on
# external files.

def _baker_rows() -> tuple[CohortRow, ...]:
    data = [
        (4, 3, 0, 18.0),
        (4, 3, 1, 18.0),
        (4, 3, 2, 18.0),
        (4, 3, 3, 43.0),
        (5, 3, 0, 59.0),
        (5, 3, 1, 59.0),
        (5, 3, 2, 59.0),
        (5, 3, 3, 86.0),
        (5, 4, 0, 62.0),
        (5, 4, 1, 62.0),
        (5, 4, 2, 62.0),
        (5, 4, 3, 92.0),
    ]
    return tuple(CohortRow(SeverityTriple(a, b, c), pct) for a, b, c, pct in data)


#: Mortality rates by severity triple for the twelve profiles of the 1974
#: cohort; the standard bench table for association analyses.
BAKER_PROFILES = CohortTable("baker-profiles", _baker_rows())

#: Mortality (percent died) by the patient's single highest AIS grade.
BAKER_MAX_AIS_MORTALITY_PCT: Mapping[int, float] = {1: 0.0, 2: 0.5, 3: 3.0, 4: 16.0, 5: 64.0}


@dataclass(frozen=True)
class GradeDistributionRow:
    dead_on_arrival: int
    dead_later: int
    survived: int
    unknown: int
    printed_pct: int

    @property
    def total(self) -> int:
        return self.dead_on_arrival + self.dead_later + self.survived + self.unknown


#: Outcome counts by the grade of each patient's main injury.  Keys are the
#: grade (1..5) or "unknown".
BAKER_GRADE_DISTRIBUTION: Mapping[object, GradeDistributionRow] = {
    1: GradeDistributionRow(0, 0, 80, 1, 4),
    2: GradeDistributionRow(0, 2, 437, 1, 20),
    3: GradeDistributionRow(0, 23, 997, 20, 49),
    4: GradeDistributionRow(0, 30, 229, 3, 13),
    5: GradeDistributionRow(93, 80, 97, 3, 13),
    "unknown": GradeDistributionRow(1, 0, 12, 0, 1),
}


@dataclass(frozen=True)
class SevereInjuryGroup:
    """Mortality for one (most severe, second most severe) grade pair, split
    by whether the third most severe injury reached grade 3."""

    most_severe: int
    second_most_severe: int
    persons: int
    mortality_pct_third_below_3: float
    mortality_pct_third_is_3: float


BAKER_SEVERE_GROUPS: tuple[SevereInjuryGroup, ...] = (
    SevereInjuryGroup(4, 3, 102, 18.0, 43.0),
    SevereInjuryGroup(5, 3, 78, 59.0, 86.0),
    SevereInjuryGroup(5, 4, 38, 62.0, 92.0),
)


@dataclass(frozen=True)
class VarianceToySample:
    """Two patients one scale rank apart; the variance of their scores swings
    with the local gap of the scale, not with their condition."""

    label: str
    profile_1: SeverityTriple
    profile_2: SeverityTriple


VARIANCE_TOY_SAMPLES: tuple[VarianceToySample, ...] = (
    VarianceToySample("A", SeverityTriple(5, 2, 2), SeverityTriple(5, 3, 0)),
    VarianceToySample("B", SeverityTriple(5, 3, 2), SeverityTriple(5, 4, 0)),
    VarianceToySample("C", SeverityTriple(5, 3, 3), SeverityTriple(5, 4, 1)),
)


# --- ingestion ----------------------------------------------------------------

COHORT_COLUMNS = ("a", "b", "c", "mortality")


def load_cohort(path: str | Path, name: str | None = None) -> CohortTable:
    """Read a cohort CSV (columns a,b,c,mortality and optional count)."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        missing = [col for col in COHORT_COLUMNS if col not in header]
        if missing:
            raise ValidationError(f"{path}: missing column(s) {', '.join(missing)}")
        has_count = "count" in header
        rows = []
        seen: set[tuple[int, int, int]] = set()
        for row in reader:
            line = reader.line_num
            try:
                grades = []
                for col in ("a", "b", "c"):
                    try:
                        value = int(str(row[col]).strip())
                    except ValueError:
                        raise ValidationError(f"field {col}: not an integer: {row[col]!r}") from None
                    grades.append(check_grade(value, where=col))
                a, b, c = grades
                if not a >= b >= c:
                    raise ValidationError(f"triple ({a},{b},{c}) is not sorted descending")
                if (a, b, c) in seen:
                    raise ValidationError(f"duplicate triple ({a},{b},{c})")
                try:
                    mortality = float(str(row["mortality"]).strip())
                except ValueError:
                    raise ValidationError(
                        f"field mortality: not a number: {row['mortality']!r}"
                    ) from None
                count = None
                if has_count and str(row.get("count") or "").strip():
                    try:
                        count = int(str(row["count"]).strip())
                    except ValueError:
                        raise ValidationError(
                            f"field count: not an integer: {row['count']!r}"
                        ) from None
                rows.append(CohortRow(SeverityTriple(a, b, c), mortality, count))
            except ValidationError as exc:
                raise ValidationError(f"{path}:{line}: {exc}") from None
            seen.add((a, b, c))
    return CohortTable(name or path.stem, tuple(rows))


def _format_number(value: float) -> str:
    return f"{value:g}"


def save_cohort(table: CohortTable, path: str | Path) -> None:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        has_count = any(row.count is not None for row in table.rows)
        writer.writerow(list(COHORT_COLUMNS) + (["count"] if has_count else []))
        for row in table.rows:
            record = [row.triple.a, row.triple.b, row.triple.c, _format_number(row.mortality_pct)]
            if has_count:
                record.append("" if row.count is None else row.count)
            writer.writerow(record)


# --- reports -------------------------------------------------------------------


@dataclass(frozen=True)
class AssociationResult:
    """Per-rule outcome of an association report; `stats` is None when the
    statistic could not be computed and `error` says why."""

    aggregator: str
    stats: AssociationStats | None
    error: str | None = None


def _scored_rows(
    table: CohortTable, agg: Aggregator, weight_by_count: bool
) -> list[tuple[Score, float]]:
    pairs = []
    for row in table.rows:
        if weight_by_count:
            if row.count is None:
                raise ValidationError(
                    f"cohort {table.name!r} has no count for triple {row.triple}; "
                    "count-weighted association needs counts on every row"
                )
            repeat = row.count
        else:
            repeat = 1
        pairs.extend([(aggregate(agg, row.triple), row.mortality_pct)] * repeat)
    return pairs


def association_report(
    table: CohortTable,
    aggregators: Sequence[Aggregator],
    n_perms: int = 10_000,
    seed: int = 0,
    weight_by_count: bool = False,
) -> list[AssociationResult]:
    """Correlation, rank correlation, MI, NMI and a permutation p-value for
    each rule's scores against the cohort's mortality column.

    Rows are equally weighted unless `weight_by_count` is set.  A failure for
    one rule (for example zero score variance) is recorded in its result
    instead of aborting the others.
    """
    if len(table) < 3:
        raise InsufficientSampleError(
            f"association report needs at least 3 cohort rows, got {len(table)}"
        )
    results = []
    for agg in aggregators:
        pairs = _scored_rows(table, agg, weight_by_count)
        numeric = [(float(s), m) for s, m in pairs]
        try:
            rho, has_ties = spearman(numeric)
            results.append(
                AssociationResult(
                    agg.name,
                    AssociationStats(
                        pearson=pearson(numeric),
                        spearman=rho,
                        has_ties=has_ties,
                        mi_bits=mutual_information_bits(pairs),
                        nmi=normalized_mi(pairs),
                        p_value=mi_permutation_pvalue(pairs, n_perms=n_perms, seed=seed),
                    ),
                )
            )
        except IssLabError as exc:
            results.append(AssociationResult(agg.name, None, error=str(exc)))
    return results


@dataclass(frozen=True)
class StepPlotData:
    """Sorted (score, mortality) points for one rule over a cohort.

    Every cohort row contributes a point; a score reached by rows with
    different mortality rates therefore shows up as a vertical run of points.
    """

    aggregator_name: str
    points: tuple[tuple[Score, float], ...]


def step_plot(table: CohortTable, agg: Aggregator) -> StepPlotData:
    points = sorted(
        ((aggregate(agg, row.triple), row.mortality_pct) for row in table.rows),
        key=lambda p: (p[0], p[1]),
    )
    return StepPlotData(agg.name, tuple(points))


def grade_distribution_summary(
    distribution: Mapping[object, GradeDistributionRow] = BAKER_GRADE_DISTRIBUTION,
) -> dict[object, float]:
    """Percentage of patients per main-injury grade, from the outcome counts."""
    total = sum(row.total for row in distribution.values())
    if total == 0:
        raise ValidationError("grade distribution has no patients")
    return {grade: 100.0 * row.total / total for grade, row in distribution.items()}


def cohort_to_csv_text(table: CohortTable) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(COHORT_COLUMNS)
    for row in table.rows:
        writer.writerow(
            [row.triple.a, row.triple.b, row.triple.c, _format_number(row.mortality_pct)]
        )
    return buffer.getvalue()
