"""Monte-Carlo cohorts over a configurable grade distribution, outcome
simulation, and selection of the scoring rule that optimizes a target
criterion.

Which rule of the family works best depends on the grade mix a site actually
sees, so the selection harness samples a synthetic cohort for that mix and
scores every candidate rule against the simulated outcomes.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .cohort import BAKER_PROFILES, CohortTable
from .core import (
    Aggregator,
    AisProfile,
    PowerSum,
    SeverityTriple,
    aggregate,
    load_cohort,
    load_custom_aggregator,
    load_profiles,
    triple_from_profile,
)
from .errors import UndefinedStatisticError, ValidationError
from .lattice import enumerate_triples
from .stats import normalized_mi, pearson

N_REGIONS = 6
N_GRADES = 6
WEIGHT_TOLERANCE = 1e-9

OBJECTIVES = ("nmi_with_outcome", "pearson_with_outcome", "discordance_vs_truth")


@dataclass(frozen=True)
class CategoricalGrades:
    """Independent per-region categorical weights over grades 0..5."""

    weights: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        if len(self.weights) != N_REGIONS:
            raise ValidationError(f"need {N_REGIONS} weight vectors, got {len(self.weights)}")
        for r, vector in enumerate(self.weights, start=1):
            if len(vector) != N_GRADES:
                raise ValidationError(f"region {r}: need {N_GRADES} weights, got {len(vector)}")
            if any(w < 0 for w in vector):
                raise ValidationError(f"region {r}: negative weight")
            if abs(sum(vector) - 1.0) > WEIGHT_TOLERANCE:
                raise ValidationError(f"region {r}: weights sum to {sum(vector)!r}, expected 1")


@dataclass(frozen=True)
class EmpiricalProfiles:
    """Resample whole profiles from an observed collection, preserving
    between-region correlation."""

    profiles: tuple[AisProfile, ...]

    def __post_init__(self) -> None:
        if not self.profiles:
            raise ValidationError("empirical distribution needs at least one profile")


GradeDistribution = Union[CategoricalGrades, EmpiricalProfiles]


@dataclass(frozen=True)
class TableLookupOutcome:
    """Death probability looked up per triple in a cohort table.

    Exact triples use their own rate.  A triple absent from the table falls
    back to the table row with the greatest reference score not above the
    triple's own; rows tied on that score are averaged.  Triples below every
    row (in particular the uninjured one) get probability zero.
    """

    table: CohortTable = BAKER_PROFILES
    reference: Aggregator = PowerSum(2)

    @cached_property
    def _exact(self) -> dict[tuple[int, int, int], float]:
        return {row.triple.as_tuple(): row.mortality_pct / 100.0 for row in self.table.rows}

    @cached_property
    def _by_score(self) -> list[tuple[float, float]]:
        buckets: dict[float, list[float]] = {}
        for row in self.table.rows:
            score = float(aggregate(self.reference, row.triple))
            buckets.setdefault(score, []).append(row.mortality_pct / 100.0)
        return sorted((score, sum(rates) / len(rates)) for score, rates in buckets.items())

    def probability(self, triple: SeverityTriple) -> float:
        exact = self._exact.get(triple.as_tuple())
        if exact is not None:
            return exact
        score = float(aggregate(self.reference, triple))
        best = 0.0
        for row_score, rate in self._by_score:
            if row_score > score:
                break
            best = rate
        return best


@dataclass(frozen=True)
class LogisticOutcome:
    """Death probability logistic in a reference rule's score."""

    reference: Aggregator
    intercept: float
    slope: float

    def probability(self, triple: SeverityTriple) -> float:
        z = self.intercept + self.slope * float(aggregate(self.reference, triple))
        return 1.0 / (1.0 + math.exp(-z))


OutcomeModel = Union[TableLookupOutcome, LogisticOutcome]

MIN_COHORT_SIZE = 10
MIN_CANDIDATES = 2


@dataclass(frozen=True)
class SimConfig:
    cohort_size: int
    seed: int
    distribution: GradeDistribution
    outcome: OutcomeModel
    candidates: tuple[Aggregator, ...]
    objective: str

    def __post_init__(self) -> None:
        if self.cohort_size < MIN_COHORT_SIZE:
            raise ValidationError(f"cohort_size must be at least {MIN_COHORT_SIZE}")
        if len(self.candidates) < MIN_CANDIDATES:
            raise ValidationError(f"need at least {MIN_CANDIDATES} candidate rules")
        if self.objective not in OBJECTIVES:
            raise ValidationError(
                f"unknown objective {self.objective!r}; expected one of {', '.join(OBJECTIVES)}"
            )


Patient = tuple[AisProfile, bool]


def sample_cohort(config: SimConfig) -> list[Patient]:
    """Draw `cohort_size` patients and their survived/died outcome.

    Fully determined by the config seed: region grades first (one uniform
    per region per patient), then one uniform per patient for the outcome.
    """
    rng = np.random.default_rng(config.seed)
    n = config.cohort_size
    if isinstance(config.distribution, CategoricalGrades):
        u = rng.random((n, N_REGIONS))
        grades = np.empty((n, N_REGIONS), dtype=np.int64)
        for r in range(N_REGIONS):
            cum = np.cumsum(config.distribution.weights[r])
            cum[-1] = 1.0  # guard float drift in the final bucket
            grades[:, r] = np.searchsorted(cum, u[:, r], side="right")
    else:
        pool = np.array([p.grades for p in config.distribution.profiles], dtype=np.int64)
        grades = pool[rng.integers(0, len(pool), size=n)]
    u_outcome = rng.random(n)

    prob_cache: dict[tuple[int, int, int], float] = {}
    cohort: list[Patient] = []
    for i in range(n):
        profile = AisProfile(tuple(int(g) for g in grades[i]))
        key = triple_from_profile(profile).as_tuple()
        p = prob_cache.get(key)
        if p is None:
            p = config.outcome.probability(SeverityTriple(*key))
            prob_cache[key] = p
        cohort.append((profile, bool(u_outcome[i] < p)))
    return cohort


@dataclass(frozen=True)
class CandidateMetric:
    aggregator: str
    value: float | None
    error: str | None = None


@dataclass(frozen=True)
class SimResult:
    objective: str
    objective_used: str
    metrics: tuple[CandidateMetric, ...]
    selected: str
    seed: int | None
    grade_histogram: tuple[tuple[int, ...], ...]
    warning: str | None = None
    fallback_metrics: tuple[CandidateMetric, ...] | None = None


def _truth_reversals(candidate: Aggregator, probability_of: dict) -> int:
    """Orientation-counted strict reversals between a candidate's scores and
    the truth probabilities over the 55-triple space."""
    triples = enumerate_triples()
    scores = {t: aggregate(candidate, t) for t in triples}
    count = 0
    for x, y in itertools.combinations(triples, 2):
        ds = (scores[x] > scores[y]) - (scores[x] < scores[y])
        dp = (probability_of[x] > probability_of[y]) - (probability_of[x] < probability_of[y])
        if ds * dp == -1:
            count += 2
    return count


def _grade_histogram(cohort: Sequence[Patient]) -> tuple[tuple[int, ...], ...]:
    grades = np.array([profile.grades for profile, _ in cohort], dtype=np.int64)
    return tuple(
        tuple(int(v) for v in np.bincount(grades[:, r], minlength=N_GRADES))
        for r in range(N_REGIONS)
    )


def _tie_break_key(agg: Aggregator) -> tuple[float, str]:
    exponent = agg.exponent if isinstance(agg, PowerSum) else math.inf
    return (exponent, agg.name)


def _compute_metrics(
    cohort: Sequence[Patient],
    candidates: Sequence[Aggregator],
    objective: str,
    outcome: OutcomeModel | None,
) -> tuple[CandidateMetric, ...]:
    if objective == "discordance_vs_truth":
        if outcome is None:
            raise ValidationError("discordance_vs_truth needs the outcome model as truth")
        probability_of = {t: outcome.probability(t) for t in enumerate_triples()}
        return tuple(
            CandidateMetric(agg.name, float(_truth_reversals(agg, probability_of)))
            for agg in candidates
        )
    scored = []
    for agg in candidates:
        pairs = [(aggregate(agg, triple_from_profile(p)), died) for p, died in cohort]
        try:
            if objective == "nmi_with_outcome":
                value = normalized_mi(pairs)
            else:
                value = pearson([(float(s), 1.0 if d else 0.0) for s, d in pairs])
            scored.append(CandidateMetric(agg.name, value))
        except (UndefinedStatisticError, ValidationError) as exc:
            scored.append(CandidateMetric(agg.name, None, error=str(exc)))
    return tuple(scored)


def _select(
    candidates: Sequence[Aggregator], metrics: Sequence[CandidateMetric], minimize: bool
) -> str | None:
    usable = [
        (metric.value, _tie_break_key(agg))
        for agg, metric in zip(candidates, metrics)
        if metric.value is not None
    ]
    if not usable:
        return None
    best = min(v for v, _ in usable) if minimize else max(v for v, _ in usable)
    winner = min((key for v, key in usable if v == best))
    return next(agg.name for agg in candidates if _tie_break_key(agg) == winner)


def evaluate_candidates(
    cohort: Sequence[Patient],
    candidates: Sequence[Aggregator],
    objective: str,
    outcome: OutcomeModel | None = None,
    seed: int | None = None,
) -> SimResult:
    """Score every candidate rule under the objective and pick the optimum.

    Ties break toward the lowest power-sum exponent, then the
    lexicographically smallest name.  When the objective is undefined for
    every candidate (a cohort whose outcomes are all identical has no
    correlation), selection falls back to truth-ranking discordance and the
    result carries a warning.
    """
    if not cohort:
        raise ValidationError("cannot evaluate candidates on an empty cohort")
    if len(candidates) < MIN_CANDIDATES:
        raise ValidationError(f"need at least {MIN_CANDIDATES} candidate rules")
    if objective not in OBJECTIVES:
        raise ValidationError(f"unknown objective {objective!r}")

    metrics = _compute_metrics(cohort, candidates, objective, outcome)
    minimize = objective == "discordance_vs_truth"
    selected = _select(candidates, metrics, minimize)
    warning = None
    objective_used = objective
    fallback_metrics = None
    if selected is None:
        if outcome is None:
            raise UndefinedStatisticError(
                f"objective {objective} undefined for every candidate "
                "and no outcome model is available for a fallback"
            )
        warning = (
            f"objective {objective} undefined for every candidate; "
            "selection fell back to discordance_vs_truth"
        )
        objective_used = "discordance_vs_truth"
        fallback_metrics = _compute_metrics(cohort, candidates, objective_used, outcome)
        selected = _select(candidates, fallback_metrics, minimize=True)
        assert selected is not None  # discordance is always defined
    return SimResult(
        objective=objective,
        objective_used=objective_used,
        metrics=metrics,
        selected=selected,
        seed=seed,
        grade_histogram=_grade_histogram(cohort),
        warning=warning,
        fallback_metrics=fallback_metrics,
    )


def run_simulation(config: SimConfig) -> SimResult:
    cohort = sample_cohort(config)
    return evaluate_candidates(
        cohort, config.candidates, config.objective, outcome=config.outcome, seed=config.seed
    )


# --- JSON config and CSV dump ---------------------------------------------------


def parse_aggregator_spec(text: str, base_dir: Path | None = None) -> Aggregator:
    """Parse an aggregator spec: power:P, custom:PATH, or the aliases
    sum / iss / cubes."""
    spec = str(text).strip()
    alias = {"sum": 1, "iss": 2, "cubes": 3}.get(spec.lower())
    if alias is not None:
        return PowerSum(alias)
    kind, _, rest = spec.partition(":")
    if kind == "power" and rest:
        try:
            return PowerSum(int(rest))
        except ValueError:
            raise ValidationError(f"bad power-sum exponent in {text!r}") from None
    if kind == "custom" and rest:
        path = Path(rest)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return load_custom_aggregator(path)
    raise ValidationError(
        f"bad aggregator spec {text!r}; expected power:P, custom:PATH, sum, iss or cubes"
    )


def _require(obj: dict, key: str, context: str):
    if key not in obj:
        raise ValidationError(f"{context}: missing key {key!r}")
    return obj[key]


def parse_sim_config(obj: dict, base_dir: Path | None = None) -> SimConfig:
    """Build a SimConfig from the JSON structure used by the CLI."""
    if not isinstance(obj, dict):
        raise ValidationError("simulation config must be a JSON object")

    dist_obj = _require(obj, "distribution", "config")
    dist_type = _require(dist_obj, "type", "distribution")
    if dist_type == "categorical":
        weights = _require(dist_obj, "weights", "distribution")
        distribution: GradeDistribution = CategoricalGrades(
            tuple(tuple(float(w) for w in vector) for vector in weights)
        )
    elif dist_type == "empirical":
        profiles_path = Path(_require(dist_obj, "profiles", "distribution"))
        if base_dir is not None and not profiles_path.is_absolute():
            profiles_path = base_dir / profiles_path
        distribution = EmpiricalProfiles(tuple(load_profiles(profiles_path)))
    else:
        raise ValidationError(f"distribution: unknown type {dist_type!r}")

    outcome_obj = _require(obj, "outcome", "config")
    outcome_type = _require(outcome_obj, "type", "outcome")
    if outcome_type == "table":
        table = BAKER_PROFILES
        if "cohort" in outcome_obj:
            cohort_path = Path(outcome_obj["cohort"])
            if base_dir is not None and not cohort_path.is_absolute():
                cohort_path = base_dir / cohort_path
            table = load_cohort(cohort_path)
        reference = parse_aggregator_spec(outcome_obj.get("reference", "power:2"), base_dir)
        outcome: OutcomeModel = TableLookupOutcome(table, reference)
    elif outcome_type == "logistic":
        outcome = LogisticOutcome(
            reference=parse_aggregator_spec(_require(outcome_obj, "reference", "outcome"), base_dir),
            intercept=float(_require(outcome_obj, "intercept", "outcome")),
            slope=float(_require(outcome_obj, "slope", "outcome")),
        )
    else:
        raise ValidationError(f"outcome: unknown type {outcome_type!r}")

    candidates = tuple(
        parse_aggregator_spec(spec, base_dir) for spec in _require(obj, "candidates", "config")
    )
    return SimConfig(
        cohort_size=int(_require(obj, "cohort_size", "config")),
        seed=int(_require(obj, "seed", "config")),
        distribution=distribution,
        outcome=outcome,
        candidates=candidates,
        objective=str(_require(obj, "objective", "config")),
    )


def load_sim_config(path: str | Path) -> SimConfig:
    path = Path(path)
    with open(path, encoding="utf-8") as handle:
        try:
            obj = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON: {exc}") from None
    return parse_sim_config(obj, base_dir=path.parent)


def dump_cohort_csv(cohort: Sequence[Patient], path: str | Path) -> None:
    """Write a sampled cohort as case_id, r1..r6, outcome rows."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["case_id", "r1", "r2", "r3", "r4", "r5", "r6", "outcome"])
        for i, (profile, died) in enumerate(cohort, start=1):
            writer.writerow([i, *profile.grades, "died" if died else "survived"])
