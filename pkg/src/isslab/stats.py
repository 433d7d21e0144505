"""Cardinal and ordinal association statistics.

Everything here is a plain plug-in estimator over the data it is handed: no
bias correction, no binning.  Entropies are in bits.  The one seeded
operation, the mutual-information permutation test, is deterministic for a
fixed (data, n_perms, seed).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from .errors import InsufficientSampleError, UndefinedStatisticError, ValidationError

Pairs = Sequence[tuple]


@dataclass(frozen=True)
class AssociationStats:
    """One rule's association bundle against an outcome column."""

    pearson: float
    spearman: float
    has_ties: bool
    mi_bits: float
    nmi: float
    p_value: float


def sample_variance(xs: Sequence[float]) -> float:
    """Bessel-corrected sample variance, sum((x - mean)^2) / (n - 1)."""
    n = len(xs)
    if n < 2:
        raise InsufficientSampleError(f"variance needs at least 2 observations, got {n}")
    mean = math.fsum(xs) / n
    return math.fsum((x - mean) ** 2 for x in xs) / (n - 1)


def _check_paired(pairs: Pairs) -> tuple[list[float], list[float]]:
    if len(pairs) < 2:
        raise InsufficientSampleError(f"need at least 2 paired observations, got {len(pairs)}")
    xs = [float(x) for x, _ in pairs]
    ys = [float(y) for _, y in pairs]
    if not all(math.isfinite(v) for v in xs + ys):
        raise ValidationError("paired sample contains non-finite values")
    return xs, ys


def pearson(pairs: Pairs) -> float:
    """Product-moment correlation: covariance over the product of standard
    deviations."""
    xs, ys = _check_paired(pairs)
    n = len(xs)
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    syy = math.fsum((y - my) ** 2 for y in ys)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedStatisticError("correlation undefined: a coordinate has zero variance")
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    return sxy / math.sqrt(sxx * syy)


def average_ranks(xs: Sequence[float]) -> list[float]:
    """1-based ranks; tied values share the mean of their rank block."""
    order = sorted(range(len(xs)), key=lambda i: xs[i])
    ranks = [0.0] * len(xs)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and xs[order[j + 1]] == xs[order[i]]:
            j += 1
        mean_rank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = mean_rank
        i = j + 1
    return ranks


def spearman(pairs: Pairs) -> tuple[float, bool]:
    """Rank correlation with average ranks, plus a flag for the presence of
    ties.

    Ties are not an error here, but they do make the coefficient an
    approximation, which is why the flag is surfaced to callers.
    """
    xs, ys = _check_paired(pairs)
    has_ties = len(set(xs)) < len(xs) or len(set(ys)) < len(ys)
    rho = pearson(list(zip(average_ranks(xs), average_ranks(ys))))
    return rho, has_ties


def entropy_bits(symbols: Sequence[Hashable]) -> float:
    """Plug-in entropy, -sum(p log2 p) over empirical frequencies."""
    n = len(symbols)
    if n == 0:
        raise InsufficientSampleError("entropy of an empty sample is undefined")
    return -math.fsum(
        (count / n) * math.log2(count / n) for count in Counter(symbols).values()
    )


def mutual_information_bits(pairs: Pairs) -> float:
    """Plug-in mutual information via H(X) + H(Y) - H(X,Y).

    Clamped at zero: the identity is exact, but float rounding can produce
    tiny negatives on independent columns.
    """
    if len(pairs) == 0:
        raise InsufficientSampleError("mutual information of an empty sample is undefined")
    xs = [x for x, _ in pairs]
    ys = [y for _, y in pairs]
    mi = entropy_bits(xs) + entropy_bits(ys) - entropy_bits([(x, y) for x, y in pairs])
    return max(mi, 0.0)


def normalized_mi(pairs: Pairs) -> float:
    """2 * MI / (H(X) + H(Y)), in [0, 1]."""
    if len(pairs) == 0:
        raise InsufficientSampleError("normalized MI of an empty sample is undefined")
    hx = entropy_bits([x for x, _ in pairs])
    hy = entropy_bits([y for _, y in pairs])
    if hx + hy == 0.0:
        raise UndefinedStatisticError("normalized MI undefined: both columns are constant")
    value = 2.0 * mutual_information_bits(pairs) / (hx + hy)
    return min(max(value, 0.0), 1.0)


def _encode(symbols: Sequence[Hashable]) -> np.ndarray:
    codes: dict[Hashable, int] = {}
    out = np.empty(len(symbols), dtype=np.int64)
    for i, s in enumerate(symbols):
        out[i] = codes.setdefault(s, len(codes))
    return out


def mi_permutation_pvalue(pairs: Pairs, n_perms: int, seed: int) -> float:
    """Permutation p-value for the mutual information of a discrete pair.

    The y column is shuffled `n_perms` times under a generator seeded with
    `seed`; p is the add-one estimate
    ``(1 + #{MI_perm >= MI_observed}) / (1 + n_perms)``, so it can never be
    exactly zero.  Marginal entropies are permutation-invariant, so the
    comparison is carried out on joint entropies alone (MI >= observed iff
    H_joint <= observed H_joint).
    """
    if n_perms < 1:
        raise ValidationError(f"n_perms must be at least 1, got {n_perms}")
    if len(pairs) == 0:
        raise InsufficientSampleError("permutation test on an empty sample is undefined")
    x = _encode([p[0] for p in pairs])
    y = _encode([p[1] for p in pairs])
    n = len(pairs)
    kx = int(x.max()) + 1
    ky = int(y.max()) + 1
    bins = kx * ky

    # h_term[c] = -(c/n) log2(c/n); joint entropy is a sum of these.
    counts = np.arange(1, n + 1, dtype=np.float64)
    h_term = np.zeros(n + 1, dtype=np.float64)
    h_term[1:] = -(counts / n) * np.log2(counts / n)

    observed = float(h_term[np.bincount(x * ky + y, minlength=bins)].sum())

    rng = np.random.default_rng(seed)
    chunk = max(1, min(n_perms, 4_000_000 // max(n, bins)))
    at_least = 0
    done = 0
    while done < n_perms:
        m = min(chunk, n_perms - done)
        permuted = rng.permuted(np.tile(y, (m, 1)), axis=1)
        joint = x[None, :] * ky + permuted
        joint += (np.arange(m, dtype=np.int64) * bins)[:, None]
        per_trial = np.bincount(joint.ravel(), minlength=m * bins).reshape(m, bins)
        h_joint = h_term[per_trial].sum(axis=1)
        # Slack absorbs summation-order noise when a permutation ties the
        # observed statistic exactly.
        at_least += int(np.count_nonzero(h_joint <= observed + 1e-9))
        done += m
    return (1 + at_least) / (1 + n_perms)
