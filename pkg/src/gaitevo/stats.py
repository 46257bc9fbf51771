"""Nonparametric comparisons and summary statistics."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

EXACT_LIMIT = 12  # total sample size up to which p is computed by enumeration
BOOTSTRAP_RESAMPLES = 10_000


def midranks(values) -> np.ndarray:
    """1-based ranks, ties receiving the mean of the ranks they span."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    sorted_vals = values[order]
    i = 0
    n = len(values)
    while i < n:
        j = i
        while j + 1 < n and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def u_statistic(a, b) -> float:
    """Mann-Whitney U of sample ``a`` (number of pairs with a > b, ties counting 1/2)."""
    a = np.asarray(a, dtype=float)
    ranks = midranks(np.concatenate([a, np.asarray(b, dtype=float)]))
    n1 = len(a)
    return float(ranks[:n1].sum() - n1 * (n1 + 1) / 2.0)


def _check_samples(a, b):
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ParameterError("Mann-Whitney U needs non-empty samples")
    return a, b


def exact_p_value(a, b) -> float:
    """Two-sided p by enumerating every split of the pooled midranks."""
    a, b = _check_samples(a, b)
    n1, n2 = len(a), len(b)
    ranks = midranks(np.concatenate([a, b]))
    center = n1 * n2 / 2.0
    u_obs = ranks[:n1].sum() - n1 * (n1 + 1) / 2.0
    dev_obs = abs(u_obs - center)
    offset = n1 * (n1 + 1) / 2.0
    extreme = total = 0
    tol = 1e-9 * max(1.0, center)
    for idx in itertools.combinations(range(n1 + n2), n1):
        u = ranks[list(idx)].sum() - offset
        total += 1
        if abs(u - center) >= dev_obs - tol:
            extreme += 1
    return min(1.0, extreme / total)


def normal_p_value(a, b, continuity: bool = True) -> float:
    """Two-sided p from the normal approximation with tie-corrected variance."""
    a, b = _check_samples(a, b)
    n1, n2 = len(a), len(b)
    n = n1 + n2
    pooled = np.concatenate([a, b])
    ranks = midranks(pooled)
    u = ranks[:n1].sum() - n1 * (n1 + 1) / 2.0
    _, counts = np.unique(pooled, return_counts=True)
    ties = float(np.sum(counts ** 3 - counts))
    var = n1 * n2 / 12.0 * ((n + 1) - ties / (n * (n - 1))) if n > 1 else 0.0
    if var <= 0:
        return 1.0
    dev = abs(u - n1 * n2 / 2.0)
    if continuity:
        dev = max(0.0, dev - 0.5)
    z = dev / math.sqrt(var)
    return min(1.0, math.erfc(z / math.sqrt(2.0)))


def mann_whitney_u(a, b) -> tuple:
    """Two-sided Mann-Whitney U test; returns ``(U_a, p)``.

    Exact by enumeration when ``len(a) + len(b) <= 12``, otherwise the
    normal approximation with tie and continuity corrections.
    """
    a, b = _check_samples(a, b)
    u = u_statistic(a, b)
    if len(a) + len(b) <= EXACT_LIMIT:
        p = exact_p_value(a, b)
    else:
        p = normal_p_value(a, b)
    return u, p


def bonferroni_alpha(alpha: float = 0.05, comparisons: int = 16) -> float:
    return alpha / comparisons


def bootstrap_ci(sample, resamples: int = BOOTSTRAP_RESAMPLES, level: float = 0.95, seed=0):
    """Percentile bootstrap confidence interval for the mean."""
    x = np.asarray(sample, dtype=float).ravel()
    if x.size == 0:
        raise ParameterError("cannot bootstrap an empty sample")
    if x.size == 1 or np.all(x == x[0]):
        return float(x[0]), float(x[0])
    rng = np.random.default_rng(seed)
    means = x[rng.integers(0, x.size, size=(resamples, x.size))].mean(axis=1)
    tail = 50.0 * (1.0 - level)
    lo, hi = np.percentile(means, [tail, 100.0 - tail])
    return float(lo), float(hi)


@dataclass(frozen=True)
class GroupSummary:
    name: str
    n: int
    mean: float
    median: float
    ci_low: float
    ci_high: float
    low_n: bool


@dataclass(frozen=True)
class Comparison:
    first: str
    second: str
    u: float
    p: float
    significant: bool


@dataclass
class StatsReport:
    metric: str
    groups: list = field(default_factory=list)
    comparisons: list = field(default_factory=list)
    alpha: float = 0.05
    corrected_alpha: float = 0.05

    def group(self, name) -> GroupSummary:
        for g in self.groups:
            if g.name == name:
                return g
        raise KeyError(name)


def summarize(records, grouping, metric: str = "composite", *, alpha: float = 0.05,
              comparisons: int | None = None, seed=0, low_n: int = 5) -> StatsReport:
    """Per-group mean/median/bootstrap CI plus pairwise Mann-Whitney tests.

    ``records`` is an iterable of mappings (or objects with attributes);
    ``grouping`` is a key name or a callable returning the group label.
    The Bonferroni divisor defaults to the number of pairwise tests made.
    """
    key = grouping if callable(grouping) else (lambda r: _field(r, grouping))
    groups: dict = {}
    for r in records:
        groups.setdefault(key(r), []).append(float(_field(r, metric)))
    if not groups:
        raise ParameterError("no records to summarise")
    names = sorted(groups, key=str)
    report = StatsReport(metric=metric, alpha=alpha)
    for name in names:
        vals = np.asarray(groups[name])
        lo, hi = bootstrap_ci(vals, seed=seed)
        report.groups.append(GroupSummary(str(name), len(vals), float(vals.mean()),
                                          float(np.median(vals)), lo, hi, len(vals) < low_n))
    pairs = list(itertools.combinations(names, 2))
    divisor = comparisons if comparisons is not None else max(1, len(pairs))
    report.corrected_alpha = bonferroni_alpha(alpha, divisor)
    for x, y in pairs:
        u, p = mann_whitney_u(groups[x], groups[y])
        report.comparisons.append(Comparison(str(x), str(y), u, p, p < report.corrected_alpha))
    return report


def _field(record, name):
    if isinstance(record, dict):
        return record[name]
    return getattr(record, name)
