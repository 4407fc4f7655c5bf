"""Cluster statistics, size histograms, daily series and power-law fitting."""
from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import IO, Callable, Iterable, Mapping, Optional, Sequence, Union

import numpy as np
from scipy.optimize import brentq
from scipy.special import zeta

from .ingestion import TransactionRecord
from .union_find import DisjointSetForest

LARGE_THRESHOLD = 1000
SUPER_THRESHOLD = 200_000
SECONDS_PER_DAY = 86_400


@dataclass
class ClusterSummary:
    total_clusters: int
    single_member: int
    medium_count: int
    medium_avg_size: Optional[float]
    large_clusters: int
    superclusters: int
    total_addresses: int

    def to_json(self) -> dict:
        return asdict(self)


def _check_thresholds(large: int, super_: int) -> None:
    if large < 1 or super_ < large:
        raise ValueError(f"need 1 <= large <= super, got large={large} super={super_}")


def summary_from_histogram(hist: Mapping[int, int], large: int = LARGE_THRESHOLD,
                           super_: int = SUPER_THRESHOLD) -> ClusterSummary:
    """Summary statistics from a size -> cluster-count mapping.

    Medium clusters have 2..``large`` members inclusive; large ones more than
    ``large``; superclusters more than ``super_``.
    """
    _check_thresholds(large, super_)
    total = singles = medium = medium_sum = n_large = n_super = addresses = 0
    for size, count in hist.items():
        if size < 1 or count < 0:
            raise ValueError(f"bad histogram entry {size}: {count}")
        total += count
        addresses += size * count
        if size == 1:
            singles += count
        elif size <= large:
            medium += count
            medium_sum += size * count
        else:
            n_large += count
            if size > super_:
                n_super += count
    return ClusterSummary(
        total_clusters=total,
        single_member=singles,
        medium_count=medium,
        medium_avg_size=medium_sum / medium if medium else None,
        large_clusters=n_large,
        superclusters=n_super,
        total_addresses=addresses,
    )


def size_histogram(forest: DisjointSetForest) -> dict[int, int]:
    """Exact size -> cluster-count multiset, ascending by size."""
    size = forest.size
    counts = Counter(size[r] for r in forest.roots())
    return dict(sorted(counts.items()))


def histogram_from_sizes(sizes: Iterable[int]) -> dict[int, int]:
    return dict(sorted(Counter(sizes).items()))


def summarize(forest: DisjointSetForest, large: int = LARGE_THRESHOLD,
              super_: int = SUPER_THRESHOLD) -> ClusterSummary:
    return summary_from_histogram(size_histogram(forest), large, super_)


def write_summary(path: Union[str, Path], summary: ClusterSummary, **extra) -> None:
    obj = summary.to_json()
    obj.update(extra)
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


def write_histogram(path: Union[str, Path], hist: Mapping[int, int]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["size", "count"])
        w.writerows(sorted(hist.items()))


def read_histogram(path: Union[str, Path]) -> dict[int, int]:
    with open(path, newline="") as fh:
        rows = csv.reader(fh)
        header = next(rows, None)
        if header != ["size", "count"]:
            raise ValueError(f"{path}: expected header 'size,count', got {header!r}")
        return {int(s): int(c) for s, c in rows}


# power law -----------------------------------------------------------------

class DegenerateInput(ValueError):
    pass


@dataclass
class PowerLawFit:
    alpha: float
    sigma: float
    xmin: int
    ks_distance: float
    n_tail: int

    def to_json(self) -> dict:
        return asdict(self)


def discrete_alpha_approx(tail: Sequence[int], xmin: int) -> float:
    """Closed-form estimate ``1 + n / sum(ln(x / (xmin - 0.5)))``.

    Cheap, but biased low for small xmin (about -0.13 at xmin=2, alpha=2.5).
    """
    t = np.asarray(tail, dtype=np.float64)
    return 1.0 + t.size / np.sum(np.log(t / (xmin - 0.5)))


def _log_moment(alpha: float, xmin: int, span: int = 1000) -> float:
    """sum_{k >= xmin} ln(k) k^-alpha, i.e. -d/dalpha of the Hurwitz zeta.

    Direct sum over ``span`` terms, Euler-Maclaurin for the rest.
    """
    k = np.arange(xmin, xmin + span, dtype=np.float64)
    head = float(np.sum(np.log(k) * k ** -alpha))
    m = float(xmin + span)
    lm = math.log(m)
    a = alpha
    integral = m ** (1 - a) * (lm / (a - 1) + 1 / (a - 1) ** 2)
    f0 = lm * m ** -a
    f1 = m ** (-a - 1) * (1 - a * lm)
    f3 = m ** (-a - 3) * (a * (a + 1) + (a + 2) * (2 * a + 1) - a * (a + 1) * (a + 2) * lm)
    return head + integral + f0 / 2 - f1 / 12 + f3 / 720


def _alpha_from_mean_log(mean_log: float, xmin: int) -> float:
    # score equation: E_alpha[ln X] = observed mean of ln x
    def score(a: float) -> float:
        return _log_moment(a, xmin) / zeta(a, xmin) - mean_log

    if mean_log <= math.log(xmin):
        raise DegenerateInput(f"all tail observations equal xmin={xmin}")
    hi = 2.0
    while score(hi) > 0:
        hi *= 2.0
        if hi > 1e4:
            raise DegenerateInput("alpha diverges")
    return brentq(score, 1.0 + 1e-9, hi, xtol=1e-14, rtol=1e-15)


def discrete_alpha_mle(tail: Sequence[int], xmin: int) -> float:
    """Exact discrete maximum-likelihood alpha for observations ``>= xmin``."""
    t = np.asarray(tail, dtype=np.float64)
    return _alpha_from_mean_log(float(np.mean(np.log(t))), xmin)


def power_law_cdf(x, alpha: float, xmin: int):
    """P(X <= x) for the discrete power law on ``x >= xmin``."""
    x = np.asarray(x, dtype=np.float64)
    cdf = 1.0 - zeta(alpha, x + 1.0) / zeta(alpha, xmin)
    return np.where(x < xmin, 0.0, cdf)


def _ks(values: np.ndarray, counts: np.ndarray, alpha: float, xmin: int) -> float:
    empirical = np.cumsum(counts) / counts.sum()
    return float(np.max(np.abs(empirical - power_law_cdf(values, alpha, xmin))))


def fit_power_law(sizes: Iterable[int], xmin: Optional[int] = None, min_tail: int = 10,
                  xmin_quantile: float = 0.95, estimator: str = "exact") -> PowerLawFit:
    """Fit a discrete power law, choosing xmin by minimum KS distance.

    Candidates are the distinct observed values up to ``xmin_quantile`` of the
    data; each needs ``min_tail`` observations and two distinct values at or
    above it. Pass ``xmin`` to fix the cutoff instead of searching.
    ``estimator`` is ``"exact"`` (numerical MLE) or ``"approx"`` (closed form).
    """
    x = np.asarray(list(sizes) if not isinstance(sizes, np.ndarray) else sizes, dtype=np.int64)
    values, counts = np.unique(x, return_counts=True)
    return _fit_counts(values, counts, xmin, min_tail, xmin_quantile, estimator)


def fit_power_law_histogram(hist: Mapping[int, int], **kw) -> PowerLawFit:
    """``fit_power_law`` on a size -> count mapping, without expanding it."""
    items = sorted((s, c) for s, c in hist.items() if c > 0)
    values = np.array([s for s, _ in items], dtype=np.int64)
    counts = np.array([c for _, c in items], dtype=np.int64)
    return _fit_counts(values, counts, **kw)


def _fit_counts(values: np.ndarray, counts: np.ndarray, xmin: Optional[int] = None,
                min_tail: int = 10, xmin_quantile: float = 0.95,
                estimator: str = "exact") -> PowerLawFit:
    if estimator not in ("exact", "approx"):
        raise ValueError(f"unknown estimator {estimator!r}")
    if values.size == 0:
        raise DegenerateInput("no observations")
    if values[0] < 1:
        raise ValueError("sizes must be positive integers")
    if values.size < 2:
        raise DegenerateInput(f"all {counts.sum()} observations equal {values[0]}")

    # suffix aggregates: tail count and tail sum of ln(x) at each distinct value
    n_tail = np.cumsum(counts[::-1])[::-1]
    log_sum = np.cumsum((counts * np.log(values))[::-1])[::-1]

    if xmin is not None:
        idx = np.searchsorted(values, xmin)
        if idx == values.size or values[idx] != xmin:
            raise DegenerateInput(f"xmin={xmin} is not an observed value")
        candidates = [int(idx)]
    else:
        # smallest value whose cumulative share reaches the quantile
        share = np.cumsum(counts) / counts.sum()
        cutoff = values[min(int(np.searchsorted(share, xmin_quantile)), values.size - 1)]
        candidates = [i for i in range(values.size) if values[i] <= cutoff]

    best: Optional[PowerLawFit] = None
    for i in candidates:
        n = int(n_tail[i])
        if n < min_tail or i >= values.size - 1:
            continue
        xm = int(values[i])
        if estimator == "exact":
            alpha = _alpha_from_mean_log(float(log_sum[i]) / n, xm)
        else:
            alpha = 1.0 + n / (log_sum[i] - n * math.log(xm - 0.5))
        d = _ks(values[i:], counts[i:], alpha, xm)
        if best is None or d < best.ks_distance:
            best = PowerLawFit(float(alpha), float((alpha - 1.0) / math.sqrt(n)), xm, d, n)
    if best is None:
        raise DegenerateInput(
            f"no candidate xmin leaves {min_tail} observations over two distinct values")
    return best


def sample_discrete_power_law(n: int, alpha: float, xmin: int,
                              rng: np.random.Generator, table_size: int = 100_000) -> np.ndarray:
    """Inverse-CDF draws from the discrete power law on ``x >= xmin``.

    Exact over a survival table of ``table_size`` values; the rare draws past
    the table use the continuous approximation anchored at its end.
    """
    if alpha <= 1 or xmin < 1:
        raise ValueError("need alpha > 1 and xmin >= 1")
    grid = np.arange(xmin, xmin + table_size, dtype=np.float64)
    surv = zeta(alpha, grid) / zeta(alpha, xmin)  # P(X >= grid)
    u = rng.random(n)
    # largest k with surv[k] >= u; surv is decreasing
    k = np.searchsorted(-surv, -u, side="right") - 1
    out = grid[np.maximum(k, 0)]
    beyond = u < surv[-1]
    if beyond.any():
        end = grid[-1]
        out[beyond] = np.floor(
            (end - 0.5) * (u[beyond] / surv[-1]) ** (-1.0 / (alpha - 1.0)) + 0.5)
    return out.astype(np.int64)


# daily series ---------------------------------------------------------------

@dataclass
class DailyRow:
    day: int
    new_addresses: int
    new_entities: int
    active_addresses: int
    active_entities: int


ClusterOf = Union[DisjointSetForest, Callable[[int], object], Sequence[int], Mapping[int, object]]


def _cluster_lookup(cluster_of: ClusterOf) -> Callable[[int], object]:
    if isinstance(cluster_of, DisjointSetForest):
        labels = cluster_of.finalize()
        return labels.__getitem__
    if callable(cluster_of):
        return cluster_of
    return cluster_of.__getitem__


def day_index(slot: int, origin_offset: int = 0) -> int:
    return (slot + origin_offset) // SECONDS_PER_DAY


def daily_series(txs: Iterable[TransactionRecord], cluster_of: ClusterOf,
                 origin_offset: int = 0) -> list[DailyRow]:
    """Per-day new/active address and entity counts.

    An address is new on the day it first appears anywhere in a transaction;
    an entity is new on the day its earliest member appears. Only spending
    (input side) makes an address, and hence its entity, active that day.
    Days between the first and last transaction day with no activity are
    emitted as zero rows.
    """
    first_day: dict[int, int] = {}
    active: dict[int, set[int]] = {}
    tx_days: set[int] = set()
    for tx in txs:
        day = (tx.slot + origin_offset) // SECONDS_PER_DAY
        tx_days.add(day)
        for info in tx.inputs:
            prev = first_day.get(info.id)
            if prev is None or day < prev:
                first_day[info.id] = day
            active.setdefault(day, set()).add(info.id)
        for info, _ in tx.outputs:
            prev = first_day.get(info.id)
            if prev is None or day < prev:
                first_day[info.id] = day
    if not tx_days:
        return []

    lookup = _cluster_lookup(cluster_of)
    new_addr: Counter = Counter(first_day.values())
    entity_first: dict[object, int] = {}
    for addr, day in first_day.items():
        c = lookup(addr)
        prev = entity_first.get(c)
        if prev is None or day < prev:
            entity_first[c] = day
    new_ent: Counter = Counter(entity_first.values())

    rows = []
    for day in range(min(tx_days), max(tx_days) + 1):
        act = active.get(day, ())
        rows.append(DailyRow(day, new_addr[day], new_ent[day], len(act),
                             len({lookup(a) for a in act})))
    return rows


def write_series(dest: Union[str, Path, IO[str]], rows: Iterable[DailyRow]) -> None:
    """Write ``day,new_addresses,new_entities,active_addresses,active_entities``."""
    if isinstance(dest, (str, Path)):
        with open(dest, "w", newline="") as fh:
            write_series(fh, rows)
        return
    w = csv.writer(dest, lineterminator="\n")
    w.writerow(["day", "new_addresses", "new_entities", "active_addresses", "active_entities"])
    for r in rows:
        w.writerow([r.day, r.new_addresses, r.new_entities, r.active_addresses,
                    r.active_entities])
