"""Regional indicators, distance-ring profiles, ranking normalization, growth boxes.

Nine indicators summarize each cluster; the aggregation index measures how
evenly a cluster's members spread over the five distance rings around its
centroid. Ranking values are min-max normalized across every cluster of
every period so bars are comparable UI-wide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cluster import RegionalCluster
from .errors import EmptyCluster, UndefinedCV
from .geo import haversine_km
from .ingest import Vocabularies
from .records import TIERS, EnterpriseRecord, Month, SURVIVING_STATE, month_range

# Distance bands in km from the cluster centroid, half-open [lo, hi).
RING_BANDS = ((0.0, 1.5), (1.5, 2.0), (2.0, 4.0), (4.0, 6.0), (6.0, 10.0))

UNBOUNDED = math.inf


def coefficient_of_variation(values) -> float:
    """Population standard deviation over mean."""
    xs = np.asarray(values, dtype=float)
    if xs.size == 0:
        raise ValueError("CV of an empty vector")
    mean = float(xs.mean())
    std = float(xs.std())
    if mean == 0.0:
        if std == 0.0:
            raise UndefinedCV("all values zero")
        raise UndefinedCV("zero mean")
    return std / mean


def aggregation_index(values) -> float | None:
    """Reciprocal CV: inf for a perfectly even vector, None when CV is undefined."""
    try:
        cv = coefficient_of_variation(values)
    except UndefinedCV:
        return None
    if cv == 0.0:
        return UNBOUNDED
    return 1.0 / cv


def is_surviving(record: EnterpriseRecord, as_of: Month) -> bool:
    """Alive at period end: a surviving state and no death date on or before it.

    Registry state fields and deregistration dates disagree at times, so
    either signal is enough to mark a death.
    """
    if record.state != SURVIVING_STATE:
        return False
    return record.end_date is None or record.end_date > as_of.last_day()


def livability(members: list[EnterpriseRecord], as_of: Month) -> tuple[float, float]:
    """Surviving fraction at period end and its exact complement."""
    if not members:
        raise EmptyCluster("livability of an empty member set")
    alive = sum(1 for r in members if is_surviving(r, as_of))
    liv = alive / len(members)
    return liv, 1.0 - liv


def ring_index(distance_km: float) -> int | None:
    """Band index for a centroid distance; None beyond the last band."""
    for i, (lo, hi) in enumerate(RING_BANDS):
        if lo <= distance_km < hi:
            return i
    return None


def ring_counts(members: list[EnterpriseRecord], centroid: tuple[float, float]) -> tuple[np.ndarray, int]:
    """Per-band member counts plus the beyond-10km remainder."""
    counts = np.zeros(len(RING_BANDS), dtype=int)
    remainder = 0
    clon, clat = centroid
    for r in members:
        idx = ring_index(haversine_km(r.lon, r.lat, clon, clat))
        if idx is None:
            remainder += 1
        else:
            counts[idx] += 1
    return counts, remainder


@dataclass(frozen=True)
class IndicatorSet:
    """The nine per-cluster indicators."""

    n_primary: int
    n_secondary: int
    n_tertiary: int
    aggregation_index: float | None
    avg_capital: float
    total_capital: float
    credit_rating: float
    livability: float
    mortality: float

    FIELDS = (
        "n_primary", "n_secondary", "n_tertiary", "aggregation_index",
        "avg_capital", "total_capital", "credit_rating", "livability", "mortality",
    )

    @property
    def member_count(self) -> int:
        return self.n_primary + self.n_secondary + self.n_tertiary


@dataclass(frozen=True)
class RingSlice:
    band_km: tuple[float, float]
    count: int
    indicators: IndicatorSet | None


@dataclass(frozen=True)
class RingProfile:
    rings: tuple[RingSlice, ...]
    remainder_count: int

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(r.count for r in self.rings)


def resolve_members(
    cluster: RegionalCluster, records_by_id: dict[str, EnterpriseRecord]
) -> list[EnterpriseRecord]:
    missing = [rid for rid in cluster.member_ids if rid not in records_by_id]
    if missing:
        raise KeyError(f"cluster {cluster.cluster_id} references unknown records: {missing[:3]}")
    return [records_by_id[rid] for rid in cluster.member_ids]


def _indicators_for(
    members: list[EnterpriseRecord],
    centroid: tuple[float, float],
    vocabs: Vocabularies,
    as_of: Month,
) -> IndicatorSet:
    if not members:
        raise EmptyCluster("indicators of an empty member set")
    tier_counts = {t: 0 for t in TIERS}
    for r in members:
        tier_counts[r.tier] += 1
    capitals = [r.registered_capital for r in members]
    total_capital = float(sum(capitals))
    avg_capital = total_capital / len(members)

    credit_vocab = vocabs.credit_rating
    codes = [
        credit_vocab.slot(r.credit_rating)
        for r in members
        if credit_vocab.slot(r.credit_rating) < len(credit_vocab.values)
    ]
    credit = float(np.mean(codes)) if codes else 0.0

    counts, _ = ring_counts(members, centroid)
    liv, mort = livability(members, as_of)
    return IndicatorSet(
        n_primary=tier_counts[TIERS[0]],
        n_secondary=tier_counts[TIERS[1]],
        n_tertiary=tier_counts[TIERS[2]],
        aggregation_index=aggregation_index(counts),
        avg_capital=avg_capital,
        total_capital=total_capital,
        credit_rating=credit,
        livability=liv,
        mortality=mort,
    )


def indicator_set(
    cluster: RegionalCluster,
    records_by_id: dict[str, EnterpriseRecord],
    vocabs: Vocabularies,
    as_of: Month,
) -> IndicatorSet:
    """All nine indicators for a cluster, as of the period's final month."""
    members = resolve_members(cluster, records_by_id)
    return _indicators_for(members, cluster.centroid, vocabs, as_of)


def ring_profile(
    cluster: RegionalCluster,
    records_by_id: dict[str, EnterpriseRecord],
    vocabs: Vocabularies,
    as_of: Month,
) -> RingProfile:
    """Members bucketed by centroid distance, with per-band indicator sets."""
    members = resolve_members(cluster, records_by_id)
    clon, clat = cluster.centroid
    buckets: list[list[EnterpriseRecord]] = [[] for _ in RING_BANDS]
    remainder = 0
    for r in members:
        idx = ring_index(haversine_km(r.lon, r.lat, clon, clat))
        if idx is None:
            remainder += 1
        else:
            buckets[idx].append(r)
    rings = tuple(
        RingSlice(
            band_km=band,
            count=len(bucket),
            indicators=(
                _indicators_for(bucket, cluster.centroid, vocabs, as_of)
                if bucket else None
            ),
        )
        for band, bucket in zip(RING_BANDS, buckets)
    )
    return RingProfile(rings=rings, remainder_count=remainder)


def normalize_values(values) -> list[float]:
    """Min-max to [0,1]; a constant vector maps to 0.5 everywhere.

    Unbounded aggregation indexes pin to 1.0; undefined ones sit at the
    neutral 0.5 so they neither win nor lose a ranking.
    """
    values = list(values)
    if not values:
        return []
    finite = [v for v in values if v is not None and math.isfinite(v)]
    if not finite:
        return [0.5] * len(values)
    lo, hi = min(finite), max(finite)
    out = []
    for v in values:
        if v is None:
            out.append(0.5)
        elif v == UNBOUNDED:
            out.append(1.0)
        elif hi == lo:
            out.append(0.5)
        else:
            out.append((v - lo) / (hi - lo))
    return out


def normalize_for_ranking(indicator_sets: list[IndicatorSet], metric: str) -> list[float]:
    """One metric across every cluster of every period, scaled for bar lengths."""
    if not indicator_sets:
        raise ValueError("no clusters to normalize")
    if metric not in IndicatorSet.FIELDS:
        raise ValueError(f"unknown metric: {metric!r}")
    return normalize_values(getattr(s, metric) for s in indicator_sets)


@dataclass(frozen=True)
class FiveNumber:
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float


def five_number(values) -> FiveNumber:
    """Box-plot summary with linear-interpolation quartiles."""
    xs = np.asarray(sorted(values), dtype=float)
    if xs.size == 0:
        raise ValueError("five-number summary of no samples")
    q = np.percentile(xs, [0, 25, 50, 75, 100], method="linear")
    return FiveNumber(*map(float, q))


@dataclass(frozen=True)
class GrowthBox:
    tier: str
    summary: FiveNumber | None
    n_samples: int
    skipped: int


@dataclass(frozen=True)
class PeriodGrowth:
    period: tuple[int, int]
    boxes: tuple[GrowthBox, ...]


def monthly_member_counts(
    members: list[EnterpriseRecord], months: list[Month]
) -> np.ndarray:
    """(3, n_months) active counts per tier for a fixed member subset."""
    counts = np.zeros((3, len(months)), dtype=float)
    for r in members:
        t = TIERS.index(r.tier)
        for j, m in enumerate(months):
            if r.active_in(m):
                counts[t, j] += 1
    return counts


def growth_samples(counts: np.ndarray) -> tuple[list[float], int]:
    """Month-over-month relative growth; zero-base months are skipped."""
    samples, skipped = [], 0
    for prev, cur in zip(counts[:-1], counts[1:]):
        if prev == 0:
            skipped += 1
            continue
        samples.append((cur - prev) / prev)
    return samples, skipped


def growth_rates(
    path_clusters: list[RegionalCluster],
    records_by_id: dict[str, EnterpriseRecord],
    span_start: Month,
) -> list[PeriodGrowth]:
    """Per-period, per-tier growth-rate box data along one evolution path."""
    if len(path_clusters) < 2:
        raise ValueError("growth rates need a path of at least 2 periods")
    out = []
    for cluster in path_clusters:
        members = resolve_members(cluster, records_by_id)
        lo, hi = cluster.period
        months = month_range(span_start.plus(lo), span_start.plus(hi))
        counts = monthly_member_counts(members, months)
        boxes = []
        for t, tier in enumerate(TIERS):
            samples, skipped = growth_samples(counts[t])
            boxes.append(GrowthBox(
                tier=tier.value,
                summary=five_number(samples) if samples else None,
                n_samples=len(samples),
                skipped=skipped,
            ))
        out.append(PeriodGrowth(period=cluster.period, boxes=tuple(boxes)))
    return out
