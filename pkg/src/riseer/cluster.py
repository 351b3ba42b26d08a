"""Auto-parameterized density clustering of enterprise locations.

Candidate densities come from the k-average-nearest-neighbor curve; the
point count threshold is derived from the mean neighborhood size at each
candidate radius; the sweep stops at the first radius where the cluster
count holds steady three times in a row.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array

from .errors import DegenerateDataset, UnstableParameters
from .geo import SphereIndex
from .records import EnterpriseRecord, Month
from .segmentation import Segment

log = logging.getLogger(__name__)

NOISE = -1

DEFAULT_MIN_DATASET = 10
DEFAULT_RUN_LENGTH = 3
DEFAULT_K_MAX = 40


@dataclass(frozen=True)
class ClusterParams:
    """Density radius in kilometers and the core-point threshold."""

    eps_km: float
    min_pts: int

    def __post_init__(self):
        if not (math.isfinite(self.eps_km) and self.eps_km > 0):
            raise ValueError(f"eps_km must be positive and finite, got {self.eps_km}")
        if self.min_pts < 2:
            raise ValueError(f"min_pts must be at least 2, got {self.min_pts}")


@dataclass(frozen=True)
class RegionalCluster:
    """One dense group of enterprises within an evolution period."""

    cluster_id: str
    period: tuple[int, int]
    member_ids: tuple[str, ...]
    centroid: tuple[float, float]
    label: str = "core cluster"

    def __post_init__(self):
        if not self.member_ids:
            raise ValueError("a cluster cannot be empty")

    @property
    def size(self) -> int:
        return len(self.member_ids)


@dataclass
class SweepEntry:
    eps_km: float
    min_pts: int
    n_clusters: int


@dataclass
class PeriodClustering:
    """Clustering result for one evolution period."""

    period: tuple[int, int]
    months: tuple[Month, Month]
    params: ClusterParams
    stable: bool
    clusters: list[RegionalCluster]
    noise_count: int
    n_points: int
    sweep: list[SweepEntry] = field(default_factory=list)


def eps_candidates(lon, lat, k_max: int | None = None) -> np.ndarray:
    """Ascending radius candidates: mean distance to the k-th nearest neighbor.

    The curve is non-decreasing in k because each point's own k-th neighbor
    distances are.
    """
    n = len(lon)
    if n < 2:
        raise DegenerateDataset(f"need at least 2 points for radius candidates, got {n}")
    if k_max is None:
        k_max = min(n - 1, DEFAULT_K_MAX)
    k_max = min(k_max, n - 1)
    index = SphereIndex(lon, lat)
    return index.knn_km(k_max).mean(axis=0)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def minpts_for_eps(lon, lat, eps_km: float, index: SphereIndex | None = None) -> int:
    """Mean neighborhood size at eps, self included, rounded, never below 2."""
    if eps_km <= 0:
        raise ValueError(f"eps_km must be positive, got {eps_km}")
    if index is None:
        index = SphereIndex(lon, lat)
    counts = index.counts_within(eps_km)
    return max(2, _round_half_up(float(np.mean(counts))))


def dbscan(lon, lat, params: ClusterParams, index: SphereIndex | None = None) -> np.ndarray:
    """Density labels: cluster index per point, -1 for noise.

    Deterministic by construction: clusters are seeded in input order, so a
    border point in reach of several clusters joins the one discovered first.
    Neighbor sets are pulled from the index on demand rather than stored,
    which keeps memory flat on dense data.
    """
    n = len(lon)
    labels = np.full(n, NOISE, dtype=np.int64)
    if n == 0:
        return labels
    if index is None:
        index = SphereIndex(lon, lat)
    counts = index.counts_within(params.eps_km)
    core = counts >= params.min_pts

    cluster = 0
    for seed in np.nonzero(core)[0]:
        if labels[seed] != NOISE:
            continue
        labels[seed] = cluster
        queue = deque([int(seed)])
        while queue:
            j = queue.popleft()
            for nb in index.neighbors_of(j, params.eps_km):
                if core[nb] and labels[nb] == NOISE:
                    labels[nb] = cluster
                    queue.append(int(nb))
        cluster += 1

    for i in np.nonzero(~core)[0]:
        neighbor_labels = [
            labels[nb] for nb in index.neighbors_of(i, params.eps_km)
            if core[nb]
        ]
        if neighbor_labels:
            labels[i] = min(neighbor_labels)
    return labels


def cluster_count(labels: np.ndarray) -> int:
    return int(labels.max() + 1) if labels.size and labels.max() >= 0 else 0


def stable_params(
    lon,
    lat,
    k_max: int | None = None,
    min_size: int = DEFAULT_MIN_DATASET,
    run_length: int = DEFAULT_RUN_LENGTH,
    sweep_out: list[SweepEntry] | None = None,
) -> ClusterParams:
    """First radius whose cluster count repeats run_length times in a row.

    Returns the smallest-radius parameters of that stable run. Runs with a
    zero cluster count never qualify; an all-noise labeling is not a stable
    clustering, just a radius that is still too small.
    """
    n = len(lon)
    if n < min_size:
        raise DegenerateDataset(f"need at least {min_size} points, got {n}")
    candidates = eps_candidates(lon, lat, k_max=k_max)
    index = SphereIndex(lon, lat)

    run_start = 0
    run_count = None
    entries: list[SweepEntry] = []
    for i, eps in enumerate(candidates):
        params = ClusterParams(float(eps), minpts_for_eps(lon, lat, float(eps), index=index))
        count = cluster_count(dbscan(lon, lat, params, index=index))
        entries.append(SweepEntry(params.eps_km, params.min_pts, count))
        if sweep_out is not None:
            sweep_out.append(entries[-1])
        if count == run_count:
            if count > 0 and i - run_start + 1 >= run_length:
                first = entries[run_start]
                return ClusterParams(first.eps_km, first.min_pts)
        else:
            run_start = i
            run_count = count
    raise UnstableParameters(
        f"no cluster count held for {run_length} consecutive candidates "
        f"(counts: {[e.n_clusters for e in entries]})"
    )


def fallback_params(lon, lat, k_max: int | None = None) -> ClusterParams:
    """Median radius candidate, for datasets where the sweep never settles."""
    candidates = eps_candidates(lon, lat, k_max=k_max)
    eps = float(np.median(candidates))
    return ClusterParams(eps, minpts_for_eps(lon, lat, eps))


def kmeans_centroid(lon, lat) -> tuple[float, float]:
    """Single-centroid KMeans fixed point, which is the coordinate-wise mean.

    With one centroid every point is assigned to it, so the first update
    step lands on the mean and stays there.
    """
    lon = np.asarray(lon, dtype=float)
    if lon.size == 0:
        raise DegenerateDataset("cannot take the centroid of no points")
    return float(np.mean(lon)), float(np.mean(np.asarray(lat, dtype=float)))


def period_members(
    records: list[EnterpriseRecord], start: Month, end: Month
) -> list[EnterpriseRecord]:
    """Enterprises active at any month of the period, in input order."""
    return [r for r in records if r.active_between(start, end)]


def cluster_period(
    records: list[EnterpriseRecord],
    period: Segment,
    span_start: Month,
    min_size: int = DEFAULT_MIN_DATASET,
    k_max: int | None = None,
    run_length: int = DEFAULT_RUN_LENGTH,
    params: ClusterParams | None = None,
) -> PeriodClustering:
    """Cluster the locations of enterprises active within one period.

    Noise points are excluded from every cluster but reported in the tally.
    Passing params skips the automatic search entirely. When the parameter
    sweep never stabilizes, the median radius candidate is used instead and
    the result is flagged.
    """
    start = span_start.plus(period.start_idx)
    end = span_start.plus(period.end_idx)
    members = period_members(records, start, end)
    key = (period.start_idx, period.end_idx)
    if not members:
        return PeriodClustering(key, (start, end), params or ClusterParams(1.0, 2),
                                True, [], 0, 0)
    if len(members) < min_size:
        raise DegenerateDataset(
            f"period {start}..{end} has {len(members)} locatable records, "
            f"need {min_size}"
        )

    lon = np.array([r.lon for r in members])
    lat = np.array([r.lat for r in members])
    sweep: list[SweepEntry] = []
    stable = True
    if params is None:
        try:
            params = stable_params(lon, lat, k_max=k_max, min_size=min_size,
                                   run_length=run_length, sweep_out=sweep)
        except UnstableParameters as exc:
            stable = False
            params = fallback_params(lon, lat, k_max=k_max)
            log.warning("period %s..%s: %s; falling back to median radius %.3f km",
                        start, end, exc, params.eps_km)

    labels = dbscan(lon, lat, params)
    clusters = []
    for label in range(cluster_count(labels)):
        mask = labels == label
        ids = tuple(members[i].id for i in np.nonzero(mask)[0])
        centroid = kmeans_centroid(lon[mask], lat[mask])
        clusters.append(RegionalCluster(
            cluster_id=f"p{key[0]:04d}-{key[1]:04d}-c{label:02d}",
            period=key,
            member_ids=ids,
            centroid=centroid,
        ))
    return PeriodClustering(
        period=key,
        months=(start, end),
        params=params,
        stable=stable,
        clusters=clusters,
        noise_count=int(np.sum(labels == NOISE)),
        n_points=len(members),
        sweep=sweep,
    )


class HaversineDBSCAN(BaseEstimator, ClusterMixin):
    """Density clustering over lon/lat rows with fixed parameters.

    Parameters
    ----------
    eps_km : float, neighborhood radius in kilometers
    min_pts : int, smallest neighborhood size (self included) of a core point

    Attributes
    ----------
    labels_ : ndarray of cluster indices, -1 for noise
    core_sample_indices_ : indices of core points
    n_clusters_ : number of clusters found
    """

    def __init__(self, eps_km: float = 1.0, min_pts: int = 5):
        self.eps_km = eps_km
        self.min_pts = min_pts

    def fit(self, X, y=None):
        X = check_array(X)
        if X.shape[1] != 2:
            raise ValueError("expected two columns: lon, lat")
        params = ClusterParams(self.eps_km, self.min_pts)
        index = SphereIndex(X[:, 0], X[:, 1])
        self.labels_ = dbscan(X[:, 0], X[:, 1], params, index=index)
        self.core_sample_indices_ = np.nonzero(
            index.counts_within(params.eps_km) >= params.min_pts
        )[0]
        self.n_clusters_ = cluster_count(self.labels_)
        return self


class StableDBSCAN(BaseEstimator, ClusterMixin):
    """Density clustering with parameters chosen by the stability sweep.

    Attributes
    ----------
    params_ : ClusterParams actually used
    stable_ : False when the sweep never settled and the median fallback ran
    sweep_ : list of SweepEntry, one per tried radius
    labels_, n_clusters_ : as in HaversineDBSCAN
    """

    def __init__(
        self,
        k_max: int | None = None,
        min_size: int = DEFAULT_MIN_DATASET,
        run_length: int = DEFAULT_RUN_LENGTH,
    ):
        self.k_max = k_max
        self.min_size = min_size
        self.run_length = run_length

    def fit(self, X, y=None):
        X = check_array(X)
        if X.shape[1] != 2:
            raise ValueError("expected two columns: lon, lat")
        lon, lat = X[:, 0], X[:, 1]
        self.sweep_ = []
        self.stable_ = True
        try:
            self.params_ = stable_params(
                lon, lat, k_max=self.k_max, min_size=self.min_size,
                run_length=self.run_length, sweep_out=self.sweep_,
            )
        except UnstableParameters as exc:
            self.stable_ = False
            self.params_ = fallback_params(lon, lat, k_max=self.k_max)
            log.warning("%s; falling back to median radius %.3f km",
                        exc, self.params_.eps_km)
        self.labels_ = dbscan(lon, lat, self.params_)
        self.n_clusters_ = cluster_count(self.labels_)
        return self
