"""Cluster lineage across periods: overlap matching, merges, evolution paths.

A cluster keeps at most one successor, the one sharing the most member
enterprises. Several clusters may share that successor, which is how merges
show up; splits are collapsed to the dominant branch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cluster import RegionalCluster
from .geo import haversine_km


@dataclass(frozen=True)
class LineageEdge:
    """Directed link between clusters of consecutive periods."""

    from_cluster: str
    to_cluster: str
    overlap: int
    centroid_shift_km: float

    def __post_init__(self):
        if self.overlap < 1:
            raise ValueError("an edge needs at least one shared member")


@dataclass(frozen=True)
class EdgeAnnotation:
    """The two numbers shown on an evolution edge."""

    transfer_count: int
    shift_km: float

    def __str__(self) -> str:
        return f"{self.transfer_count} enterprises, {self.shift_km:.2f} km"


@dataclass(frozen=True)
class EvolutionPath:
    """A maximal successor chain; merging chains duplicate the shared suffix."""

    path_id: str
    cluster_ids: tuple[str, ...]
    periods: tuple[tuple[int, int], ...]
    edges: tuple[LineageEdge, ...]

    def __post_init__(self):
        if len(self.cluster_ids) != len(self.edges) + 1:
            raise ValueError("a path of n clusters carries n-1 edges")
        for a, b in zip(self.periods, self.periods[1:]):
            if b <= a:
                raise ValueError("path periods must be strictly increasing")
        for edge, mid in zip(self.edges, self.cluster_ids[1:]):
            if edge.to_cluster != mid:
                raise ValueError("consecutive edges must share the middle cluster")


def overlap(cluster_a: RegionalCluster, cluster_b: RegionalCluster) -> int:
    """How many member enterprises the two clusters share."""
    return len(frozenset(cluster_a.member_ids) & frozenset(cluster_b.member_ids))


def overlap_matrix(
    clusters_t: list[RegionalCluster], clusters_t1: list[RegionalCluster]
) -> np.ndarray:
    """(|t|, |t+1|) shared-member counts, the audit sidecar of the matching."""
    matrix = np.zeros((len(clusters_t), len(clusters_t1)), dtype=np.int64)
    sets_t1 = [frozenset(c.member_ids) for c in clusters_t1]
    for i, a in enumerate(clusters_t):
        sa = frozenset(a.member_ids)
        for j, sb in enumerate(sets_t1):
            matrix[i, j] = len(sa & sb)
    return matrix


def match_period_pair(
    clusters_t: list[RegionalCluster],
    clusters_t1: list[RegionalCluster],
    min_overlap: int = 1,
    relative_min_frac: float | None = None,
) -> list[LineageEdge]:
    """One edge per period-t cluster to its largest-overlap successor.

    Ties go to the smaller centroid shift, then the smaller successor id.
    A cluster with no successor above the floor simply terminates. The
    relative floor, when set, suppresses hairline edges in dense data.
    """
    edges = []
    matrix = overlap_matrix(clusters_t, clusters_t1)
    for i, a in enumerate(clusters_t):
        floor = min_overlap
        if relative_min_frac is not None:
            floor = max(floor, int(np.ceil(relative_min_frac * a.size)))
        best = None
        for j, b in enumerate(clusters_t1):
            count = int(matrix[i, j])
            if count < floor:
                continue
            shift = haversine_km(a.centroid[0], a.centroid[1], b.centroid[0], b.centroid[1])
            key = (-count, shift, b.cluster_id)
            if best is None or key < best[0]:
                best = (key, LineageEdge(a.cluster_id, b.cluster_id, count, shift))
        if best is not None:
            edges.append(best[1])
    return edges


def match_all(
    periods: list[list[RegionalCluster]],
    min_overlap: int = 1,
    relative_min_frac: float | None = None,
) -> list[list[LineageEdge]]:
    """Matchings for every consecutive period pair."""
    return [
        match_period_pair(a, b, min_overlap, relative_min_frac)
        for a, b in zip(periods, periods[1:])
    ]


def build_paths(
    periods: list[list[RegionalCluster]],
    pair_edges: list[list[LineageEdge]] | None = None,
    min_overlap: int = 1,
    relative_min_frac: float | None = None,
) -> list[EvolutionPath]:
    """Maximal chains through the successor edges.

    Chain starts are clusters nobody maps onto; each start is walked to its
    end, so merging chains each keep a full copy of the shared suffix.
    Clusters with no edges at all become singleton paths.
    """
    if pair_edges is None:
        pair_edges = match_all(periods, min_overlap, relative_min_frac)
    by_id = {c.cluster_id: c for step in periods for c in step}
    successor: dict[str, LineageEdge] = {}
    has_incoming: set[str] = set()
    for step in pair_edges:
        for edge in step:
            successor[edge.from_cluster] = edge
            has_incoming.add(edge.to_cluster)

    paths = []
    for step in periods:
        for cluster in step:
            if cluster.cluster_id in has_incoming:
                continue
            chain = [cluster.cluster_id]
            edges = []
            while chain[-1] in successor:
                edge = successor[chain[-1]]
                edges.append(edge)
                chain.append(edge.to_cluster)
            paths.append((chain, edges))

    paths.sort(key=lambda p: (by_id[p[0][0]].period, p[0][0]))
    return [
        EvolutionPath(
            path_id=f"path-{i:03d}",
            cluster_ids=tuple(chain),
            periods=tuple(by_id[cid].period for cid in chain),
            edges=tuple(edges),
        )
        for i, (chain, edges) in enumerate(paths)
    ]


def edge_annotations(edge: LineageEdge) -> EdgeAnnotation:
    """Raw values for the dual-scale edge label; the UI fuses the scales."""
    return EdgeAnnotation(transfer_count=edge.overlap, shift_km=edge.centroid_shift_km)
