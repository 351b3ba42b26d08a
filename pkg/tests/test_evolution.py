import numpy as np
import pytest
from hypothesis import given, strategies as st

from riseer.cluster import RegionalCluster
from riseer.evolution import (
    EdgeAnnotation,
    EvolutionPath,
    LineageEdge,
    build_paths,
    edge_annotations,
    match_all,
    match_period_pair,
    overlap,
    overlap_matrix,
)
from riseer.geo import haversine_km


def mk(cluster_id, period, ids, centroid=(120.0, 30.0)):
    return RegionalCluster(cluster_id, period, tuple(str(i) for i in ids), centroid)


class TestOverlap:
    def test_identical_sets(self):
        a = mk("a", (0, 5), range(5))
        b = mk("b", (6, 11), range(5))
        assert overlap(a, b) == 5

    def test_disjoint_sets(self):
        assert overlap(mk("a", (0, 5), range(5)), mk("b", (6, 11), range(10, 15))) == 0

    def test_half_overlapping_ranges(self):
        a = mk("a", (0, 5), range(1, 101))
        b = mk("b", (6, 11), range(51, 151))
        assert overlap(a, b) == 50

    def test_matrix(self):
        t = [mk("a", (0, 5), range(10)), mk("b", (0, 5), range(10, 14))]
        t1 = [mk("c", (6, 11), range(5, 12))]
        matrix = overlap_matrix(t, t1)
        assert matrix.tolist() == [[5], [2]]


class TestMatchPeriodPair:
    def test_identical_cluster_repeats(self):
        a = mk("a", (0, 5), range(7))
        b = mk("b", (6, 11), range(7))
        edges = match_period_pair([a], [b])
        assert len(edges) == 1
        assert edges[0] == LineageEdge("a", "b", 7, 0.0)

    def test_even_split_tie_breaks_on_centroid_shift(self):
        a = mk("a", (0, 5), range(10), centroid=(120.0, 30.0))
        near = mk("near", (6, 11), range(5), centroid=(120.0, 30.01))
        far = mk("far", (6, 11), range(5, 10), centroid=(120.0, 30.5))
        edges = match_period_pair([a], [far, near])
        assert len(edges) == 1
        assert edges[0].to_cluster == "near"
        assert edges[0].overlap == 5

    def test_merge_shares_successor(self):
        a = mk("a", (0, 5), range(10))
        b = mk("b", (0, 5), range(20, 30))
        c = mk("c", (6, 11), list(range(10)) + list(range(20, 30)))
        edges = match_period_pair([a, b], [c])
        assert [e.from_cluster for e in edges] == ["a", "b"]
        assert {e.to_cluster for e in edges} == {"c"}

    def test_no_successor_terminates_cluster(self):
        a = mk("a", (0, 5), range(10))
        b = mk("b", (6, 11), range(100, 110))
        assert match_period_pair([a], [b]) == []

    def test_relative_floor_suppresses_hairline_edges(self):
        a = mk("a", (0, 5), range(100))
        thin = mk("thin", (6, 11), [0, 1])
        assert match_period_pair([a], [thin]) != []
        assert match_period_pair([a], [thin], relative_min_frac=0.05) == []

    def test_full_tie_breaks_on_successor_id(self):
        # identical centroids so the shift tie is exact, not float luck
        a = mk("a", (0, 5), range(10), centroid=(120.0, 30.0))
        x = mk("x", (6, 11), range(5), centroid=(120.0, 30.1))
        y = mk("y", (6, 11), range(5, 10), centroid=(120.0, 30.1))
        edges = match_period_pair([a], [y, x])
        assert edges[0].to_cluster == "x"

    def test_deterministic(self):
        rng = np.random.default_rng(50)
        ids = rng.permutation(60)
        t = [mk("a", (0, 5), ids[:30]), mk("b", (0, 5), ids[30:])]
        t1 = [mk("c", (6, 11), ids[10:40]), mk("d", (6, 11), ids[40:])]
        assert match_period_pair(t, t1) == match_period_pair(t, t1)


@st.composite
def two_period_partitions(draw):
    n = draw(st.integers(6, 40))
    ids = list(range(n))
    cuts_t = sorted(draw(st.sets(st.integers(1, n - 1), min_size=1, max_size=3)))
    cuts_t1 = sorted(draw(st.sets(st.integers(1, n - 1), min_size=1, max_size=3)))

    def chunks(cuts, period, prefix):
        bounds = [0] + cuts + [n]
        return [
            mk(f"{prefix}{k}", period, ids[lo:hi])
            for k, (lo, hi) in enumerate(zip(bounds, bounds[1:]))
            if hi > lo
        ]

    return chunks(cuts_t, (0, 5), "t"), chunks(cuts_t1, (6, 11), "u")


class TestConservation:
    @given(two_period_partitions())
    def test_row_sums_bounded_by_cluster_size(self, pair):
        t, t1 = pair
        matrix = overlap_matrix(t, t1)
        for i, cluster in enumerate(t):
            assert matrix[i].sum() <= cluster.size

    @given(two_period_partitions())
    def test_out_degree_at_most_one(self, pair):
        t, t1 = pair
        edges = match_period_pair(t, t1)
        froms = [e.from_cluster for e in edges]
        assert len(froms) == len(set(froms))


class TestBuildPaths:
    def test_persisting_cluster_is_one_path(self):
        periods = [
            [mk("p0", (0, 5), range(10))],
            [mk("p1", (6, 11), range(10))],
            [mk("p2", (12, 17), range(10))],
        ]
        paths = build_paths(periods)
        assert len(paths) == 1
        assert paths[0].cluster_ids == ("p0", "p1", "p2")
        assert len(paths[0].edges) == 2
        assert paths[0].periods == ((0, 5), (6, 11), (12, 17))

    def test_merge_yields_two_paths_sharing_suffix(self):
        merged = mk("c", (6, 11), range(20))
        tail = mk("d", (12, 17), range(20))
        periods = [
            [mk("a", (0, 5), range(10)), mk("b", (0, 5), range(10, 20))],
            [merged],
            [tail],
        ]
        paths = build_paths(periods)
        assert len(paths) == 2
        assert paths[0].cluster_ids == ("a", "c", "d")
        assert paths[1].cluster_ids == ("b", "c", "d")

    def test_disjoint_periods_give_singletons(self):
        periods = [
            [mk("a", (0, 5), range(10))],
            [mk("b", (6, 11), range(100, 110))],
        ]
        paths = build_paths(periods)
        assert [p.cluster_ids for p in paths] == [("a",), ("b",)]
        assert all(p.edges == () for p in paths)

    def test_every_cluster_reachable_from_some_path(self):
        periods = [
            [mk("a", (0, 5), range(10)), mk("b", (0, 5), range(50, 60))],
            [mk("c", (6, 11), range(5, 15)), mk("d", (6, 11), range(200, 210))],
        ]
        paths = build_paths(periods)
        covered = {cid for p in paths for cid in p.cluster_ids}
        assert covered == {"a", "b", "c", "d"}

    def test_path_ids_are_stable_and_ordered(self):
        periods = [
            [mk("b", (0, 5), range(10)), mk("a", (0, 5), range(50, 60))],
            [mk("c", (6, 11), range(10))],
        ]
        paths = build_paths(periods)
        assert [p.path_id for p in paths] == ["path-000", "path-001"]
        assert paths[0].cluster_ids[0] == "a" or paths[0].cluster_ids[0] == "b"
        again = build_paths(periods)
        assert paths == again

    def test_accepts_precomputed_edges(self):
        periods = [
            [mk("a", (0, 5), range(10))],
            [mk("b", (6, 11), range(10))],
        ]
        edges = match_all(periods)
        assert build_paths(periods, pair_edges=edges) == build_paths(periods)


class TestPathInvariants:
    def test_inverted_periods_rejected(self):
        with pytest.raises(ValueError):
            EvolutionPath(
                "p", ("a", "b"), ((6, 11), (0, 5)),
                (LineageEdge("a", "b", 1, 0.0),),
            )

    def test_edge_chain_must_connect(self):
        with pytest.raises(ValueError):
            EvolutionPath(
                "p", ("a", "b"), ((0, 5), (6, 11)),
                (LineageEdge("a", "zzz", 1, 0.0),),
            )

    def test_edge_count_must_match(self):
        with pytest.raises(ValueError):
            EvolutionPath("p", ("a", "b"), ((0, 5), (6, 11)), ())

    def test_zero_overlap_edge_rejected(self):
        with pytest.raises(ValueError):
            LineageEdge("a", "b", 0, 1.0)


class TestEdgeAnnotations:
    def test_values_equal_edge_fields(self):
        a = mk("a", (0, 5), range(10), centroid=(120.0, 30.0))
        b = mk("b", (6, 11), range(10), centroid=(120.1, 30.05))
        edge = match_period_pair([a], [b])[0]
        note = edge_annotations(edge)
        assert note.transfer_count == overlap(a, b)
        assert note.shift_km == haversine_km(120.0, 30.0, 120.1, 30.05)

    def test_self_identical_cluster(self):
        a = mk("a", (0, 5), range(12))
        b = mk("b", (6, 11), range(12))
        note = edge_annotations(match_period_pair([a], [b])[0])
        assert (note.transfer_count, note.shift_km) == (12, 0.0)

    def test_display_format(self):
        assert str(EdgeAnnotation(155950, 1.87)) == "155950 enterprises, 1.87 km"
