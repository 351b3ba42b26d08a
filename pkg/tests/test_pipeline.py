"""End-to-end pipeline wiring, payload builders, and cluster detail bundles."""

from __future__ import annotations

from collections import Counter

import numpy as np
import pytest

from riseer.cluster import RegionalCluster
from riseer.config import PipelineConfig
from riseer.errors import PipelineStageError
from riseer.metrics import livability
from riseer.pipeline import details_payload, run_pipeline
from riseer.records import Month, month_range
from riseer.schemas import PAYLOAD_SCHEMAS, DETAILS_KIND

import jsonschema

from conftest import make_record


class TestRunArtifacts:
    def test_store_passes_every_schema(self, city_run):
        city_run.store.validate_all()

    def test_all_seven_artifact_kinds_present(self, city_run):
        manifest = city_run.store.manifest()
        assert sorted(manifest["artifacts"]) == [
            "clusters", "forecast", "indicators", "paths",
            "projection", "segments", "snapshots",
        ]

    def test_detail_bundle_per_cluster(self, city_run):
        cluster_ids = [
            c["id"]
            for p in city_run.store.payload("clusters")["periods"]
            for c in p["clusters"]
        ]
        assert sorted(cluster_ids) == city_run.store.detail_ids()

    def test_snapshot_totals_sum_tier_counts(self, city_run):
        payload = city_run.store.payload("snapshots")
        assert len(payload["snapshots"]) == 120
        for s in payload["snapshots"]:
            assert s["total"] == sum(s["counts"])

    def test_cluster_sizes_and_noise_partition_points(self, city_run):
        for period in city_run.store.payload("clusters")["periods"]:
            covered = sum(c["size"] for c in period["clusters"]) + period["noise_count"]
            assert covered == period["n_points"]
            for c in period["clusters"]:
                assert c["size"] == len(c["member_ids"])

    def test_segment_residuals_match_reported_maximum(self, city_run):
        payload = city_run.store.payload("segments")
        assert payload["n_months"] == 120
        for seg in payload["segments"]:
            assert len(seg["residuals"]) == seg["length"]
            assert np.max(np.abs(seg["residuals"])) == pytest.approx(seg["max_residual"])

    def test_normalized_indicators_stay_in_unit_interval(self, city_run):
        payload = city_run.store.payload("indicators")
        assert payload["fields"][0] == "n_primary"
        assert len(payload["clusters"]) > 0
        for entry in payload["clusters"]:
            assert len(entry["rings"]["slices"]) == len(payload["ring_bands_km"])
            for value in entry["normalized"].values():
                assert 0.0 <= value <= 1.0

    def test_paths_reference_real_clusters(self, city_run):
        clusters = {
            c["id"]
            for p in city_run.store.payload("clusters")["periods"]
            for c in p["clusters"]
        }
        payload = city_run.store.payload("paths")
        for path in payload["paths"]:
            assert set(path["cluster_ids"]) <= clusters
        for entry in payload["overlap_matrices"]:
            assert len(entry["matrix"]) == len(entry["rows"])
            for row in entry["matrix"]:
                assert len(row) == len(entry["cols"])

    def test_forecast_covers_both_models_and_all_tiers(self, city_run):
        results = city_run.store.payload("forecast")["results"]
        combos = {(r["tier"], r["model"]) for r in results}
        assert combos == {
            (tier, model)
            for tier in ("primary", "secondary", "tertiary")
            for model in ("GradientBoostedTrees", "NaiveLast")
        }
        for r in results:
            assert len(r["bars"]) == len(r["points"])

    def test_forecast_attributions_stay_additive(self, city_run):
        for result in city_run.store.payload("forecast")["results"]:
            for p in result["points"]:
                reconstructed = p["base_value"] + sum(p["attributions"])
                assert abs(reconstructed - p["predicted"]) <= 1e-6

    def test_projection_orders_months_chronologically(self, city_run):
        points = city_run.store.payload("projection")["points"]
        assert len(points) == 120
        ordered = sorted(points, key=lambda p: p["order_index"])
        months = [p["month"] for p in ordered]
        assert months == sorted(months)
        assert [p["order_index"] for p in ordered] == list(range(120))


class TestDeterminism:
    def test_rerun_reproduces_every_hash(self, city_run):
        again = run_pipeline(city_run.csv, city_run.config, city_run.root / "store-again")
        first = city_run.store.manifest()
        second = again.manifest()
        assert first["store_hash"] == second["store_hash"]
        assert first["artifacts"] == second["artifacts"]


class TestStageFailures:
    def test_empty_dataset_aborts_at_ingest(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text(
            "id,name,lon,lat,start_date,end_date,tier,classification_code,"
            "registered_capital,credit_rating,property,state\n"
        )
        with pytest.raises(PipelineStageError) as err:
            run_pipeline(empty, PipelineConfig(), tmp_path / "store")
        assert err.value.stage == "ingest"
        assert "degenerate dataset" in str(err.value)
        assert not (tmp_path / "store").exists()

    def test_unreadable_dataset_aborts_at_ingest(self, tmp_path):
        with pytest.raises(PipelineStageError) as err:
            run_pipeline(tmp_path / "missing.csv", PipelineConfig(), tmp_path / "store")
        assert err.value.stage == "ingest"

    def test_oversized_min_size_aborts_at_geocluster(self, city_run, tmp_path):
        config = PipelineConfig.from_dict({"cluster": {"min_size": 10 ** 6}})
        with pytest.raises(PipelineStageError) as err:
            run_pipeline(city_run.csv, config, tmp_path / "store")
        assert err.value.stage == "geocluster"
        assert not (tmp_path / "store").exists()


class TestDetailsPayload:
    def periodized(self, members, lo=0, hi=11, start=Month(1990, 1)):
        cluster = RegionalCluster(
            cluster_id=f"p{lo:04d}-{hi:04d}-c00",
            period=(lo, hi),
            member_ids=tuple(r.id for r in members),
            centroid=(120.0, 30.0),
        )
        months = month_range(start.plus(lo), start.plus(hi))
        return details_payload(cluster, members, months), months

    def test_static_cluster_registration_is_flat(self):
        members = [
            make_record(i, start="1989-06-01", end=None, state="surviving")
            for i in range(10)
        ]
        payload, _ = self.periodized(members)
        assert payload["registration"]["total"] == [10] * 12
        by_tier = np.array(payload["registration"]["by_tier"])
        assert by_tier.sum(axis=0).tolist() == [10] * 12

    def test_payload_validates_against_schema(self):
        members = [make_record(i, start="1989-06-01") for i in range(4)]
        payload, _ = self.periodized(members)
        jsonschema.validate(payload, PAYLOAD_SCHEMAS[DETAILS_KIND])

    def test_heat_grid_cells_partition_members(self):
        rng = np.random.default_rng(3)
        members = [
            make_record(i, lon=120.0 + rng.uniform(-0.05, 0.05),
                        lat=30.0 + rng.uniform(-0.05, 0.05), start="1989-01-01")
            for i in range(43)
        ]
        payload, _ = self.periodized(members)
        grid = np.array(payload["heat_grid"]["cells"])
        assert grid.shape == (100, 100)
        assert grid.sum() == 43

    def test_single_point_cluster_still_grids(self):
        members = [make_record(i, lon=120.0, lat=30.0, start="1989-01-01") for i in range(5)]
        payload, _ = self.periodized(members)
        assert np.array(payload["heat_grid"]["cells"]).sum() == 5

    def test_histogram_equals_brute_force_tally(self):
        members = [
            make_record(0, tier="Primary", code="C13", start="1989-01-01"),
            make_record(1, tier="Primary", code="C13", start="1989-01-01"),
            make_record(2, tier="Secondary", code="C26", start="1989-01-01"),
            make_record(3, tier="Tertiary", code="F51", start="1989-01-01"),
        ]
        payload, _ = self.periodized(members)
        assert payload["histogram"]["tiers"] == dict(Counter(r.tier.value for r in members))
        assert payload["histogram"]["codes"] == dict(
            Counter(r.classification_code for r in members)
        )

    def test_livability_curve_matches_direct_computation(self):
        members = [
            make_record(0, start="1989-01-01", end=None, state="surviving"),
            make_record(1, start="1989-01-01", end="1990-05-20", state="cancelled"),
            make_record(2, start="1989-01-01", end="1990-09-02", state="revoked"),
            make_record(3, start="1989-01-01", end=None, state="surviving"),
        ]
        payload, months = self.periodized(members)
        for entry, month in zip(payload["livability"], months):
            expected_liv, expected_mort = livability(members, month)
            assert entry["livability"] == expected_liv
            assert entry["mortality"] == expected_mort
            assert entry["livability"] + entry["mortality"] == 1.0
