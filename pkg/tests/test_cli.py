"""Command-line interface: stage commands, the full run, and error handling."""

from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from riseer.artifacts import ArtifactStore
from riseer.cli import main
from riseer.schemas import validate_document

TINY_SCENARIO = {
    "seed": 5,
    "span": ["1984-01", "1987-12"],
    "noise_per_month": 0.5,
    "blobs": [
        {
            "name": "market",
            "center_km": [1.8, 0.0],
            "radius_km": 0.7,
            "sites": 120,
            "jitter_frac": 0.45,
            "birth_curve": [[0, 4], [24, 10], [47, 10]],
            "death_hazard": 0.004,
        },
        {
            "name": "wharf",
            "center_km": [-1.8, 0.3],
            "radius_km": 0.6,
            "sites": 120,
            "jitter_frac": 0.45,
            "birth_curve": [[0, 3], [47, 7]],
            "death_hazard": 0.002,
        },
    ],
}

FAST_CONFIG = {
    "dataset_id": "tiny",
    "forecast": {"model": "gbt", "initial_train_months": 24, "trees": 10},
    "projection": {"perplexity": 8.0, "n_iter": 120},
}


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def workdir(tmp_path_factory, runner):
    """Scenario, config, and generated CSV shared by every command test."""
    root = tmp_path_factory.mktemp("cli")
    scenario = root / "scenario.json"
    scenario.write_text(json.dumps(TINY_SCENARIO))
    config = root / "config.json"
    config.write_text(json.dumps(FAST_CONFIG))
    csv_path = root / "city.csv"
    result = runner.invoke(
        main, ["synth", "--scenario", str(scenario), "--out", str(csv_path)]
    )
    assert result.exit_code == 0, result.output
    return root


def read_artifact(out_dir, name):
    doc = json.loads((out_dir / f"{name}.json").read_text())
    validate_document(doc)
    return doc


class TestSynth:
    def test_writes_csv_and_truth_sidecar(self, workdir):
        assert (workdir / "city.csv").exists()
        truth = json.loads((workdir / "city.truth.json").read_text())
        labels = set(truth["blob_of"].values())
        assert {"market", "wharf"} <= labels

    def test_same_seed_same_bytes(self, runner, workdir, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for target in (a, b):
            result = runner.invoke(
                main,
                ["synth", "--scenario", str(workdir / "scenario.json"),
                 "--out", str(target)],
            )
            assert result.exit_code == 0, result.output
        assert a.read_bytes() == b.read_bytes()

    def test_seed_override_changes_output(self, runner, workdir, tmp_path):
        other = tmp_path / "other.csv"
        result = runner.invoke(
            main,
            ["synth", "--scenario", str(workdir / "scenario.json"),
             "--seed", "99", "--out", str(other)],
        )
        assert result.exit_code == 0, result.output
        assert other.read_bytes() != (workdir / "city.csv").read_bytes()


class TestStageCommands:
    def test_ingest_writes_snapshots(self, runner, workdir, tmp_path):
        result = runner.invoke(
            main, ["ingest", str(workdir / "city.csv"), "--out", str(tmp_path)]
        )
        assert result.exit_code == 0, result.output
        doc = read_artifact(tmp_path, "snapshots")
        assert len(doc["payload"]["snapshots"]) == 48

    def test_segment_with_threshold_and_series(self, runner, workdir, tmp_path):
        result = runner.invoke(
            main,
            ["segment", str(workdir / "city.csv"), "--threshold", "abs:3.0",
             "--series", "tier:secondary", "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        doc = read_artifact(tmp_path, "segments")
        assert doc["payload"]["threshold"]["mode"] == "absolute"
        assert doc["payload"]["series"] == "tier:secondary"

    def test_segment_rejects_malformed_threshold(self, runner, workdir, tmp_path):
        result = runner.invoke(
            main,
            ["segment", str(workdir / "city.csv"), "--threshold", "pct:5",
             "--out", str(tmp_path)],
        )
        assert result.exit_code != 0
        assert "threshold" in result.output

    def test_cluster_single_period(self, runner, workdir, tmp_path):
        result = runner.invoke(
            main,
            ["cluster", str(workdir / "city.csv"), "--period", "0",
             "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        doc = read_artifact(tmp_path, "clusters")
        assert len(doc["payload"]["periods"]) == 1

    def test_cluster_manual_radius(self, runner, workdir, tmp_path):
        result = runner.invoke(
            main,
            ["cluster", str(workdir / "city.csv"), "--eps", "0.5", "--minpts", "4",
             "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        doc = read_artifact(tmp_path, "clusters")
        for period in doc["payload"]["periods"]:
            assert period["params"]["eps_km"] == 0.5
            assert period["params"]["min_pts"] == 4

    def test_cluster_lone_eps_flag_rejected(self, runner, workdir, tmp_path):
        result = runner.invoke(
            main, ["cluster", str(workdir / "city.csv"), "--eps", "0.5",
                   "--out", str(tmp_path)]
        )
        assert result.exit_code != 0
        assert "--minpts" in result.output

    def test_cluster_period_out_of_range(self, runner, workdir, tmp_path):
        result = runner.invoke(
            main, ["cluster", str(workdir / "city.csv"), "--period", "42",
                   "--out", str(tmp_path)]
        )
        assert result.exit_code != 0
        assert "no period 42" in result.output

    def test_forecast_single_tier_naive(self, runner, workdir, tmp_path):
        result = runner.invoke(
            main,
            ["forecast", str(workdir / "city.csv"), "--tier", "primary",
             "--model", "naive", "-L", "6",
             "--config", str(workdir / "config.json"), "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        doc = read_artifact(tmp_path, "forecast")
        assert len(doc["payload"]["results"]) == 1
        only = doc["payload"]["results"][0]
        assert only["tier"] == "primary"
        assert only["model"] == "NaiveLast"
        assert doc["payload"]["window"] == 6

    def test_forecast_unknown_model_rejected(self, runner, workdir, tmp_path):
        result = runner.invoke(
            main, ["forecast", str(workdir / "city.csv"), "--model", "prophet",
                   "--out", str(tmp_path)]
        )
        assert result.exit_code != 0
        assert "unknown model" in result.output

    def test_project_writes_embedding(self, runner, workdir, tmp_path):
        result = runner.invoke(
            main,
            ["project", str(workdir / "city.csv"),
             "--config", str(workdir / "config.json"), "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        doc = read_artifact(tmp_path, "projection")
        assert len(doc["payload"]["points"]) == 48

    def test_paths_writes_lineage(self, runner, workdir, tmp_path):
        result = runner.invoke(
            main, ["paths", str(workdir / "city.csv"), "--out", str(tmp_path)]
        )
        assert result.exit_code == 0, result.output
        read_artifact(tmp_path, "paths")


class TestRun:
    def test_full_run_builds_valid_store(self, runner, workdir, tmp_path):
        out = tmp_path / "store"
        result = runner.invoke(
            main,
            ["run", str(workdir / "city.csv"),
             "--config", str(workdir / "config.json"), "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
        assert "store hash sha256:" in result.output
        store = ArtifactStore(out)
        store.validate_all()
        assert store.payload("snapshots")["snapshots"][0]["month"] == "1984-01"

    def test_failing_stage_reported_by_name(self, runner, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text(
            "id,name,lon,lat,start_date,end_date,tier,classification_code,"
            "registered_capital,credit_rating,property,state\n"
        )
        result = runner.invoke(
            main, ["run", str(empty), "--out", str(tmp_path / "store")]
        )
        assert result.exit_code != 0
        assert "ingest" in result.output
        assert "degenerate dataset" in result.output

    def test_missing_dataset_is_usage_error(self, runner, tmp_path):
        result = runner.invoke(
            main, ["run", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "s")]
        )
        assert result.exit_code == 2
