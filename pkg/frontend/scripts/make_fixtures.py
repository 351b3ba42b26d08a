"""Rebuild the UI test fixtures from a real pipeline run.

Generates a small two-district city where one district drifts into the
other (a planted merge), runs the full engine, then snapshots the HTTP
responses the UI consumes into tests/fixtures/. Deterministic, so the
fixtures only change when the engine's output format changes.

Usage: python3 scripts/make_fixtures.py
"""

from __future__ import annotations

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from riseer.config import PipelineConfig
from riseer.pipeline import run_pipeline
from riseer.records import Month
from riseer.service import create_app
from riseer.synthgen import BlobSpec, ScenarioConfig, generate, write_records_csv

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

# Step birth rates so the active-count series has two sharp bends: the
# segmenter cuts three periods, and the drifting district reaches the
# static one in the second, producing a merge the lineage view must show.
SCENARIO = ScenarioConfig(
    seed=33,
    span=(Month(1980, 1), Month(1984, 12)),
    blobs=(
        BlobSpec(name="west", center_km=(-1.2, 0.0), radius_km=0.8,
                 sites=140, jitter_frac=0.45, death_hazard=0.004,
                 birth_curve=((0, 8.0), (19, 8.0), (20, 20.0), (39, 20.0),
                              (40, 34.0), (59, 34.0))),
        BlobSpec(name="east", center_km=(2.8, 0.0), radius_km=0.8,
                 sites=140, jitter_frac=0.45, death_hazard=0.003,
                 birth_curve=((0, 10.0), (59, 10.0)),
                 drift_km_per_month=(-0.08, 0.0),
                 merge_into="west", merge_month=50),
    ),
    noise_per_month=0.3,
)

CONFIG = PipelineConfig.from_dict({
    "dataset_id": "ui-fixture-city",
    "cluster": {"eps_km": 0.45, "min_pts": 4},
    "forecast": {"model": "gbt", "initial_train_months": 24, "trees": 15},
    "projection": {"perplexity": 10.0, "n_iter": 250},
})


def dump(name: str, payload) -> None:
    path = FIXTURES / f"{name}.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"wrote {path.relative_to(FIXTURES.parent.parent)}")


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        csv_path = Path(tmp) / "city.csv"
        records, _ = generate(SCENARIO)
        write_records_csv(records, csv_path)
        store = run_pipeline(csv_path, CONFIG, Path(tmp) / "store")

        client = TestClient(create_app(store.root))
        for name in ("projection", "snapshots", "segments", "clusters",
                     "paths", "forecast", "manifest"):
            dump(name, client.get(f"/api/v1/{name}").json())

        clusters = client.get("/api/v1/clusters").json()
        detail_ids = [
            clusters["periods"][0]["clusters"][0]["id"],
            clusters["periods"][-1]["clusters"][0]["id"],
        ]
        for cid in detail_ids:
            dump(f"details-{cid}", client.get(f"/api/v1/clusters/{cid}/details").json())

        first_period = [c["id"] for c in clusters["periods"][0]["clusters"]]
        pair = first_period[:2]
        dump("compare-pair", client.post("/api/v1/compare", json={"ids": pair}).json())
        same = [detail_ids[1], detail_ids[1]]
        dump("compare-same", client.post("/api/v1/compare", json={"ids": same}).json())

        dump("index", {
            "dataset_id": CONFIG.dataset_id,
            "detail_ids": detail_ids,
            "compare_pair": pair,
            "compare_same": same,
        })


if __name__ == "__main__":
    main()
