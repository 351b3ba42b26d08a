"""Shared fixtures and hypothesis strategies."""

from __future__ import annotations

import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import strategies as st

from riseer.records import TIERS, EnterpriseRecord, Month

KM_PER_DEG_LAT = 111.1949266


def km_to_lonlat(x_km, y_km, center=(120.0, 30.0)):
    """Map a local east/north offset in km to lon/lat around a city center."""
    cx, cy = center
    lon = cx + np.asarray(x_km, dtype=float) / (KM_PER_DEG_LAT * math.cos(math.radians(cy)))
    lat = cy + np.asarray(y_km, dtype=float) / KM_PER_DEG_LAT
    return lon, lat


def make_blob(rng, center_km, sigma_km, n, center=(120.0, 30.0)):
    """Gaussian blob of n lon/lat points around a km offset from the center."""
    x = rng.normal(center_km[0], sigma_km, n)
    y = rng.normal(center_km[1], sigma_km, n)
    return km_to_lonlat(x, y, center)


def grid_blob(rng, center_km, radius_km, n_target, jitter_frac=0.1, center=(120.0, 30.0)):
    """Jittered street-grid sites on a disc footprint, like city blocks.

    Near-uniform neighborhood counts make density parameters land cleanly,
    unlike Poisson scatter whose fluctuations leave fringe noise.
    """
    a = radius_km * math.sqrt(math.pi / n_target)
    half = int(math.ceil(radius_km / a))
    xs, ys = np.meshgrid(np.arange(-half, half + 1) * a, np.arange(-half, half + 1) * a)
    keep = xs ** 2 + ys ** 2 <= radius_km ** 2
    m = int(keep.sum())
    x = center_km[0] + xs[keep] + rng.uniform(-jitter_frac * a, jitter_frac * a, m)
    y = center_km[1] + ys[keep] + rng.uniform(-jitter_frac * a, jitter_frac * a, m)
    return km_to_lonlat(x, y, center)

CLASS_CODES = ("C13", "C26", "C35", "F51", "I64")
CREDIT_ORDER = ("C", "B", "A", "AA", "AAA")
PROPERTIES = ("private", "state-owned", "foreign", "collective")
STATES = ("surviving", "cancelled", "revoked", "moved-out")


def make_record(
    i: int = 0,
    lon: float = 120.0,
    lat: float = 30.0,
    start: str = "1995-03-10",
    end: str | None = None,
    tier: str = "Secondary",
    code: str = "C26",
    capital: float = 500.0,
    credit: str = "A",
    prop: str = "private",
    state: str = "surviving",
) -> EnterpriseRecord:
    from riseer.records import Tier

    return EnterpriseRecord(
        id=f"E{i:05d}",
        name=f"ent-{i}",
        lon=lon,
        lat=lat,
        start_date=dt.date.fromisoformat(start),
        end_date=dt.date.fromisoformat(end) if end else None,
        tier=Tier.parse(tier),
        classification_code=code,
        registered_capital=capital,
        credit_rating=credit,
        property=prop,
        state=state,
    )


@st.composite
def record_strategy(draw, index: int = 0):
    start_ord = draw(st.integers(dt.date(1985, 1, 1).toordinal(), dt.date(2005, 1, 1).toordinal()))
    start = dt.date.fromordinal(start_ord)
    lifespan_days = draw(st.one_of(st.none(), st.integers(0, 2000)))
    end = None if lifespan_days is None else dt.date.fromordinal(start_ord + lifespan_days)
    from riseer.records import Tier

    return EnterpriseRecord(
        id=f"H{index:05d}",
        name=None,
        lon=draw(st.floats(119.5, 120.5)),
        lat=draw(st.floats(29.5, 30.5)),
        start_date=start,
        end_date=end,
        tier=draw(st.sampled_from(TIERS)),
        classification_code=draw(st.sampled_from(CLASS_CODES)),
        registered_capital=draw(st.floats(0, 1e6)),
        credit_rating=draw(st.sampled_from(CREDIT_ORDER + ("?",))),
        property=draw(st.sampled_from(PROPERTIES)),
        state=draw(st.sampled_from(STATES)),
    )


@st.composite
def record_list_strategy(draw, min_size: int = 1, max_size: int = 12):
    n = draw(st.integers(min_size, max_size))
    return [draw(record_strategy(index=i)) for i in range(n)]


month_strategy = st.builds(
    Month, year=st.integers(1984, 2007), month=st.integers(1, 12)
)


class CityRun:
    """A generated city, its CSV on disk, and one finished artifact store."""

    def __init__(self, records, truth, csv, config, store, root):
        self.records = records
        self.truth = truth
        self.csv = csv
        self.config = config
        self.store = store
        self.root = root


@pytest.fixture(scope="session")
def city_run(tmp_path_factory) -> CityRun:
    from riseer.config import PipelineConfig
    from riseer.pipeline import run_pipeline
    from riseer.synthgen import BlobSpec, ScenarioConfig, generate, write_records_csv

    root = tmp_path_factory.mktemp("city")
    scenario = ScenarioConfig(
        seed=11,
        span=(Month(1980, 1), Month(1989, 12)),
        blobs=(
            BlobSpec(name="harbor", center_km=(2.5, 0.0), radius_km=0.9,
                     sites=150, jitter_frac=0.45, death_hazard=0.003,
                     birth_curve=((0, 5.0), (60, 14.0), (119, 14.0))),
            BlobSpec(name="old-town", center_km=(-2.5, 0.4), radius_km=0.8,
                     sites=150, jitter_frac=0.45, death_hazard=0.002,
                     birth_curve=((0, 4.0), (119, 9.0))),
        ),
        noise_per_month=0.4,
    )
    records, truth = generate(scenario)
    csv_path = root / "city.csv"
    write_records_csv(records, csv_path)
    config = PipelineConfig.from_dict({
        "dataset_id": "city-test",
        "forecast": {"model": "gbt", "initial_train_months": 48, "trees": 25},
        "projection": {"perplexity": 12.0, "n_iter": 250},
    })
    store = run_pipeline(csv_path, config, root / "store")
    return CityRun(records, truth, csv_path, config, store, root)


@pytest.fixture
def small_records() -> list[EnterpriseRecord]:
    return [
        make_record(0, start="1993-05-17", end="1994-02-02", tier="Primary", code="C13",
                    capital=100.0, credit="AA", prop="private", state="cancelled"),
        make_record(1, start="1993-01-01", end=None, tier="Secondary", code="C26",
                    capital=900.0, credit="A", prop="state-owned", state="surviving"),
        make_record(2, start="1993-12-31", end="1995-06-15", tier="Secondary", code="C26",
                    capital=250.0, credit="B", prop="private", state="cancelled"),
        make_record(3, start="1994-07-01", end=None, tier="Tertiary", code="F51",
                    capital=2000.0, credit="?", prop="foreign", state="surviving"),
    ]
