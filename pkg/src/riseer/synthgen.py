"""Deterministic synthetic registry generator with planted ground truth.

Scenarios plant street-grid enterprise blobs (with optional drift and merge
schedules), background scatter, and piecewise-linear birth-rate regimes.
Everything is drawn from one seeded generator in a fixed order, so a config
reproduces its dataset byte for byte, and the planted structure ships
alongside as ground truth for oracle tests.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from jsonschema import validate

from .errors import InvalidScenario
from .geo import EARTH_RADIUS_KM
from .records import TIERS, EnterpriseRecord, Month

KM_PER_DEGREE = math.pi * EARTH_RADIUS_KM / 180.0

CODE_POOL = ("C26", "C28", "F51", "F52", "J66", "K70", "L72", "R87")
CREDIT_POOL = ("AAA", "AA", "A", "B", "C")
CREDIT_WEIGHTS = (0.08, 0.17, 0.4, 0.25, 0.1)
PROPERTY_POOL = ("private", "state-owned", "collective", "foreign")
PROPERTY_WEIGHTS = (0.6, 0.2, 0.1, 0.1)
DEAD_STATES = ("deregistered", "cancelled")

SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["seed", "span", "blobs"],
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer"},
        "span": {
            "type": "array", "items": {"type": "string"},
            "minItems": 2, "maxItems": 2,
        },
        "center": {
            "type": "array", "items": {"type": "number"},
            "minItems": 2, "maxItems": 2,
        },
        "bbox_km": {"type": "number", "exclusiveMinimum": 0},
        "noise_per_month": {"type": "number", "minimum": 0},
        "series_noise_frac": {"type": "number", "minimum": 0},
        "blobs": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "center_km", "radius_km", "birth_curve"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "center_km": {
                        "type": "array", "items": {"type": "number"},
                        "minItems": 2, "maxItems": 2,
                    },
                    "radius_km": {"type": "number", "exclusiveMinimum": 0},
                    "sites": {"type": "integer", "minimum": 4},
                    "jitter_frac": {"type": "number", "minimum": 0},
                    "birth_curve": {
                        "type": "array",
                        "items": {
                            "type": "array", "items": {"type": "number"},
                            "minItems": 2, "maxItems": 2,
                        },
                        "minItems": 1,
                    },
                    "death_hazard": {"type": "number", "minimum": 0, "maximum": 1},
                    "tier_mix": {
                        "type": "array", "items": {"type": "number", "minimum": 0},
                        "minItems": 3, "maxItems": 3,
                    },
                    "capital_ln": {
                        "type": "array", "items": {"type": "number"},
                        "minItems": 2, "maxItems": 2,
                    },
                    "drift_km_per_month": {
                        "type": "array", "items": {"type": "number"},
                        "minItems": 2, "maxItems": 2,
                    },
                    "merge_into": {"type": ["string", "null"]},
                    "merge_month": {"type": ["integer", "null"]},
                },
            },
        },
    },
}


@dataclass(frozen=True)
class BlobSpec:
    """One planted enterprise neighborhood."""

    name: str
    center_km: tuple[float, float]
    radius_km: float
    birth_curve: tuple[tuple[float, float], ...]
    sites: int = 60
    jitter_frac: float = 0.1
    death_hazard: float = 0.0
    tier_mix: tuple[float, float, float] = (0.2, 0.5, 0.3)
    capital_ln: tuple[float, float] = (5.0, 1.0)
    drift_km_per_month: tuple[float, float] = (0.0, 0.0)
    merge_into: str | None = None
    merge_month: int | None = None

    def __post_init__(self):
        if self.radius_km <= 0:
            raise InvalidScenario(f"blob {self.name!r}: radius must be positive")
        if any(rate < 0 for _, rate in self.birth_curve):
            raise InvalidScenario(f"blob {self.name!r}: negative birth rate")
        if not 0.0 <= self.death_hazard <= 1.0:
            raise InvalidScenario(f"blob {self.name!r}: hazard outside [0, 1]")
        if sum(self.tier_mix) <= 0:
            raise InvalidScenario(f"blob {self.name!r}: empty tier mix")
        if (self.merge_into is None) != (self.merge_month is None):
            raise InvalidScenario(
                f"blob {self.name!r}: merge needs both a target and a month"
            )

    def rate_at(self, offsets: np.ndarray) -> np.ndarray:
        xs = [t for t, _ in self.birth_curve]
        ys = [r for _, r in self.birth_curve]
        return np.interp(offsets, xs, ys)

    def first_active_offset(self) -> int | None:
        """First month offset with a positive birth rate, None if always zero."""
        horizon = int(max(t for t, _ in self.birth_curve)) + 2
        rates = self.rate_at(np.arange(horizon))
        nonzero = np.flatnonzero(rates > 0)
        return int(nonzero[0]) if len(nonzero) else None


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int
    span: tuple[Month, Month]
    blobs: tuple[BlobSpec, ...]
    center: tuple[float, float] = (120.0, 30.0)
    bbox_km: float = 6.0
    noise_per_month: float = 0.0
    series_noise_frac: float = 0.02

    def __post_init__(self):
        if self.span[0] > self.span[1]:
            raise InvalidScenario("span is empty")
        if self.noise_per_month < 0 or self.series_noise_frac < 0:
            raise InvalidScenario("rates must be non-negative")
        names = [b.name for b in self.blobs]
        if len(set(names)) != len(names):
            raise InvalidScenario("blob names must be unique")
        self._check_merges()

    def _check_merges(self):
        by_name = {b.name: b for b in self.blobs}
        n_months = self.span[1].index - self.span[0].index + 1
        for blob in self.blobs:
            if blob.merge_into is None:
                continue
            target = by_name.get(blob.merge_into)
            if target is None or target.name == blob.name:
                raise InvalidScenario(
                    f"blob {blob.name!r} merges into unknown blob {blob.merge_into!r}"
                )
            if target.merge_into is not None:
                raise InvalidScenario(
                    f"blob {blob.name!r} merges into {target.name!r}, "
                    "which itself merges; chains are not supported"
                )
            if not 0 <= blob.merge_month < n_months:
                raise InvalidScenario(
                    f"blob {blob.name!r}: merge month {blob.merge_month} outside span"
                )
            first = blob.first_active_offset()
            if first is None or blob.merge_month < first:
                raise InvalidScenario(
                    f"blob {blob.name!r}: merge scheduled before any births"
                )

    @property
    def n_months(self) -> int:
        return self.span[1].index - self.span[0].index + 1


def scenario_from_dict(raw: dict) -> ScenarioConfig:
    validate(raw, SCENARIO_SCHEMA)
    blobs = []
    for spec in raw["blobs"]:
        fields = dict(spec)
        fields["center_km"] = tuple(fields["center_km"])
        fields["birth_curve"] = tuple(tuple(knot) for knot in fields["birth_curve"])
        for key in ("tier_mix", "capital_ln", "drift_km_per_month"):
            if key in fields:
                fields[key] = tuple(fields[key])
        blobs.append(BlobSpec(**fields))
    return ScenarioConfig(
        seed=raw["seed"],
        span=(Month.parse(raw["span"][0]), Month.parse(raw["span"][1])),
        blobs=tuple(blobs),
        center=tuple(raw.get("center", (120.0, 30.0))),
        bbox_km=raw.get("bbox_km", 6.0),
        noise_per_month=raw.get("noise_per_month", 0.0),
        series_noise_frac=raw.get("series_noise_frac", 0.02),
    )


def load_scenario(path: str | Path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return scenario_from_dict(json.load(fh))


@dataclass(frozen=True)
class MergeEvent:
    month_offset: int
    source: str
    target: str


@dataclass(frozen=True)
class GroundTruth:
    """What was planted: per-record region labels and scheduled events."""

    blob_of: dict[str, str | None]
    breakpoints: tuple[int, ...]
    merge_events: tuple[MergeEvent, ...]

    def to_json(self) -> dict:
        return {
            "blob_of": self.blob_of,
            "breakpoints": list(self.breakpoints),
            "merge_events": [
                [e.month_offset, e.source, e.target] for e in self.merge_events
            ],
        }


def _disc_lattice(radius_km: float, sites: int) -> np.ndarray:
    """Street-grid sites covering a disc: square lattice cut to the radius."""
    spacing = radius_km * math.sqrt(math.pi / max(sites, 4))
    ticks = np.arange(-radius_km, radius_km + spacing / 2, spacing)
    xx, yy = np.meshgrid(ticks, ticks)
    grid = np.column_stack([xx.ravel(), yy.ravel()])
    return grid[np.hypot(grid[:, 0], grid[:, 1]) <= radius_km]


def _km_to_lonlat(xy_km: np.ndarray, center: tuple[float, float]) -> np.ndarray:
    lon0, lat0 = center
    lon = lon0 + xy_km[:, 0] / (KM_PER_DEGREE * math.cos(math.radians(lat0)))
    lat = lat0 + xy_km[:, 1] / KM_PER_DEGREE
    return np.column_stack([lon, lat])


class _RecordFactory:
    """Shared id counter and attribute sampling for all generated records."""

    def __init__(self, config: ScenarioConfig, rng: np.random.Generator):
        self.config = config
        self.rng = rng
        self.serial = 0
        self.records: list[EnterpriseRecord] = []
        self.blob_of: dict[str, str | None] = {}

    def emit(
        self,
        month_offset: int,
        xy_km: np.ndarray,
        label: str | None,
        tier_mix: tuple[float, float, float],
        capital_ln: tuple[float, float],
        death_hazard: float,
    ) -> None:
        n = len(xy_km)
        if n == 0:
            return
        rng = self.rng
        span_start, span_end = self.config.span
        lonlat = _km_to_lonlat(xy_km, self.config.center)
        mix = np.array(tier_mix, dtype=float)
        tiers = rng.choice(3, size=n, p=mix / mix.sum())
        codes = rng.choice(CODE_POOL, size=n)
        credits = rng.choice(CREDIT_POOL, size=n, p=CREDIT_WEIGHTS)
        properties = rng.choice(PROPERTY_POOL, size=n, p=PROPERTY_WEIGHTS)
        capital = np.round(rng.lognormal(*capital_ln, size=n), 2)
        start_days = rng.integers(1, 29, size=n)
        if death_hazard > 0:
            lifetimes = rng.geometric(death_hazard, size=n)
        else:
            lifetimes = np.full(n, np.iinfo(np.int64).max)
        end_days = rng.integers(1, 29, size=n)
        dead_states = rng.choice(DEAD_STATES, size=n)

        birth = span_start.plus(month_offset)
        horizon = span_end.index - birth.index
        for i in range(n):
            rid = f"S{self.serial:07d}"
            self.serial += 1
            if lifetimes[i] > horizon:
                end, state = None, "surviving"
            else:
                end_month = birth.plus(int(lifetimes[i]))
                end = dt.date(end_month.year, end_month.month, int(end_days[i]))
                state = str(dead_states[i])
            self.records.append(EnterpriseRecord(
                id=rid,
                name=None,
                lon=float(lonlat[i, 0]),
                lat=float(lonlat[i, 1]),
                start_date=dt.date(birth.year, birth.month, int(start_days[i])),
                end_date=end,
                tier=TIERS[int(tiers[i])],
                classification_code=str(codes[i]),
                registered_capital=float(capital[i]),
                credit_rating=str(credits[i]),
                property=str(properties[i]),
                state=state,
            ))
            self.blob_of[rid] = label


def schedule_and_breakpoints(config: ScenarioConfig) -> tuple[np.ndarray, tuple[int, ...]]:
    """Noiseless total birth schedule and the offsets where its slope changes."""
    offsets = np.arange(config.n_months, dtype=float)
    schedule = np.zeros(config.n_months)
    for blob in config.blobs:
        schedule += blob.rate_at(offsets)
    slopes = np.diff(schedule)
    turns = np.flatnonzero(np.abs(np.diff(slopes)) > 1e-9) + 1
    return schedule, tuple(int(t) for t in turns)


def regime_series(config: ScenarioConfig) -> tuple[np.ndarray, np.ndarray, tuple[int, ...]]:
    """(noisy counts, noiseless schedule, planted breakpoints).

    Noise is uniform and bounded by series_noise_frac of the local level, so
    counts never leave the band around the schedule.
    """
    schedule, breakpoints = schedule_and_breakpoints(config)
    rng = np.random.default_rng(config.seed)
    bound = config.series_noise_frac * np.maximum(schedule, 1.0)
    counts = np.maximum(schedule + rng.uniform(-1.0, 1.0, len(schedule)) * bound, 0.0)
    return counts, schedule, breakpoints


def generate(config: ScenarioConfig) -> tuple[list[EnterpriseRecord], GroundTruth]:
    """All records for a scenario plus the planted truth, seed-deterministic."""
    rng = np.random.default_rng(config.seed)
    factory = _RecordFactory(config, rng)
    offsets = np.arange(config.n_months, dtype=float)
    by_name = {b.name: b for b in config.blobs}
    merge_events = []

    for blob in config.blobs:
        births = rng.poisson(blob.rate_at(offsets))
        lattice = _disc_lattice(blob.radius_km, blob.sites)
        spacing = blob.radius_km * math.sqrt(math.pi / max(blob.sites, 4))
        if blob.merge_into is not None:
            merge_events.append(
                MergeEvent(blob.merge_month, blob.name, blob.merge_into)
            )
        for t in np.flatnonzero(births):
            t = int(t)
            merged = blob.merge_into is not None and t >= blob.merge_month
            home = by_name[blob.merge_into] if merged else blob
            center = np.array(home.center_km) + np.array(
                home.drift_km_per_month
            ) * t
            sites = lattice if home is blob else _disc_lattice(home.radius_km, home.sites)
            pitch = spacing if home is blob else home.radius_km * math.sqrt(
                math.pi / max(home.sites, 4)
            )
            picks = sites[rng.integers(0, len(sites), size=births[t])]
            jitter = rng.uniform(
                -home.jitter_frac * pitch, home.jitter_frac * pitch,
                size=picks.shape,
            )
            factory.emit(
                t, picks + jitter + center,
                label=home.name,
                tier_mix=blob.tier_mix,
                capital_ln=blob.capital_ln,
                death_hazard=blob.death_hazard,
            )

    if config.noise_per_month > 0:
        scatter = rng.poisson(config.noise_per_month, size=config.n_months)
        for t in np.flatnonzero(scatter):
            xy = rng.uniform(-config.bbox_km, config.bbox_km, size=(scatter[t], 2))
            factory.emit(
                int(t), xy, label=None,
                tier_mix=(0.2, 0.5, 0.3),
                capital_ln=(5.0, 1.0),
                death_hazard=0.01,
            )

    _, breakpoints = schedule_and_breakpoints(config)
    truth = GroundTruth(
        blob_of=factory.blob_of,
        breakpoints=breakpoints,
        merge_events=tuple(merge_events),
    )
    return factory.records, truth


def write_records_csv(records: list[EnterpriseRecord], path: str | Path) -> None:
    from .ingest import CSV_COLUMNS

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow([
                r.id,
                r.name or "",
                f"{r.lon:.8f}",
                f"{r.lat:.8f}",
                r.start_date.isoformat(),
                r.end_date.isoformat() if r.end_date else "",
                r.tier.value,
                r.classification_code,
                f"{r.registered_capital:.2f}",
                r.credit_rating,
                r.property,
                r.state,
            ])


def write_ground_truth(truth: GroundTruth, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(truth.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
