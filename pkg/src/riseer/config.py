"""Run configuration: one JSON document drives the whole pipeline.

The build manifest hashes the serialized config, so `to_dict` must stay
stable: plain JSON types only, no timestamps, no environment leakage.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .forecast import MODEL_ALIASES, MODELS, ForecastConfig
from .records import Month

TIER_NAMES = ("primary", "secondary", "tertiary")


def _reject_unknown(cls, data: dict, where: str) -> None:
    known = {f.name for f in fields(cls)}
    extra = sorted(set(data) - known)
    if extra:
        raise ValueError(f"unknown {where} config keys: {extra}")


@dataclass(frozen=True)
class SegmentConfig:
    """Piecewise-linear segmentation settings."""

    threshold: float = 0.05
    mode: str = "fraction"
    series: str = "total"
    top_k: int = 5
    min_length: int = 6

    def __post_init__(self):
        if self.mode not in ("fraction", "absolute"):
            raise ValueError(f"unknown threshold mode: {self.mode!r}")
        if self.threshold <= 0:
            raise ValueError(f"threshold must be positive, got {self.threshold}")
        ok = self.series == "total" or (
            self.series.startswith("tier:")
            and self.series.split(":", 1)[1] in TIER_NAMES
        )
        if not ok:
            raise ValueError(f"unknown series selector: {self.series!r}")
        if self.top_k < 1:
            raise ValueError(f"top_k must be at least 1, got {self.top_k}")
        if self.min_length < 1:
            raise ValueError(f"min_length must be at least 1, got {self.min_length}")


@dataclass(frozen=True)
class ClusterConfig:
    """Density-clustering settings; eps_km/min_pts together skip the auto search."""

    min_size: int = 10
    k_max: int = 40
    run_length: int = 3
    eps_km: float | None = None
    min_pts: int | None = None

    def __post_init__(self):
        if self.min_size < 2:
            raise ValueError(f"min_size must be at least 2, got {self.min_size}")
        if self.k_max < 1:
            raise ValueError(f"k_max must be at least 1, got {self.k_max}")
        if self.run_length < 1:
            raise ValueError(f"run_length must be at least 1, got {self.run_length}")
        if (self.eps_km is None) != (self.min_pts is None):
            raise ValueError("manual override needs both eps_km and min_pts")
        if self.eps_km is not None and self.eps_km <= 0:
            raise ValueError(f"eps_km must be positive, got {self.eps_km}")
        if self.min_pts is not None and self.min_pts < 2:
            raise ValueError(f"min_pts must be at least 2, got {self.min_pts}")

    @property
    def manual(self) -> bool:
        return self.eps_km is not None


@dataclass(frozen=True)
class ProjectionConfig:
    """Low-dimensional embedding settings."""

    perplexity: float = 30.0
    n_iter: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.perplexity <= 0:
            raise ValueError(f"perplexity must be positive, got {self.perplexity}")
        if self.n_iter < 1:
            raise ValueError(f"n_iter must be at least 1, got {self.n_iter}")


@dataclass(frozen=True)
class PathsConfig:
    """Lineage matching floors."""

    min_overlap: int = 1
    relative_min_frac: float | None = None

    def __post_init__(self):
        if self.min_overlap < 1:
            raise ValueError(f"min_overlap must be at least 1, got {self.min_overlap}")
        if self.relative_min_frac is not None and not 0 < self.relative_min_frac < 1:
            raise ValueError(
                f"relative_min_frac must lie in (0, 1), got {self.relative_min_frac}"
            )


@dataclass(frozen=True)
class PipelineConfig:
    """Everything one end-to-end run needs, in a hashable shape."""

    dataset_id: str = "dataset"
    span: tuple[Month, Month] | None = None
    segment: SegmentConfig = field(default_factory=SegmentConfig)
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    forecast: ForecastConfig = field(default_factory=ForecastConfig)
    projection: ProjectionConfig = field(default_factory=ProjectionConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)

    def __post_init__(self):
        if not self.dataset_id:
            raise ValueError("dataset_id must be non-empty")
        if self.span is not None and self.span[1] < self.span[0]:
            raise ValueError(f"inverted span: {self.span[0]}..{self.span[1]}")

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        _reject_unknown(cls, data, "pipeline")
        parts = {}
        for name, sub in (
            ("segment", SegmentConfig),
            ("cluster", ClusterConfig),
            ("projection", ProjectionConfig),
            ("paths", PathsConfig),
        ):
            raw = data.get(name, {})
            _reject_unknown(sub, raw, name)
            parts[name] = sub(**raw)
        raw = dict(data.get("forecast", {}))
        _reject_unknown(ForecastConfig, raw, "forecast")
        if "model" in raw:
            raw["model"] = MODEL_ALIASES.get(raw["model"], raw["model"])
            if raw["model"] not in MODELS:
                raise ValueError(f"unknown forecast model: {raw['model']!r}")
        parts["forecast"] = ForecastConfig(**raw)
        span = data.get("span")
        if span is not None:
            span = (Month.parse(span[0]), Month.parse(span[1]))
        return cls(dataset_id=data.get("dataset_id", "dataset"), span=span, **parts)

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        if self.span is not None:
            out["span"] = [str(self.span[0]), str(self.span[1])]
        return out
