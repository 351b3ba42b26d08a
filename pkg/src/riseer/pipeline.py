"""End-to-end run: a registration file in, a validated artifact store out.

Stages run in engine order (ingest, segmentation, clustering, metrics,
lineage, forecasting, projection), each wrapped so a failure reports the
stage name and cause. Nothing is written unless every stage finished.
"""

from __future__ import annotations

import dataclasses
from collections import Counter
from pathlib import Path

import numpy as np

from .artifacts import ArtifactStore, StoreWriter
from .cluster import PeriodClustering, ClusterParams, cluster_period
from .config import TIER_NAMES, ClusterConfig, PipelineConfig, ProjectionConfig, SegmentConfig
from .errors import DegenerateDataset, MapeUndefined, PipelineStageError
from .evolution import (
    EvolutionPath, LineageEdge, build_paths, edge_annotations, match_all, overlap_matrix,
)
from .forecast import ForecastConfig, ForecastResult, MapeScore, expanding_window_forecast, importance_bars, mape
from .ingest import (
    FEATURE_NAMES, MonthlySnapshot, RecordTable, Vocabularies, _interval_sums,
    build_monthly_series, build_vocabularies, count_series, parse_records, reindex_by_month,
)
from .metrics import (
    RING_BANDS, IndicatorSet, RingProfile,
    growth_rates, indicator_set, normalize_for_ranking, resolve_members, ring_profile,
)
from .projection import ExactTSNE, ProjectionPoint, snapshot_matrix, tsne_fit
from .records import SURVIVING_STATE, TIERS, EnterpriseRecord, Month, month_range
from .segmentation import Segment, TopDownSegmenter, select_periods

HEAT_GRID = 100

# end-date ordinal for records that never deregistered
_FOREVER = 10_000 * 365


def _staged(stage: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineStageError:
        raise
    except Exception as exc:
        raise PipelineStageError(stage, exc) from exc


# ---------------------------------------------------------------------------
# Stages


def ingest_stage(dataset: str | Path) -> list[EnterpriseRecord]:
    records, rejections = parse_records(dataset)
    if not records:
        raise DegenerateDataset(
            f"degenerate dataset: no usable records in {dataset} "
            f"({len(rejections)} rejected)"
        )
    return records


def snapshot_stage(
    records: list[EnterpriseRecord], config: PipelineConfig
) -> tuple[list[MonthlySnapshot], tuple[Month, Month], Vocabularies]:
    index = reindex_by_month(records)
    span = config.span or index.span
    vocabs = build_vocabularies(records)
    snapshots = build_monthly_series(index, records, vocabs, span)
    if not snapshots:
        raise DegenerateDataset("degenerate dataset: empty snapshot span")
    return snapshots, span, vocabs


def segment_stage(
    snapshots: list[MonthlySnapshot], config: SegmentConfig
) -> tuple[np.ndarray, TopDownSegmenter, list[Segment]]:
    series = count_series(snapshots, config.series)
    segmenter = TopDownSegmenter(threshold=config.threshold, mode=config.mode).fit(series)
    periods = select_periods(
        series, segmenter.segments_, k=config.top_k, min_length=config.min_length
    )
    return series, segmenter, periods


def cluster_stage(
    records: list[EnterpriseRecord],
    periods: list[Segment],
    span: tuple[Month, Month],
    config: ClusterConfig,
) -> list[PeriodClustering]:
    manual = ClusterParams(config.eps_km, config.min_pts) if config.manual else None
    return [
        cluster_period(
            records, period, span[0],
            min_size=config.min_size, k_max=config.k_max,
            run_length=config.run_length, params=manual,
        )
        for period in periods
    ]


def evolution_stage(clusterings: list[PeriodClustering], config) -> tuple[
    list[list[LineageEdge]], list[np.ndarray], list[EvolutionPath]
]:
    levels = [pc.clusters for pc in clusterings]
    pair_edges = match_all(levels, config.min_overlap, config.relative_min_frac)
    matrices = [overlap_matrix(a, b) for a, b in zip(levels, levels[1:])]
    paths = build_paths(levels, pair_edges)
    return pair_edges, matrices, paths


def forecast_stage(
    snapshots: list[MonthlySnapshot], config: ForecastConfig
) -> list[tuple[ForecastResult, MapeScore | None]]:
    models = [config.model] + (["NaiveLast"] if config.model != "NaiveLast" else [])
    out = []
    for tier in TIER_NAMES:
        for model in models:
            result = expanding_window_forecast(
                snapshots, tier, dataclasses.replace(config, model=model)
            )
            try:
                score = mape(result.points)
            except MapeUndefined:
                score = None
            out.append((result, score))
    return out


def projection_stage(
    records: list[EnterpriseRecord],
    vocabs: Vocabularies,
    span: tuple[Month, Month],
    config: ProjectionConfig,
) -> tuple[list[ProjectionPoint], ExactTSNE]:
    table = RecordTable(records, vocabs)
    vectors, counts = snapshot_matrix(table, vocabs, span)
    months = month_range(*span)
    return tsne_fit(
        months, vectors,
        perplexity=config.perplexity, seed=config.seed, iters=config.n_iter,
        active_counts=counts,
    )


# ---------------------------------------------------------------------------
# Payload builders


def _num(x) -> float | None:
    if x is None:
        return None
    x = float(x)
    return x if np.isfinite(x) else None


def _indicators_dict(ind: IndicatorSet) -> dict:
    out = {}
    for name in IndicatorSet.FIELDS:
        value = getattr(ind, name)
        out[name] = _num(value) if name == "aggregation_index" else float(value)
    return out


def _rings_dict(profile: RingProfile) -> dict:
    return {
        "slices": [
            {
                "band_km": list(s.band_km),
                "count": s.count,
                "indicators": None if s.indicators is None else _indicators_dict(s.indicators),
            }
            for s in profile.rings
        ],
        "remainder_count": profile.remainder_count,
    }


def snapshots_payload(snapshots: list[MonthlySnapshot], span: tuple[Month, Month]) -> dict:
    return {
        "span": [str(span[0]), str(span[1])],
        "tiers": list(TIER_NAMES),
        "feature_names": list(FEATURE_NAMES),
        "snapshots": [
            {
                "month": str(s.month),
                "counts": [int(c) for c in s.active_counts],
                "total": s.total,
                "features": [float(v) for v in s.model_features],
            }
            for s in snapshots
        ],
    }


def _segment_dict(seg: Segment, series: np.ndarray, span_start: Month) -> dict:
    idx = np.arange(seg.start_idx, seg.end_idx + 1)
    residuals = series[idx] - (seg.slope * idx + seg.intercept)
    return {
        "start_idx": seg.start_idx,
        "end_idx": seg.end_idx,
        "start_month": str(span_start.plus(seg.start_idx)),
        "end_month": str(span_start.plus(seg.end_idx)),
        "slope": float(seg.slope),
        "intercept": float(seg.intercept),
        "max_residual": float(seg.max_residual),
        "length": seg.length,
        "residuals": [float(r) for r in residuals],
    }


def segments_payload(
    series: np.ndarray,
    segmenter: TopDownSegmenter,
    periods: list[Segment],
    span_start: Month,
    config: SegmentConfig,
) -> dict:
    return {
        "series": config.series,
        "threshold": {
            "setting": config.threshold,
            "mode": config.mode,
            "resolved": float(segmenter.threshold_),
        },
        "n_months": int(len(series)),
        "segments": [_segment_dict(s, series, span_start) for s in segmenter.segments_],
        "periods": [_segment_dict(s, series, span_start) for s in periods],
    }


def clusters_payload(clusterings: list[PeriodClustering]) -> dict:
    return {
        "periods": [
            {
                "period": list(pc.period),
                "months": [str(pc.months[0]), str(pc.months[1])],
                "params": {"eps_km": float(pc.params.eps_km), "min_pts": pc.params.min_pts},
                "stable": pc.stable,
                "n_points": pc.n_points,
                "noise_count": pc.noise_count,
                "clusters": [
                    {
                        "id": c.cluster_id,
                        "member_ids": list(c.member_ids),
                        "centroid": [float(c.centroid[0]), float(c.centroid[1])],
                        "size": c.size,
                    }
                    for c in pc.clusters
                ],
            }
            for pc in clusterings
        ],
    }


def indicators_payload(
    clusterings: list[PeriodClustering],
    paths: list[EvolutionPath],
    records_by_id: dict[str, EnterpriseRecord],
    vocabs: Vocabularies,
    span_start: Month,
) -> dict:
    entries = []
    cluster_by_id = {}
    for pc in clusterings:
        as_of = pc.months[1]
        sets = [indicator_set(c, records_by_id, vocabs, as_of) for c in pc.clusters]
        normalized = {
            metric: normalize_for_ranking(sets, metric) for metric in IndicatorSet.FIELDS
        }
        for j, (cluster, ind) in enumerate(zip(pc.clusters, sets)):
            cluster_by_id[cluster.cluster_id] = cluster
            entries.append({
                "id": cluster.cluster_id,
                "period": list(cluster.period),
                "as_of": str(as_of),
                "indicators": _indicators_dict(ind),
                "normalized": {m: float(normalized[m][j]) for m in IndicatorSet.FIELDS},
                "rings": _rings_dict(ring_profile(cluster, records_by_id, vocabs, as_of)),
            })

    path_entries = []
    for path in paths:
        growth = []
        if len(path.cluster_ids) >= 2:
            chain = [cluster_by_id[cid] for cid in path.cluster_ids]
            for pg in growth_rates(chain, records_by_id, span_start):
                growth.append({
                    "period": list(pg.period),
                    "boxes": [
                        {
                            "tier": box.tier,
                            "summary": None if box.summary is None
                            else dataclasses.asdict(box.summary),
                            "n_samples": box.n_samples,
                            "skipped": box.skipped,
                        }
                        for box in pg.boxes
                    ],
                })
        path_entries.append({"path_id": path.path_id, "growth": growth})

    return {
        "fields": list(IndicatorSet.FIELDS),
        "ring_bands_km": [list(band) for band in RING_BANDS],
        "clusters": entries,
        "paths": path_entries,
    }


def paths_payload(
    clusterings: list[PeriodClustering],
    pair_edges: list[list[LineageEdge]],
    matrices: list[np.ndarray],
    paths: list[EvolutionPath],
) -> dict:
    edge_levels = []
    for level in pair_edges:
        edge_levels.append([
            {
                "from_cluster": e.from_cluster,
                "to_cluster": e.to_cluster,
                "overlap": e.overlap,
                "centroid_shift_km": float(e.centroid_shift_km),
                "label": str(edge_annotations(e)),
            }
            for e in level
        ])
    matrix_entries = []
    for (a, b), matrix in zip(zip(clusterings, clusterings[1:]), matrices):
        matrix_entries.append({
            "periods": [list(a.period), list(b.period)],
            "rows": [c.cluster_id for c in a.clusters],
            "cols": [c.cluster_id for c in b.clusters],
            "matrix": [[int(v) for v in row] for row in matrix],
        })
    return {
        "edges": edge_levels,
        "overlap_matrices": matrix_entries,
        "paths": [
            {
                "path_id": p.path_id,
                "cluster_ids": list(p.cluster_ids),
                "periods": [list(t) for t in p.periods],
            }
            for p in paths
        ],
    }


def forecast_payload(
    results: list[tuple[ForecastResult, MapeScore | None]], window: int
) -> dict:
    entries = []
    for result, score in results:
        points, bars = [], []
        for p in result.points:
            points.append({
                "month": str(p.month),
                "actual": p.actual,
                "predicted": p.predicted,
                "base_value": p.base_value,
                "attributions": [float(v) for v in p.attributions],
            })
            bar = importance_bars(p)
            bars.append({
                "magnitudes": [float(v) for v in bar.magnitudes],
                "signs": [int(v) for v in bar.signs],
            })
        entries.append({
            "tier": result.tier,
            "model": result.model,
            "points": points,
            "bars": bars,
            "mape": None if score is None else {
                "percentage": score.percentage,
                "n_scored": score.n_scored,
                "n_skipped": score.n_skipped,
            },
            "audits": [
                {
                    "eval_start": str(a.eval_start),
                    "train_through": str(a.train_through),
                    "n_pairs": a.n_pairs,
                }
                for a in result.audits
            ],
        })
    return {"window": window, "feature_names": list(FEATURE_NAMES), "results": entries}


def projection_payload(
    points: list[ProjectionPoint], model: ExactTSNE, config: ProjectionConfig
) -> dict:
    return {
        "settings": {
            "perplexity": config.perplexity,
            "n_iter": config.n_iter,
            "seed": config.seed,
        },
        "kl_divergence": float(model.kl_divergence_),
        "points": [
            {
                "month": str(p.month),
                "x": p.xy[0],
                "y": p.xy[1],
                "order_index": p.order_index,
                "n_active": p.n_active,
            }
            for p in points
        ],
    }


# ---------------------------------------------------------------------------
# Cluster detail bundles


def _padded(lo: float, hi: float) -> tuple[float, float]:
    if hi > lo:
        return lo, hi
    return lo - 1e-9, hi + 1e-9


def _member_counts(members: list[EnterpriseRecord], months: list[Month]) -> np.ndarray:
    """(3, n_months) active counts for a fixed member set, tier by tier."""
    lo, n = months[0].index, len(months)
    starts = np.array([r.start_month().index for r in members], dtype=np.int64)
    ends = np.array(
        [_FOREVER if r.end_date is None else r.end_month().index for r in members],
        dtype=np.int64,
    )
    tiers = np.array([TIERS.index(r.tier) for r in members])
    out = np.zeros((3, n), dtype=np.int64)
    for t in range(3):
        sel = tiers == t
        if sel.any():
            out[t] = np.rint(_interval_sums(starts[sel], ends[sel], lo, n)).astype(np.int64)
    return out


def _livability_curve(members: list[EnterpriseRecord], months: list[Month]) -> list[dict]:
    """Surviving fraction of the full member set at each month end."""
    death_days = np.sort(np.array([
        r.end_date.toordinal() if r.end_date is not None else _FOREVER
        for r in members
        if r.state == SURVIVING_STATE
    ], dtype=np.int64))
    n = len(members)
    curve = []
    for m in months:
        gone = int(np.searchsorted(death_days, m.last_day().toordinal(), side="right"))
        liv = (len(death_days) - gone) / n
        curve.append({"month": str(m), "livability": liv, "mortality": 1.0 - liv})
    return curve


def details_payload(
    cluster, members: list[EnterpriseRecord], months: list[Month], grid: int = HEAT_GRID
) -> dict:
    counts = _member_counts(members, months)
    lons = np.array([r.lon for r in members])
    lats = np.array([r.lat for r in members])
    lon_lo, lon_hi = _padded(float(lons.min()), float(lons.max()))
    lat_lo, lat_hi = _padded(float(lats.min()), float(lats.max()))
    heat, _, _ = np.histogram2d(
        lons, lats, bins=grid, range=[[lon_lo, lon_hi], [lat_lo, lat_hi]]
    )
    return {
        "cluster_id": cluster.cluster_id,
        "period": list(cluster.period),
        "months": [str(m) for m in months],
        "registration": {
            "total": [int(v) for v in counts.sum(axis=0)],
            "by_tier": [[int(v) for v in row] for row in counts],
        },
        "livability": _livability_curve(members, months),
        "histogram": {
            "tiers": dict(sorted(Counter(r.tier.value for r in members).items())),
            "codes": dict(sorted(Counter(r.classification_code for r in members).items())),
        },
        "heat_grid": {
            "bbox": [lon_lo, lat_lo, lon_hi, lat_hi],
            "shape": [grid, grid],
            "cells": [[int(v) for v in row] for row in heat],
        },
    }


# ---------------------------------------------------------------------------
# The full run


def run_pipeline(
    dataset: str | Path, config: PipelineConfig, out: str | Path
) -> ArtifactStore:
    records = _staged("ingest", ingest_stage, dataset)
    snapshots, span, vocabs = _staged("ingest", snapshot_stage, records, config)
    series, segmenter, periods = _staged("segmentation", segment_stage, snapshots, config.segment)
    clusterings = _staged("geocluster", cluster_stage, records, periods, span, config.cluster)
    pair_edges, matrices, paths = _staged("evolution", evolution_stage, clusterings, config.paths)
    records_by_id = {r.id: r for r in records}
    indicators = _staged(
        "metrics", indicators_payload, clusterings, paths, records_by_id, vocabs, span[0]
    )
    forecasts = _staged("forecast", forecast_stage, snapshots, config.forecast)
    proj_points, proj_model = _staged(
        "projection", projection_stage, records, vocabs, span, config.projection
    )

    writer = StoreWriter(config.dataset_id, config.to_dict())
    writer.put("snapshots", snapshots_payload(snapshots, span))
    writer.put("segments", segments_payload(series, segmenter, periods, span[0], config.segment))
    writer.put("clusters", clusters_payload(clusterings))
    writer.put("indicators", indicators)
    writer.put("paths", paths_payload(clusterings, pair_edges, matrices, paths))
    writer.put("forecast", forecast_payload(forecasts, config.forecast.window))
    writer.put("projection", projection_payload(proj_points, proj_model, config.projection))
    for pc in clusterings:
        months = month_range(*pc.months)
        for cluster in pc.clusters:
            members = resolve_members(cluster, records_by_id)
            writer.put_detail(cluster.cluster_id, details_payload(cluster, members, months))
    return _staged("store", writer.write, out)
