"""Command-line entry points: single pipeline stages, the full run, the server."""

from __future__ import annotations

import dataclasses
import functools
import os
from pathlib import Path

import click
import uvicorn

from .artifacts import write_single
from .config import TIER_NAMES, PipelineConfig
from .errors import MapeUndefined, PipelineStageError, RiseerError
from .forecast import MODEL_ALIASES, MODELS, expanding_window_forecast, mape
from .ingest import parse_records, write_rejections
from .pipeline import (
    clusters_payload, cluster_stage, evolution_stage, forecast_payload,
    paths_payload, projection_payload, projection_stage, run_pipeline,
    segment_stage, segments_payload, snapshot_stage, snapshots_payload,
)
from .segmentation import parse_threshold_spec
from .service import create_app
from .synthgen import generate, load_scenario, write_ground_truth, write_records_csv


def friendly(fn):
    """Engine and config errors become clean CLI messages, not tracebacks."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (RiseerError, ValueError) as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


def _load_config(config_path: str | None) -> PipelineConfig:
    return PipelineConfig.from_file(config_path) if config_path else PipelineConfig()


def _load_snapshots(dataset: str, cfg: PipelineConfig):
    records, rejections = parse_records(dataset)
    if not records:
        raise click.ClickException(
            f"degenerate dataset: no usable records ({len(rejections)} rejected)"
        )
    snapshots, span, vocabs = snapshot_stage(records, cfg)
    return records, rejections, snapshots, span, vocabs


config_option = click.option(
    "--config", "config_path", type=click.Path(exists=True, dir_okay=False),
    default=None, help="JSON run configuration.",
)
out_option = click.option(
    "--out", "out_dir", type=click.Path(file_okay=False),
    default="out", show_default=True, help="Output directory.",
)
dataset_argument = click.argument("dataset", type=click.Path(exists=True, dir_okay=False))


@click.group()
def main():
    """Reconstruct regional industrial structure from enterprise registrations."""


@main.command()
@click.option("--scenario", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Scenario JSON describing blobs, rates, and events.")
@click.option("--seed", type=int, default=None, help="Override the scenario seed.")
@click.option("--out", "out_csv", required=True, type=click.Path(dir_okay=False),
              help="Destination CSV; ground truth lands beside it.")
@friendly
def synth(scenario: str, seed: int | None, out_csv: str):
    """Generate a synthetic registration CSV with known ground truth."""
    cfg = load_scenario(scenario)
    if seed is not None:
        cfg = dataclasses.replace(cfg, seed=seed)
    records, truth = generate(cfg)
    write_records_csv(records, out_csv)
    truth_path = Path(out_csv).with_suffix(".truth.json")
    write_ground_truth(truth, truth_path)
    click.echo(f"wrote {len(records)} records to {out_csv} (truth: {truth_path})")


@main.command()
@dataset_argument
@config_option
@out_option
@friendly
def ingest(dataset: str, config_path: str | None, out_dir: str):
    """Parse a registration file into the monthly snapshot artifact."""
    cfg = _load_config(config_path)
    records, rejections, snapshots, span, _ = _load_snapshots(dataset, cfg)
    if rejections:
        report = Path(out_dir) / "rejections.jsonl"
        report.parent.mkdir(parents=True, exist_ok=True)
        write_rejections(rejections, report)
        click.echo(f"{len(rejections)} rows rejected; report at {report}")
    path = write_single(out_dir, "snapshots", cfg.dataset_id,
                        snapshots_payload(snapshots, span))
    click.echo(f"{len(records)} records over {span[0]}..{span[1]}; wrote {path}")


@main.command()
@dataset_argument
@click.option("--threshold", default=None,
              help="Error budget: bare fraction, frac:<v>, or abs:<v>.")
@click.option("--series", "series_sel", default=None,
              help="total or tier:<primary|secondary|tertiary>.")
@config_option
@out_option
@friendly
def segment(dataset: str, threshold: str | None, series_sel: str | None,
            config_path: str | None, out_dir: str):
    """Split the monthly count series into linear evolution periods."""
    cfg = _load_config(config_path)
    seg_cfg = cfg.segment
    updates = {}
    if threshold is not None:
        updates["threshold"], updates["mode"] = parse_threshold_spec(threshold)
    if series_sel is not None:
        updates["series"] = series_sel
    if updates:
        seg_cfg = dataclasses.replace(seg_cfg, **updates)
    _, _, snapshots, span, _ = _load_snapshots(dataset, cfg)
    series, segmenter, periods = segment_stage(snapshots, seg_cfg)
    path = write_single(out_dir, "segments", cfg.dataset_id,
                        segments_payload(series, segmenter, periods, span[0], seg_cfg))
    click.echo(f"{len(segmenter.segments_)} segments, {len(periods)} periods kept; wrote {path}")


@main.command()
@dataset_argument
@click.option("--period", "period_sel", default="all", show_default=True,
              help="Period index to cluster, or 'all'.")
@click.option("--eps", "eps_km", type=float, default=None,
              help="Manual radius in km (skips the automatic search).")
@click.option("--minpts", "min_pts", type=int, default=None,
              help="Manual core-point threshold (with --eps).")
@config_option
@out_option
@friendly
def cluster(dataset: str, period_sel: str, eps_km: float | None, min_pts: int | None,
            config_path: str | None, out_dir: str):
    """Find dense enterprise groups within each evolution period."""
    cfg = _load_config(config_path)
    cluster_cfg = cfg.cluster
    if (eps_km is None) != (min_pts is None):
        raise click.ClickException("manual override needs both --eps and --minpts")
    if eps_km is not None:
        cluster_cfg = dataclasses.replace(cluster_cfg, eps_km=eps_km, min_pts=min_pts)
    records, _, snapshots, span, _ = _load_snapshots(dataset, cfg)
    _, _, periods = segment_stage(snapshots, cfg.segment)
    if period_sel != "all":
        try:
            index = int(period_sel)
        except ValueError as exc:
            raise click.ClickException(
                f"--period takes an index or 'all', got {period_sel!r}"
            ) from exc
        if not 0 <= index < len(periods):
            raise click.ClickException(f"no period {index}; run found {len(periods)}")
        periods = [periods[index]]
    clusterings = cluster_stage(records, periods, span, cluster_cfg)
    path = write_single(out_dir, "clusters", cfg.dataset_id, clusters_payload(clusterings))
    total = sum(len(pc.clusters) for pc in clusterings)
    click.echo(f"{total} clusters across {len(clusterings)} periods; wrote {path}")


@main.command()
@dataset_argument
@click.option("--tier", default="all", show_default=True,
              help="all or one of primary|secondary|tertiary.")
@click.option("--model", default=None, help="rf, gbt, or naive.")
@click.option("--L", "-L", "window", type=int, default=None,
              help="Months of history in each model input.")
@click.option("--seed", type=int, default=None)
@config_option
@out_option
@friendly
def forecast(dataset: str, tier: str, model: str | None, window: int | None,
             seed: int | None, config_path: str | None, out_dir: str):
    """Fit expanding-window forecasters and explain every prediction."""
    cfg = _load_config(config_path)
    fc = cfg.forecast
    updates = {}
    if model is not None:
        resolved = MODEL_ALIASES.get(model, model)
        if resolved not in MODELS:
            raise click.ClickException(f"unknown model: {model!r}")
        updates["model"] = resolved
    if window is not None:
        updates["window"] = window
    if seed is not None:
        updates["seed"] = seed
    if updates:
        fc = dataclasses.replace(fc, **updates)
    if tier != "all" and tier not in TIER_NAMES:
        raise click.ClickException(f"--tier takes all or one of {TIER_NAMES}")
    tiers = TIER_NAMES if tier == "all" else (tier,)
    _, _, snapshots, _, _ = _load_snapshots(dataset, cfg)
    results = []
    for t in tiers:
        result = expanding_window_forecast(snapshots, t, fc)
        try:
            score = mape(result.points)
        except MapeUndefined:
            score = None
        results.append((result, score))
    path = write_single(out_dir, "forecast", cfg.dataset_id,
                        forecast_payload(results, fc.window))
    click.echo(f"{sum(len(r.points) for r, _ in results)} forecast points; wrote {path}")


@main.command()
@dataset_argument
@config_option
@out_option
@friendly
def project(dataset: str, config_path: str | None, out_dir: str):
    """Embed the monthly snapshots into a 2-d overview map."""
    cfg = _load_config(config_path)
    records, _, _, span, vocabs = _load_snapshots(dataset, cfg)
    points, model = projection_stage(records, vocabs, span, cfg.projection)
    path = write_single(out_dir, "projection", cfg.dataset_id,
                        projection_payload(points, model, cfg.projection))
    click.echo(f"{len(points)} months embedded (KL {model.kl_divergence_:.4f}); wrote {path}")


@main.command()
@dataset_argument
@config_option
@out_option
@friendly
def paths(dataset: str, config_path: str | None, out_dir: str):
    """Trace cluster lineages across consecutive evolution periods."""
    cfg = _load_config(config_path)
    records, _, snapshots, span, _ = _load_snapshots(dataset, cfg)
    _, _, periods = segment_stage(snapshots, cfg.segment)
    clusterings = cluster_stage(records, periods, span, cfg.cluster)
    pair_edges, matrices, chains = evolution_stage(clusterings, cfg.paths)
    path = write_single(out_dir, "paths", cfg.dataset_id,
                        paths_payload(clusterings, pair_edges, matrices, chains))
    click.echo(f"{len(chains)} paths over {len(clusterings)} periods; wrote {path}")


@main.command()
@dataset_argument
@config_option
@out_option
def run(dataset: str, config_path: str | None, out_dir: str):
    """Execute every stage and write a complete artifact store."""
    try:
        cfg = _load_config(config_path)
        store = run_pipeline(dataset, cfg, out_dir)
    except (PipelineStageError, ValueError) as exc:
        raise click.ClickException(str(exc)) from exc
    manifest = store.manifest()
    click.echo(
        f"store at {store.root}: {len(manifest['artifacts'])} artifacts, "
        f"{len(manifest['detail_ids'])} cluster detail bundles"
    )
    click.echo(f"store hash {manifest['store_hash']}")


@main.command()
@click.option("--store", "store_dir", type=click.Path(file_okay=False), default=None,
              help="Artifact store directory (default: $RISEER_STORE).")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8750, show_default=True, type=int)
@click.option("--webui", "webui_dir", type=click.Path(file_okay=False), default=None,
              help="Static UI bundle to serve at / (default: $RISEER_WEBUI).")
@friendly
def serve(store_dir: str | None, host: str, port: int, webui_dir: str | None):
    """Serve the artifact store (and optionally the UI) over HTTP."""
    webui_dir = webui_dir or os.environ.get("RISEER_WEBUI")
    app = create_app(store_dir, webui_dir)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
