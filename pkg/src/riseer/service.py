"""Read-only HTTP service over a finished artifact store.

Every route serves slices of the immutable store; nothing mutates it, so
artifact payloads are cached for the lifetime of the app. Errors leave as
JSON {code, message} across the board.
"""

from __future__ import annotations

import os
from pathlib import Path

from fastapi import Body, FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .artifacts import ArtifactStore
from .forecast import MODEL_ALIASES, MODELS
from .config import TIER_NAMES
from .metrics import IndicatorSet, normalize_for_ranking
from .records import Month

STORE_ENV = "RISEER_STORE"


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _invalid(message: str) -> ApiError:
    return ApiError(400, "invalid-argument", message)


def _not_found(message: str) -> ApiError:
    return ApiError(404, "not-found", message)


def _parse_month(text: str, param: str) -> Month:
    try:
        return Month.parse(text)
    except ValueError as exc:
        raise _invalid(f"{param}: {exc}") from exc


def _rebuild_indicators(entry: dict) -> IndicatorSet:
    return IndicatorSet(**{name: entry["indicators"][name] for name in IndicatorSet.FIELDS})


def create_app(
    store_dir: str | Path | None = None, webui_dir: str | Path | None = None
) -> FastAPI:
    root = store_dir or os.environ.get(STORE_ENV)
    if not root:
        raise ValueError(f"no store directory: pass store_dir or set {STORE_ENV}")
    store = ArtifactStore(root)
    app = FastAPI(title="riseer", version="1.0")
    cache: dict[str, dict] = {}

    def payload(name: str) -> dict:
        if name not in cache:
            try:
                cache[name] = store.payload(name)
            except FileNotFoundError as exc:
                raise ApiError(503, "store-missing", str(exc)) from exc
        return cache[name]

    @app.exception_handler(ApiError)
    async def _on_api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    @app.exception_handler(RequestValidationError)
    async def _on_validation(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"code": "invalid-argument", "message": str(exc)})

    @app.get("/api/v1/manifest")
    def manifest():
        try:
            return store.manifest()
        except FileNotFoundError as exc:
            raise ApiError(503, "store-missing", str(exc)) from exc

    @app.get("/api/v1/projection")
    def projection():
        return payload("projection")

    @app.get("/api/v1/segments")
    def segments():
        return payload("segments")

    @app.get("/api/v1/paths")
    def paths():
        return payload("paths")

    @app.get("/api/v1/snapshots")
    def snapshots(
        from_: str | None = Query(None, alias="from"),
        to: str | None = Query(None),
    ):
        doc = payload("snapshots")
        span_lo, span_hi = (Month.parse(m) for m in doc["span"])
        lo = _parse_month(from_, "from") if from_ else span_lo
        hi = _parse_month(to, "to") if to else span_hi
        if hi < lo:
            raise _invalid(f"inverted range: {lo}..{hi}")

        def in_range(month_text: str) -> bool:
            return lo <= Month.parse(month_text) <= hi

        forecast = payload("forecast")
        return {
            "from": str(lo),
            "to": str(hi),
            "snapshots": [s for s in doc["snapshots"] if in_range(s["month"])],
            "forecast": [
                {
                    "tier": r["tier"],
                    "model": r["model"],
                    "points": [p for p in r["points"] if in_range(p["month"])],
                }
                for r in forecast["results"]
            ],
        }

    @app.get("/api/v1/forecast")
    def forecast(tier: str | None = None, model: str | None = None):
        doc = payload("forecast")
        if tier is not None and tier not in TIER_NAMES:
            raise _invalid(f"unknown tier: {tier!r}")
        if model is not None:
            model = MODEL_ALIASES.get(model, model)
            if model not in MODELS:
                raise _invalid(f"unknown model: {model!r}")
        results = [
            r for r in doc["results"]
            if (tier is None or r["tier"] == tier) and (model is None or r["model"] == model)
        ]
        if not results:
            raise _not_found(f"no forecast for tier={tier!r} model={model!r}")
        return {**doc, "results": results}

    @app.get("/api/v1/clusters")
    def clusters(period: str | None = None):
        doc = payload("clusters")
        if period is None or period == "all":
            return doc
        try:
            index = int(period)
        except ValueError as exc:
            raise _invalid(f"period must be an index or 'all', got {period!r}") from exc
        if not 0 <= index < len(doc["periods"]):
            raise _not_found(f"no period {index}; store has {len(doc['periods'])}")
        return {"periods": [doc["periods"][index]]}

    @app.get("/api/v1/clusters/{cluster_id}/details")
    def cluster_details(cluster_id: str):
        try:
            return store.detail(cluster_id)
        except KeyError as exc:
            raise _not_found(f"unknown cluster: {cluster_id!r}") from exc

    @app.post("/api/v1/compare")
    def compare(body: dict = Body(...)):
        ids = body.get("ids")
        if not isinstance(ids, list) or not all(isinstance(i, str) for i in ids):
            raise _invalid("body must carry 'ids': a list of cluster ids")
        if not 2 <= len(ids) <= 3:
            raise _invalid(f"comparison takes 2 or 3 cluster ids, got {len(ids)}")
        by_id = {entry["id"]: entry for entry in payload("indicators")["clusters"]}
        missing = [i for i in ids if i not in by_id]
        if missing:
            raise _not_found(f"unknown clusters: {missing}")
        picked = [by_id[i] for i in ids]
        sets = [_rebuild_indicators(entry) for entry in picked]
        aligned = {
            metric: normalize_for_ranking(sets, metric) for metric in IndicatorSet.FIELDS
        }
        bounds_low, bounds_high = [], []
        for metric in IndicatorSet.FIELDS:
            finite = [v for v in (getattr(s, metric) for s in sets) if v is not None]
            bounds_low.append(float(min(finite)) if finite else 0.0)
            bounds_high.append(float(max(finite)) if finite else 0.0)
        return {
            "ids": ids,
            "fields": list(IndicatorSet.FIELDS),
            "bounds": {"low": bounds_low, "high": bounds_high},
            "clusters": [
                {
                    "id": entry["id"],
                    "period": entry["period"],
                    "indicators": entry["indicators"],
                    "aligned": {
                        m: float(aligned[m][j]) for m in IndicatorSet.FIELDS
                    },
                    "rings": entry["rings"],
                }
                for j, entry in enumerate(picked)
            ],
        }

    if webui_dir is not None and Path(webui_dir).is_dir():
        app.mount("/", StaticFiles(directory=webui_dir, html=True), name="webui")

    return app
