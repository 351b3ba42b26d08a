"""JSON Schemas for every artifact the store writes and the service returns.

Each artifact file is an envelope {kind, dataset_id, created_at, payload};
the payload schema is keyed by kind. Everything is closed (no unknown keys)
so a drifting serializer fails validation instead of shipping silently.
"""

from __future__ import annotations

import jsonschema

MONTH = {"type": "string", "pattern": r"^\d{4}-\d{2}$"}
NUMBER = {"type": "number"}
INT = {"type": "integer"}
STRING = {"type": "string"}
NULLABLE_NUMBER = {"type": ["number", "null"]}

SNAPSHOTS_KIND = "riseer.snapshots.v1"
SEGMENTS_KIND = "riseer.segments.v1"
CLUSTERS_KIND = "riseer.clusters.v1"
INDICATORS_KIND = "riseer.indicators.v1"
PATHS_KIND = "riseer.paths.v1"
FORECAST_KIND = "riseer.forecast.v1"
PROJECTION_KIND = "riseer.projection.v1"
DETAILS_KIND = "riseer.cluster_details.v1"
MANIFEST_KIND = "riseer.manifest.v1"

ARTIFACT_KINDS = (
    SNAPSHOTS_KIND, SEGMENTS_KIND, CLUSTERS_KIND, INDICATORS_KIND,
    PATHS_KIND, FORECAST_KIND, PROJECTION_KIND,
)


def _obj(properties: dict, required: list[str] | None = None) -> dict:
    return {
        "type": "object",
        "properties": properties,
        "required": sorted(properties) if required is None else required,
        "additionalProperties": False,
    }


def _arr(items: dict) -> dict:
    return {"type": "array", "items": items}


def _pair(items: dict) -> dict:
    return {"type": "array", "items": items, "minItems": 2, "maxItems": 2}


_PERIOD = _pair(INT)

_SEGMENT = _obj({
    "start_idx": INT,
    "end_idx": INT,
    "start_month": MONTH,
    "end_month": MONTH,
    "slope": NUMBER,
    "intercept": NUMBER,
    "max_residual": NUMBER,
    "length": INT,
    "residuals": _arr(NUMBER),
})

_INDICATORS = _obj({
    "n_primary": INT,
    "n_secondary": INT,
    "n_tertiary": INT,
    "aggregation_index": NULLABLE_NUMBER,
    "avg_capital": NUMBER,
    "total_capital": NUMBER,
    "credit_rating": NUMBER,
    "livability": NUMBER,
    "mortality": NUMBER,
})

# normalized indicator values are all unit-interval floats, counts included
_NORMALIZED = _obj({name: NUMBER for name in _INDICATORS["properties"]})

_RING_SLICE = _obj({
    "band_km": _pair(NUMBER),
    "count": INT,
    "indicators": {"oneOf": [_INDICATORS, {"type": "null"}]},
})

_RINGS = _obj({
    "slices": _arr(_RING_SLICE),
    "remainder_count": INT,
})

_FIVE_NUMBER = _obj({
    "minimum": NUMBER, "q1": NUMBER, "median": NUMBER, "q3": NUMBER, "maximum": NUMBER,
})

_GROWTH_BOX = _obj({
    "tier": STRING,
    "summary": {"oneOf": [_FIVE_NUMBER, {"type": "null"}]},
    "n_samples": INT,
    "skipped": INT,
})

_EDGE = _obj({
    "from_cluster": STRING,
    "to_cluster": STRING,
    "overlap": INT,
    "centroid_shift_km": NUMBER,
    "label": STRING,
})

_FORECAST_POINT = _obj({
    "month": MONTH,
    "actual": NUMBER,
    "predicted": NUMBER,
    "base_value": NUMBER,
    "attributions": _arr(NUMBER),
})

_IMPORTANCE_BAR = _obj({
    "magnitudes": _arr(NUMBER),
    "signs": _arr(INT),
})

_MAPE = _obj({
    "percentage": NUMBER,
    "n_scored": INT,
    "n_skipped": INT,
})

_AUDIT = _obj({
    "eval_start": MONTH,
    "train_through": MONTH,
    "n_pairs": INT,
})

_SNAPSHOT_ITEM = _obj({
    "month": MONTH,
    "counts": {"type": "array", "items": INT, "minItems": 3, "maxItems": 3},
    "total": INT,
    "features": _arr(NUMBER),
})

PAYLOAD_SCHEMAS = {
    SNAPSHOTS_KIND: _obj({
        "span": _pair(MONTH),
        "tiers": _arr(STRING),
        "feature_names": _arr(STRING),
        "snapshots": _arr(_SNAPSHOT_ITEM),
    }),
    SEGMENTS_KIND: _obj({
        "series": STRING,
        "threshold": _obj({"setting": NUMBER, "mode": STRING, "resolved": NUMBER}),
        "n_months": INT,
        "segments": _arr(_SEGMENT),
        "periods": _arr(_SEGMENT),
    }),
    CLUSTERS_KIND: _obj({
        "periods": _arr(_obj({
            "period": _PERIOD,
            "months": _pair(MONTH),
            "params": _obj({"eps_km": NUMBER, "min_pts": INT}),
            "stable": {"type": "boolean"},
            "n_points": INT,
            "noise_count": INT,
            "clusters": _arr(_obj({
                "id": STRING,
                "member_ids": _arr(STRING),
                "centroid": _pair(NUMBER),
                "size": INT,
            })),
        })),
    }),
    INDICATORS_KIND: _obj({
        "fields": _arr(STRING),
        "ring_bands_km": _arr(_pair(NUMBER)),
        "clusters": _arr(_obj({
            "id": STRING,
            "period": _PERIOD,
            "as_of": MONTH,
            "indicators": _INDICATORS,
            "normalized": _NORMALIZED,
            "rings": _RINGS,
        })),
        "paths": _arr(_obj({
            "path_id": STRING,
            "growth": _arr(_obj({
                "period": _PERIOD,
                "boxes": _arr(_GROWTH_BOX),
            })),
        })),
    }),
    PATHS_KIND: _obj({
        "edges": _arr(_arr(_EDGE)),
        "overlap_matrices": _arr(_obj({
            "periods": _pair(_PERIOD),
            "rows": _arr(STRING),
            "cols": _arr(STRING),
            "matrix": _arr(_arr(INT)),
        })),
        "paths": _arr(_obj({
            "path_id": STRING,
            "cluster_ids": _arr(STRING),
            "periods": _arr(_PERIOD),
        })),
    }),
    FORECAST_KIND: _obj({
        "window": INT,
        "feature_names": _arr(STRING),
        "results": _arr(_obj({
            "tier": STRING,
            "model": STRING,
            "points": _arr(_FORECAST_POINT),
            "bars": _arr(_IMPORTANCE_BAR),
            "mape": {"oneOf": [_MAPE, {"type": "null"}]},
            "audits": _arr(_AUDIT),
        })),
    }),
    PROJECTION_KIND: _obj({
        "settings": _obj({"perplexity": NUMBER, "n_iter": INT, "seed": INT}),
        "kl_divergence": NUMBER,
        "points": _arr(_obj({
            "month": MONTH,
            "x": NUMBER,
            "y": NUMBER,
            "order_index": INT,
            "n_active": INT,
        })),
    }),
    DETAILS_KIND: _obj({
        "cluster_id": STRING,
        "period": _PERIOD,
        "months": _arr(MONTH),
        "registration": _obj({
            "total": _arr(INT),
            "by_tier": _arr(_arr(INT)),
        }),
        "livability": _arr(_obj({
            "month": MONTH, "livability": NUMBER, "mortality": NUMBER,
        })),
        "histogram": _obj({
            "tiers": {"type": "object", "additionalProperties": INT},
            "codes": {"type": "object", "additionalProperties": INT},
        }),
        "heat_grid": _obj({
            "bbox": {"type": "array", "items": NUMBER, "minItems": 4, "maxItems": 4},
            "shape": _pair(INT),
            "cells": _arr(_arr(INT)),
        }),
    }),
}

ENVELOPE_SCHEMAS = {
    kind: _obj({
        "kind": {"const": kind},
        "dataset_id": STRING,
        "created_at": STRING,
        "payload": payload,
    })
    for kind, payload in PAYLOAD_SCHEMAS.items()
}

MANIFEST_SCHEMA = _obj({
    "kind": {"const": MANIFEST_KIND},
    "dataset_id": STRING,
    "created_at": STRING,
    "config": {"type": "object"},
    "config_hash": STRING,
    "artifacts": {
        "type": "object",
        "additionalProperties": _obj({
            "kind": STRING,
            "path": STRING,
            "hash": STRING,
        }),
    },
    "detail_ids": _arr(STRING),
    "store_hash": STRING,
})

ERROR_SCHEMA = _obj({"code": STRING, "message": STRING})

# response of the month-range query: snapshots plus forecast points in range
RANGE_SCHEMA = _obj({
    "from": MONTH,
    "to": MONTH,
    "snapshots": _arr(_SNAPSHOT_ITEM),
    "forecast": _arr(_obj({
        "tier": STRING,
        "model": STRING,
        "points": _arr(_FORECAST_POINT),
    })),
})

COMPARE_SCHEMA = _obj({
    "ids": _arr(STRING),
    "fields": _arr(STRING),
    "bounds": _obj({"low": _arr(NUMBER), "high": _arr(NUMBER)}),
    "clusters": _arr(_obj({
        "id": STRING,
        "period": _PERIOD,
        "indicators": _INDICATORS,
        "aligned": _NORMALIZED,
        "rings": _RINGS,
    })),
})


def validate_document(document: dict) -> None:
    """Check an artifact envelope or manifest against its schema by kind."""
    kind = document.get("kind")
    if kind == MANIFEST_KIND:
        schema = MANIFEST_SCHEMA
    elif kind in ENVELOPE_SCHEMAS:
        schema = ENVELOPE_SCHEMAS[kind]
    else:
        raise ValueError(f"unknown artifact kind: {kind!r}")
    jsonschema.validate(document, schema)
