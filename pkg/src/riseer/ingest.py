"""Parse raw registration files, re-index by date, and build the monthly series.

The raw file is row-per-enterprise; everything downstream runs on the month
clock, so this module pivots the data twice: once into a month-keyed activity
index and once into per-month aggregate snapshots.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

from .records import TIERS, EnterpriseRecord, Month, SURVIVING_STATE, Tier, month_range

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "id", "name", "lon", "lat", "start_date", "end_date", "tier",
    "classification_code", "registered_capital", "credit_rating", "property", "state",
)

FEATURE_NAMES = (
    "year", "month", "classification_code", "registered_capital",
    "credit_rating", "property", "state",
)

OTHER_SLOT = "__other__"

# Month index sentinel for "still operating": active through any span end.
_OPEN_END = 10_000 * 12


@dataclass(frozen=True)
class Rejection:
    """One refused input row and why it was refused."""

    row: int
    reason: str

    def to_json(self) -> str:
        return json.dumps({"row": self.row, "reason": self.reason})


class RowError(ValueError):
    pass


def _parse_date(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError:
        raise RowError(f"bad date: {text!r}") from None


def _parse_row(raw: dict) -> EnterpriseRecord:
    missing = [c for c in CSV_COLUMNS if raw.get(c) is None and c not in ("name", "end_date")]
    if missing:
        raise RowError(f"missing field: {missing[0]}")
    rid = str(raw["id"]).strip()
    if not rid:
        raise RowError("empty id")
    try:
        lon = float(raw["lon"])
        lat = float(raw["lat"])
    except (TypeError, ValueError):
        raise RowError("bad coordinate") from None
    if not (-180.0 <= lon <= 180.0) or not (-90.0 <= lat <= 90.0):
        raise RowError("coordinate out of range")
    start = _parse_date(str(raw["start_date"]))
    end_raw = raw.get("end_date")
    end = None
    if end_raw not in (None, ""):
        end = _parse_date(str(end_raw))
        if end < start:
            raise RowError("lifespan inverted")
    try:
        capital = float(raw["registered_capital"])
    except (TypeError, ValueError):
        raise RowError("bad capital") from None
    if capital < 0:
        raise RowError("negative capital")
    tier = Tier.parse(str(raw["tier"]))
    name = raw.get("name")
    return EnterpriseRecord(
        id=rid,
        name=str(name) if name not in (None, "") else None,
        lon=lon,
        lat=lat,
        start_date=start,
        end_date=end,
        tier=tier,
        classification_code=str(raw["classification_code"]).strip(),
        registered_capital=capital,
        credit_rating=str(raw["credit_rating"]).strip(),
        property=str(raw["property"]).strip(),
        state=str(raw["state"]).strip(),
    )


def _iter_rows(source: TextIO, fmt: str) -> Iterable[tuple[int, dict | RowError]]:
    if fmt == "jsonl":
        for row_no, line in enumerate(source, start=1):
            if not line.strip():
                continue
            try:
                yield row_no, json.loads(line)
            except json.JSONDecodeError:
                yield row_no, RowError("unparseable json")
    else:
        reader = csv.DictReader(source)
        if reader.fieldnames is None:
            return
        for row_no, raw in enumerate(reader, start=1):
            yield row_no, raw


def parse_records(
    source: str | Path | TextIO,
    fmt: str | None = None,
) -> tuple[list[EnterpriseRecord], list[Rejection]]:
    """Parse a CSV or JSONL registration file.

    Valid rows become records in input order; invalid rows go to the rejection
    report with their row number and reason. An unreadable source raises.
    """
    close = False
    if isinstance(source, (str, Path)):
        path = Path(source)
        if fmt is None:
            fmt = "jsonl" if path.suffix in (".jsonl", ".ndjson") else "csv"
        source = open(path, "r", encoding="utf-8", newline="")
        close = True
    elif fmt is None:
        fmt = "csv"

    records: list[EnterpriseRecord] = []
    rejections: list[Rejection] = []
    seen_ids: set[str] = set()
    try:
        for row_no, raw in _iter_rows(source, fmt):
            if isinstance(raw, RowError):
                rejections.append(Rejection(row_no, str(raw)))
                continue
            try:
                rec = _parse_row(raw)
            except RowError as exc:
                rejections.append(Rejection(row_no, str(exc)))
                continue
            if rec.id in seen_ids:
                rejections.append(Rejection(row_no, "duplicate id"))
                continue
            seen_ids.add(rec.id)
            records.append(rec)
    finally:
        if close:
            source.close()
    return records, rejections


def parse_records_text(text: str, fmt: str = "csv"):
    return parse_records(io.StringIO(text), fmt=fmt)


def write_rejections(rejections: list[Rejection], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in rejections:
            fh.write(r.to_json() + "\n")


# ---------------------------------------------------------------------------
# Month-keyed activity index


def data_span(records: list[EnterpriseRecord]) -> tuple[Month, Month] | None:
    """Earliest start month through the latest start or end month."""
    if not records:
        return None
    lo = min(r.start_month() for r in records)
    hi = max(r.end_month() or r.start_month() for r in records)
    hi = max(hi, max(r.start_month() for r in records))
    return lo, hi


class MonthIndex:
    """Month-keyed view of which enterprise ids are active when.

    Backed by per-record activity intervals; the id list for a month is
    produced on demand, so indexing a century-long span stays cheap.
    """

    def __init__(self, records: list[EnterpriseRecord], span: tuple[Month, Month] | None = None):
        if span is None:
            span = data_span(records)
        self._records = records
        self._ids = [r.id for r in records]
        self._start = np.array([r.start_month().index for r in records], dtype=np.int64)
        end = [r.end_month() for r in records]
        self._end = np.array(
            [_OPEN_END if m is None else m.index for m in end], dtype=np.int64
        )
        self.span = span
        self.months: list[Month] = [] if span is None else month_range(*span)

    def active_mask(self, month: Month) -> np.ndarray:
        m = month.index
        return (self._start <= m) & (self._end >= m)

    def ids_for(self, month: Month) -> list[str]:
        mask = self.active_mask(month)
        return [self._ids[i] for i in np.nonzero(mask)[0]]

    def __getitem__(self, month: Month) -> list[str]:
        return self.ids_for(month)

    def __len__(self) -> int:
        return len(self.months)

    def materialize(self) -> dict[Month, list[str]]:
        return {m: self.ids_for(m) for m in self.months}


def reindex_by_month(
    records: list[EnterpriseRecord], span: tuple[Month, Month] | None = None
) -> MonthIndex:
    """Reorganize records into the month-keyed activity index."""
    return MonthIndex(records, span=span)


# ---------------------------------------------------------------------------
# Categorical vocabularies and one-hot encoding


@dataclass(frozen=True)
class Vocabulary:
    """Fixed category list plus a reserved trailing slot for unseen values."""

    values: tuple[str, ...]

    @classmethod
    def from_values(cls, values: Iterable[str]) -> "Vocabulary":
        return cls(tuple(sorted(set(values))))

    @property
    def size(self) -> int:
        return len(self.values) + 1

    def slot(self, value: str) -> int:
        try:
            return self.values.index(value)
        except ValueError:
            return len(self.values)

    def onehot(self, value: str) -> np.ndarray:
        vec = np.zeros(self.size)
        vec[self.slot(value)] = 1.0
        return vec

    @property
    def labels(self) -> tuple[str, ...]:
        return self.values + (OTHER_SLOT,)


@dataclass(frozen=True)
class Vocabularies:
    """One dictionary pass over the dataset fixes every categorical vocabulary.

    ``credit_rating`` keeps its configured order because its slot index doubles
    as the ordinal code used by the rating aggregates.
    """

    classification_code: Vocabulary
    credit_rating: Vocabulary
    property: Vocabulary
    state: Vocabulary

    CATEGORICAL_FIELDS = ("classification_code", "credit_rating", "property", "state")

    def for_field(self, field_name: str) -> Vocabulary:
        return getattr(self, field_name)


def build_vocabularies(
    records: list[EnterpriseRecord], credit_order: list[str] | None = None
) -> Vocabularies:
    if credit_order is not None:
        credit = Vocabulary(tuple(credit_order))
    else:
        credit = Vocabulary.from_values(r.credit_rating for r in records)
    return Vocabularies(
        classification_code=Vocabulary.from_values(r.classification_code for r in records),
        credit_rating=credit,
        property=Vocabulary.from_values(r.property for r in records),
        state=Vocabulary.from_values(r.state for r in records),
    )


def encode_categorical(record: EnterpriseRecord, vocabs: Vocabularies) -> dict[str, np.ndarray]:
    """One-hot encode each categorical field; unknown values land in the other slot."""
    return {
        name: vocabs.for_field(name).onehot(getattr(record, name))
        for name in Vocabularies.CATEGORICAL_FIELDS
    }


# ---------------------------------------------------------------------------
# Columnar view used by the vectorized aggregation paths


class RecordTable:
    """Columnar arrays for a record list; the bulk aggregation paths read these."""

    def __init__(self, records: list[EnterpriseRecord], vocabs: Vocabularies):
        self.records = records
        self.vocabs = vocabs
        self.ids = [r.id for r in records]
        self.by_id = {r.id: i for i, r in enumerate(records)}
        self.lon = np.array([r.lon for r in records], dtype=float)
        self.lat = np.array([r.lat for r in records], dtype=float)
        self.start = np.array([r.start_month().index for r in records], dtype=np.int64)
        self.end = np.array(
            [_OPEN_END if r.end_date is None else r.end_month().index for r in records],
            dtype=np.int64,
        )
        self.end_date_idx = self.end  # month index; _OPEN_END when still operating
        self.tier = np.array([TIERS.index(r.tier) for r in records], dtype=np.int64)
        self.capital = np.array([r.registered_capital for r in records], dtype=float)
        self.surviving_state = np.array(
            [r.state == SURVIVING_STATE for r in records], dtype=bool
        )
        self.slots = {
            name: np.array(
                [vocabs.for_field(name).slot(getattr(r, name)) for r in records],
                dtype=np.int64,
            )
            for name in Vocabularies.CATEGORICAL_FIELDS
        }

    def __len__(self) -> int:
        return len(self.records)

    def active_mask(self, month: Month) -> np.ndarray:
        m = month.index
        return (self.start <= m) & (self.end >= m)

    def active_between_mask(self, start: Month, end: Month) -> np.ndarray:
        return (self.start <= end.index) & (self.end >= start.index)


def _interval_sums(
    start: np.ndarray, end: np.ndarray, lo: int, n_months: int, weights: np.ndarray | None = None
) -> np.ndarray:
    """Per-month sum of weights over records active that month, via diff arrays."""
    acc = np.zeros(n_months + 1)
    s = np.clip(start - lo, 0, None)
    e = np.clip(end - lo, None, n_months - 1) + 1
    keep = (s < n_months) & (e > 0) & (s < e)
    w = np.ones(len(start)) if weights is None else weights
    np.add.at(acc, s[keep], w[keep])
    np.add.at(acc, e[keep], -w[keep])
    return np.cumsum(acc)[:n_months]


def _slot_month_counts(
    table: RecordTable, field_name: str, lo: int, n_months: int
) -> np.ndarray:
    """counts[slot, month] of active records per category slot."""
    vocab = table.vocabs.for_field(field_name)
    slots = table.slots[field_name]
    counts = np.zeros((vocab.size, n_months))
    for slot in range(vocab.size):
        sel = slots == slot
        if sel.any():
            counts[slot] = _interval_sums(table.start[sel], table.end[sel], lo, n_months)
    return counts


@dataclass
class MonthlySnapshot:
    """Per-month aggregate of all active enterprises."""

    month: Month
    active_counts: tuple[int, int, int]
    model_features: np.ndarray
    projection_features: np.ndarray | None = None

    @property
    def total(self) -> int:
        return int(sum(self.active_counts))


def build_monthly_series(
    index: MonthIndex,
    records: list[EnterpriseRecord],
    vocabs: Vocabularies | None = None,
    span: tuple[Month, Month] | None = None,
) -> list[MonthlySnapshot]:
    """Aggregate the indexed records into contiguous monthly snapshots.

    Categorical feature dimensions carry the modal share of that month's
    active records, capital carries log10(1 + mean), and the rating dimension
    carries the mean ordinal code.
    """
    span = span or index.span
    if span is None:
        return []
    if vocabs is None:
        vocabs = build_vocabularies(records)
    months = month_range(*span)
    lo, n_months = span[0].index, len(months)
    table = RecordTable(records, vocabs)

    d_span = data_span(records)
    if d_span is not None and (span[1] < d_span[0] or d_span[1] < span[0]):
        log.warning("configured span %s..%s outside data span %s..%s; counts will be zero",
                    span[0], span[1], d_span[0], d_span[1])

    tier_counts = np.zeros((3, n_months))
    for t in range(3):
        sel = table.tier == t
        if sel.any():
            tier_counts[t] = _interval_sums(table.start[sel], table.end[sel], lo, n_months)
    totals = tier_counts.sum(axis=0)

    modal = {}
    for name in ("classification_code", "property", "state"):
        counts = _slot_month_counts(table, name, lo, n_months)
        with np.errstate(invalid="ignore", divide="ignore"):
            modal[name] = np.where(totals > 0, counts.max(axis=0) / np.maximum(totals, 1), 0.0)

    capital_sum = _interval_sums(table.start, table.end, lo, n_months, table.capital)
    with np.errstate(invalid="ignore", divide="ignore"):
        capital_feat = np.where(
            totals > 0, np.log10(1.0 + capital_sum / np.maximum(totals, 1)), 0.0
        )

    credit_vocab = vocabs.credit_rating
    credit_slots = table.slots["credit_rating"]
    known = credit_slots < len(credit_vocab.values)
    known_counts = _interval_sums(table.start[known], table.end[known], lo, n_months)
    code_sum = _interval_sums(
        table.start[known], table.end[known], lo, n_months, credit_slots[known].astype(float)
    )
    with np.errstate(invalid="ignore", divide="ignore"):
        credit_feat = np.where(known_counts > 0, code_sum / np.maximum(known_counts, 1), 0.0)

    snapshots = []
    for j, m in enumerate(months):
        features = np.array([
            float(m.year),
            float(m.month),
            modal["classification_code"][j],
            capital_feat[j],
            credit_feat[j],
            modal["property"][j],
            modal["state"][j],
        ])
        snapshots.append(MonthlySnapshot(
            month=m,
            active_counts=(
                int(round(tier_counts[0, j])),
                int(round(tier_counts[1, j])),
                int(round(tier_counts[2, j])),
            ),
            model_features=features,
        ))
    return snapshots


def count_series(snapshots: list[MonthlySnapshot], which: str = "total") -> np.ndarray:
    """Monthly count series: 'total' or 'tier:<primary|secondary|tertiary>'."""
    if which == "total":
        return np.array([s.total for s in snapshots], dtype=float)
    if which.startswith("tier:"):
        name = which.split(":", 1)[1].upper()
        idx = [t.name for t in TIERS].index(name)
        return np.array([s.active_counts[idx] for s in snapshots], dtype=float)
    raise ValueError(f"unknown series selector: {which!r}")
