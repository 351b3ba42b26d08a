"""Core domain types: calendar months, industry tiers, and enterprise records."""

from __future__ import annotations

import calendar
import datetime as dt
import re
from dataclasses import dataclass
from enum import Enum
from functools import total_ordering


@total_ordering
@dataclass(frozen=True)
class Month:
    """A calendar month; the canonical clock of the whole system."""

    year: int
    month: int

    def __post_init__(self):
        if not 1 <= self.month <= 12:
            raise ValueError(f"month out of range: {self.month}")

    @property
    def index(self) -> int:
        """Months since year 0, usable as an array index offset."""
        return self.year * 12 + (self.month - 1)

    @classmethod
    def from_index(cls, idx: int) -> "Month":
        return cls(idx // 12, idx % 12 + 1)

    @classmethod
    def of(cls, d: dt.date) -> "Month":
        return cls(d.year, d.month)

    @classmethod
    def parse(cls, text: str) -> "Month":
        """Parse 'YYYY-MM'."""
        match = re.fullmatch(r"(\d{4})-(\d{2})", text.strip())
        if match is None:
            raise ValueError(f"not a YYYY-MM month: {text!r}")
        return cls(int(match.group(1)), int(match.group(2)))

    def first_day(self) -> dt.date:
        return dt.date(self.year, self.month, 1)

    def last_day(self) -> dt.date:
        return dt.date(self.year, self.month, calendar.monthrange(self.year, self.month)[1])

    def plus(self, n: int) -> "Month":
        return Month.from_index(self.index + n)

    def __lt__(self, other: "Month") -> bool:
        return self.index < other.index

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"


def month_range(start: Month, end: Month) -> list[Month]:
    """Inclusive, contiguous range of months."""
    if end < start:
        raise ValueError(f"inverted month range {start}..{end}")
    return [Month.from_index(i) for i in range(start.index, end.index + 1)]


class Tier(Enum):
    """The three broad industry tiers every enterprise belongs to."""

    PRIMARY = "Primary"
    SECONDARY = "Secondary"
    TERTIARY = "Tertiary"

    @classmethod
    def parse(cls, text: str) -> "Tier":
        try:
            return cls(text.strip().capitalize())
        except ValueError:
            raise ValueError(f"unknown tier: {text!r}") from None


TIERS = (Tier.PRIMARY, Tier.SECONDARY, Tier.TERTIARY)

SURVIVING_STATE = "surviving"


@dataclass(frozen=True)
class EnterpriseRecord:
    """One registration row.

    ``end_date`` of None means the enterprise was still operating at dataset
    export time, so its activity extends to the configured span end.
    """

    id: str
    name: str | None
    lon: float
    lat: float
    start_date: dt.date
    end_date: dt.date | None
    tier: Tier
    classification_code: str
    registered_capital: float
    credit_rating: str
    property: str
    state: str

    def active_in(self, month: Month) -> bool:
        """Active iff the lifespan intersects the month."""
        if self.start_date > month.last_day():
            return False
        return self.end_date is None or self.end_date >= month.first_day()

    def active_between(self, start: Month, end: Month) -> bool:
        """Active in at least one month of the inclusive range."""
        if self.start_date > end.last_day():
            return False
        return self.end_date is None or self.end_date >= start.first_day()

    def start_month(self) -> Month:
        return Month.of(self.start_date)

    def end_month(self) -> Month | None:
        return None if self.end_date is None else Month.of(self.end_date)
