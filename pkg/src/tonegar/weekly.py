"""Market-cap-weighted weekly aggregation of firm-level sentiment growth.

Each filing's growth is weighted by the filing firm's market capitalization
on the filing date (daily source first, quarterly fallback).  Filings whose
capitalization cannot be resolved are excluded and recorded.  Weeks with no
eligible filings are gaps, never zeros.
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
from dataclasses import dataclass, field
from pathlib import Path

from .periods import Week, iter_weeks, week_of
from .sentiment import SentimentObservation

TONE = "tone"


class CapSource(enum.Enum):
    PRIMARY_DAILY = "daily"
    FALLBACK_QUARTERLY = "quarterly"


@dataclass(frozen=True)
class MarketCapRecord:
    firm_id: str
    date: dt.date
    price: float
    shares_outstanding: float
    source: CapSource

    def __post_init__(self) -> None:
        if self.price <= 0:
            raise ValueError(f"price must be positive, got {self.price}")
        if self.shares_outstanding <= 0:
            raise ValueError(f"shares_outstanding must be positive, got {self.shares_outstanding}")

    @property
    def cap(self) -> float:
        return self.price * self.shares_outstanding


@dataclass
class CapTable:
    """Daily (firm, date) quotes plus quarterly fallback ranges per firm."""

    daily: dict[tuple[str, dt.date], tuple[float, float]] = field(default_factory=dict)
    quarterly: dict[str, list[tuple[dt.date, dt.date, float, float]]] = field(default_factory=dict)

    @classmethod
    def from_files(cls, daily_path: str | Path, quarterly_path: str | Path) -> CapTable:
        table = cls()
        with Path(daily_path).open(newline="", encoding="utf-8") as handle:
            for row_no, row in enumerate(csv.DictReader(handle), start=2):
                price, shares = float(row["price"]), float(row["shares"])
                if price <= 0 or shares <= 0:
                    raise ValueError(f"{daily_path}: nonpositive price/shares at row {row_no}")
                table.daily[(row["firm_id"], dt.date.fromisoformat(row["date"]))] = (price, shares)
        with Path(quarterly_path).open(newline="", encoding="utf-8") as handle:
            for row_no, row in enumerate(csv.DictReader(handle), start=2):
                price, shares = float(row["price"]), float(row["shares"])
                if price <= 0 or shares <= 0:
                    raise ValueError(f"{quarterly_path}: nonpositive price/shares at row {row_no}")
                table.quarterly.setdefault(row["firm_id"], []).append(
                    (
                        dt.date.fromisoformat(row["quarter_start"]),
                        dt.date.fromisoformat(row["quarter_end"]),
                        price,
                        shares,
                    )
                )
        for ranges in table.quarterly.values():
            ranges.sort()
        return table


def resolve_cap(firm_id: str, filing_date: dt.date, caps: CapTable) -> MarketCapRecord | None:
    """Market cap on the filing date: daily quote first, else the quarterly
    range covering the date.  ``None`` when neither source has it."""
    quote = caps.daily.get((firm_id, filing_date))
    if quote is not None:
        return MarketCapRecord(firm_id, filing_date, quote[0], quote[1], CapSource.PRIMARY_DAILY)
    for start, end, price, shares in caps.quarterly.get(firm_id, ()):
        if start <= filing_date <= end:
            return MarketCapRecord(firm_id, filing_date, price, shares, CapSource.FALLBACK_QUARTERLY)
    return None


@dataclass(frozen=True)
class WeeklyIndexPoint:
    week: Week
    value: float
    n_firms: int
    total_weight: float


def aggregate_week(week: Week, entries: list[tuple[str, float, float]]) -> WeeklyIndexPoint:
    """Cap-weighted mean of per-filing growth values.

    ``entries`` are (firm_id, growth, cap) triples; at least one is
    required.  The sum order is fixed by sorting, so the value does not
    depend on input order.
    """
    if not entries:
        raise ValueError("aggregate_week requires at least one eligible observation")
    ordered = sorted(entries)
    total_weight = sum(cap for _, _, cap in ordered)
    value = sum(cap * growth for _, growth, cap in ordered) / total_weight
    return WeeklyIndexPoint(
        week=week,
        value=value,
        n_firms=len({firm for firm, _, _ in ordered}),
        total_weight=total_weight,
    )


@dataclass(frozen=True)
class CapFailure:
    doc_id: str
    firm_id: str
    filing_date: dt.date


@dataclass
class WeeklyIndex:
    category: str
    points: list[WeeklyIndexPoint]
    gaps: list[Week]
    failures: list[CapFailure]

    def as_series(self) -> dict[Week, float]:
        return {p.week: p.value for p in self.points}


def _growth_value(obs: SentimentObservation, category: str) -> float | None:
    if category == TONE:
        return obs.tone_growth
    if obs.growth is None:
        return None
    return obs.growth.get(category)


def build_index(
    observations: list[SentimentObservation],
    caps: CapTable,
    category: str = TONE,
) -> WeeklyIndex:
    """Weekly index over all observations with present growth and a resolvable cap."""
    per_week: dict[Week, list[tuple[str, float, float]]] = {}
    failures: list[CapFailure] = []
    for obs in sorted(observations, key=lambda o: (o.firm_id, o.doc_id)):
        growth = _growth_value(obs, category)
        if growth is None:
            continue
        cap_record = resolve_cap(obs.firm_id, obs.filing_date, caps)
        if cap_record is None:
            failures.append(CapFailure(obs.doc_id, obs.firm_id, obs.filing_date))
            continue
        per_week.setdefault(week_of(obs.filing_date), []).append((obs.firm_id, growth, cap_record.cap))

    points = [aggregate_week(week, entries) for week, entries in sorted(per_week.items())]
    gaps: list[Week] = []
    if points:
        emitted = {p.week for p in points}
        gaps = [w for w in iter_weeks(points[0].week, points[-1].week) if w not in emitted]
    return WeeklyIndex(category=category, points=points, gaps=gaps, failures=failures)


def write_weekly_index(index: WeeklyIndex, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["iso_year", "iso_week", "value", "n_firms"])
        for p in index.points:
            writer.writerow([p.week[0], p.week[1], repr(p.value), p.n_firms])


def read_weekly_series(path: str | Path) -> dict[Week, float]:
    """Read a weekly predictor file: iso_year, iso_week, value (extra columns ignored)."""
    series: dict[Week, float] = {}
    with Path(path).open(newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            series[(int(row["iso_year"]), int(row["iso_week"]))] = float(row["value"])
    return series
