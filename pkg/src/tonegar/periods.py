"""Calendar helpers: fiscal quarters and ISO weeks.

Quarters are ``(year, quarter)`` tuples with quarter in 1..4; weeks are
ISO-8601 ``(iso_year, iso_week)`` tuples (Monday-start weeks).
"""

from __future__ import annotations

import datetime as dt
from collections.abc import Iterator

Quarter = tuple[int, int]
Week = tuple[int, int]

_QUARTER_END_MONTH_DAY = {1: (3, 31), 2: (6, 30), 3: (9, 30), 4: (12, 31)}


def parse_quarter(label: str) -> Quarter:
    """Parse a quarter label like ``2001Q3`` or ``2001-Q3``."""
    text = label.strip().upper().replace("-", "")
    year_part, _, q_part = text.partition("Q")
    if not q_part:
        raise ValueError(f"not a quarter label: {label!r}")
    year, quarter = int(year_part), int(q_part)
    if quarter not in (1, 2, 3, 4):
        raise ValueError(f"quarter out of range in {label!r}")
    return (year, quarter)


def format_quarter(quarter: Quarter) -> str:
    return f"{quarter[0]}Q{quarter[1]}"


def quarter_of(date: dt.date) -> Quarter:
    return (date.year, (date.month - 1) // 3 + 1)


def add_quarters(quarter: Quarter, n: int) -> Quarter:
    year, q = quarter
    idx = year * 4 + (q - 1) + n
    return (idx // 4, idx % 4 + 1)


def next_quarter(quarter: Quarter) -> Quarter:
    return add_quarters(quarter, 1)


def quarter_end(quarter: Quarter) -> dt.date:
    year, q = quarter
    month, day = _QUARTER_END_MONTH_DAY[q]
    return dt.date(year, month, day)


def week_of(date: dt.date) -> Week:
    iso = date.isocalendar()
    return (iso[0], iso[1])


def week_monday(week: Week) -> dt.date:
    return dt.date.fromisocalendar(week[0], week[1], 1)


def week_sunday(week: Week) -> dt.date:
    return dt.date.fromisocalendar(week[0], week[1], 7)


def add_weeks(week: Week, n: int) -> Week:
    return week_of(week_monday(week) + dt.timedelta(weeks=n))


def weeks_between(first: Week, last: Week) -> int:
    """Number of week steps from ``first`` to ``last`` (negative if reversed)."""
    return (week_monday(last) - week_monday(first)).days // 7


def iter_weeks(first: Week, last: Week) -> Iterator[Week]:
    """All ISO weeks from ``first`` to ``last`` inclusive (tuples sort chronologically)."""
    week = first
    while week <= last:
        yield week
        week = add_weeks(week, 1)


def last_week_ending_by(date: dt.date) -> Week:
    """Latest ISO week whose Sunday falls on or before ``date``."""
    week = week_of(date)
    if week_sunday(week) > date:
        week = add_weeks(week, -1)
    return week
