"""Dictionary sentiment ratios and year-over-year sentiment growth.

Each filing gets one ratio per dictionary category (category words over
total words).  Growth compares a filing with its prior-year counterpart in
the same fiscal quarter and of the same form kind; tone growth is positive
growth minus negative growth.
"""

from __future__ import annotations

import csv
import datetime as dt
import logging
from dataclasses import dataclass, replace
from pathlib import Path

from .corpus import FilingRecord, FormKind
from .text import tokenize

log = logging.getLogger(__name__)

CATEGORIES = ("positive", "negative", "uncertainty", "litigious")
WORD_COLUMN = "word"


@dataclass(frozen=True)
class Lexicon:
    categories: dict[str, frozenset[str]]
    ignored_columns: tuple[str, ...] = ()

    def words(self, category: str) -> frozenset[str]:
        return self.categories[category]


def load_lexicon(path: str | Path) -> Lexicon:
    """Load a master-dictionary style file: a word column plus one flag
    column per category, nonzero flag meaning membership.

    Columns other than the word and the known categories are ignored (with
    a single warning naming them).  An empty required category is fatal.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        fields = reader.fieldnames or []
        by_lower = {name.strip().lower(): name for name in fields}
        if WORD_COLUMN not in by_lower:
            raise ValueError(f"lexicon file {path} has no '{WORD_COLUMN}' column")
        category_cols = {cat: by_lower[cat] for cat in CATEGORIES if cat in by_lower}
        missing = [cat for cat in CATEGORIES if cat not in category_cols]
        if missing:
            raise ValueError(f"lexicon file {path} is missing categories: {', '.join(missing)}")
        ignored = tuple(
            name for name in fields if name.strip().lower() not in (WORD_COLUMN, *CATEGORIES)
        )
        if ignored:
            log.warning("ignoring %d unrecognized lexicon columns: %s", len(ignored), ", ".join(ignored))

        sets: dict[str, set[str]] = {cat: set() for cat in CATEGORIES}
        for row in reader:
            word = (row[by_lower[WORD_COLUMN]] or "").strip().casefold()
            if not word:
                continue
            for cat, col in category_cols.items():
                if _flag_is_set(row.get(col)):
                    sets[cat].add(word)

    empty = [cat for cat in CATEGORIES if not sets[cat]]
    if empty:
        raise ValueError(f"lexicon file {path} has no words in: {', '.join(empty)}")
    return Lexicon(
        categories={cat: frozenset(words) for cat, words in sets.items()},
        ignored_columns=ignored,
    )


def _flag_is_set(value: str | None) -> bool:
    if value is None:
        return False
    value = value.strip()
    if not value:
        return False
    try:
        return float(value) != 0.0
    except ValueError:
        return False


def sentiment_ratios(text: str, lexicon: Lexicon) -> dict[str, float]:
    """Per-category fraction of tokens that are dictionary words."""
    tokens = tokenize(text)
    if not tokens:
        raise ValueError("cannot compute sentiment ratios of a text with no tokens")
    total = len(tokens)
    ratios = {}
    for cat, words in lexicon.categories.items():
        ratios[cat] = sum(1 for t in tokens if t in words) / total
    return ratios


@dataclass(frozen=True)
class SentimentObservation:
    doc_id: str
    firm_id: str
    filing_date: dt.date
    fiscal_year: int
    fiscal_quarter: int
    form: FormKind
    ratios: dict[str, float]
    growth: dict[str, float] | None = None
    tone_growth: float | None = None

    def sort_key(self) -> tuple:
        return (self.filing_date, self.doc_id)


def match_prior(
    current: SentimentObservation, history: list[SentimentObservation]
) -> SentimentObservation | None:
    """Find the prior-year baseline observation for ``current``.

    The baseline must share the fiscal quarter and the form kind and come
    from the previous fiscal year.  With multiple same-type filings in the
    quarter on both sides, filings pair by chronological rank (earliest to
    earliest and so on); when the current year has more filings than the
    prior year, later ones reuse the last available baseline.  Returns
    ``None`` when no eligible baseline exists.  ``history`` must contain
    only same-firm observations strictly before ``current``; its order does
    not matter.
    """
    rank = sum(
        1
        for h in history
        if h.fiscal_year == current.fiscal_year
        and h.fiscal_quarter == current.fiscal_quarter
        and h.form is current.form
    )
    prior_group = sorted(
        (
            h
            for h in history
            if h.fiscal_year == current.fiscal_year - 1
            and h.fiscal_quarter == current.fiscal_quarter
            and h.form is current.form
        ),
        key=SentimentObservation.sort_key,
    )
    if not prior_group:
        return None
    return prior_group[min(rank, len(prior_group) - 1)]


def sentiment_growth(
    current_ratios: dict[str, float], baseline_ratios: dict[str, float]
) -> dict[str, float]:
    """Year-over-year relative change per category; zero-baseline categories are omitted."""
    growth = {}
    for cat, current in current_ratios.items():
        baseline = baseline_ratios.get(cat)
        if baseline is not None and baseline > 0.0:
            growth[cat] = (current - baseline) / baseline
    return growth


def tone_growth(growth: dict[str, float]) -> float | None:
    """Positive growth minus negative growth, absent unless both are present."""
    if "positive" in growth and "negative" in growth:
        return growth["positive"] - growth["negative"]
    return None


def observe(record: FilingRecord, lexicon: Lexicon) -> SentimentObservation:
    """Ratios for one filing, computed on the narrative text when extracted."""
    return SentimentObservation(
        doc_id=record.doc_id,
        firm_id=record.firm_id,
        filing_date=record.filing_date,
        fiscal_year=record.fiscal_year,
        fiscal_quarter=record.fiscal_quarter,
        form=record.form,
        ratios=sentiment_ratios(record.text, lexicon),
    )


def build_observations(records: list[FilingRecord], lexicon: Lexicon) -> list[SentimentObservation]:
    """Per-filing observations with growth filled in from prior-year matches.

    Firms are independent; within a firm the history is replayed in
    (filing_date, doc_id) order so the result does not depend on the input
    order of ``records``.
    """
    by_firm: dict[str, list[FilingRecord]] = {}
    for record in records:
        by_firm.setdefault(record.firm_id, []).append(record)

    observations: list[SentimentObservation] = []
    for firm_id in sorted(by_firm):
        firm_records = sorted(by_firm[firm_id], key=lambda r: (r.filing_date, r.doc_id))
        history: list[SentimentObservation] = []
        for record in firm_records:
            obs = observe(record, lexicon)
            baseline = match_prior(obs, history)
            if baseline is not None:
                growth = sentiment_growth(obs.ratios, baseline.ratios)
                obs = replace(obs, growth=growth, tone_growth=tone_growth(growth))
            history.append(obs)
            observations.append(obs)
    return observations
