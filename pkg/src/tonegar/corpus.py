"""Filing ingestion and the staged corpus filtration pipeline.

The pipeline keeps only standard annual/quarterly disclosures, extracts the
three narrative sections used for sentiment (risk factors, management's
discussion, market risk), enforces a minimum word count on the extracted
narrative, and removes redundant or over-frequent filings.  Stage-by-stage
counts are collected in a :class:`FiltrationReport`.
"""

from __future__ import annotations

import csv
import dataclasses
import datetime as dt
import enum
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .text import count_words

DEFAULT_WORD_FLOOR = 610
MAX_FILINGS_PER_FIRM_YEAR = 4

METADATA_COLUMNS = (
    "firm_id",
    "form_type",
    "filing_date",
    "fiscal_year",
    "fiscal_quarter",
    "text_path",
)

STAGE_INITIAL = "initial"
STAGE_STANDARD_FORMS = "standard_forms"
STAGE_SECTIONS_EXTRACTED = "sections_extracted"
STAGE_WORD_FLOOR = "word_floor"
STAGE_DEDUP_CAPPED = "dedup_capped"

STAGES = (
    STAGE_INITIAL,
    STAGE_STANDARD_FORMS,
    STAGE_SECTIONS_EXTRACTED,
    STAGE_WORD_FLOOR,
    STAGE_DEDUP_CAPPED,
)


class FormKind(enum.Enum):
    TEN_K = "10-K"
    TEN_Q = "10-Q"
    OTHER = "other"


def classify_form(label: str) -> FormKind:
    """Map a raw form label to its kind.

    Only the plain annual and quarterly forms count as standard; every
    variant (amendments ``-A``, transition reports ``-T``, small-business
    and legacy formats such as ``10-K405`` or ``10-QSB``) is ``OTHER``.
    """
    normalized = label.strip().upper()
    if normalized == "10-K":
        return FormKind.TEN_K
    if normalized == "10-Q":
        return FormKind.TEN_Q
    return FormKind.OTHER


@dataclass(frozen=True)
class FilingRecord:
    doc_id: str
    firm_id: str
    form_label: str
    form: FormKind
    filing_date: dt.date
    fiscal_year: int
    fiscal_quarter: int
    raw_text: str
    extracted_text: str | None = None
    word_count: int = 0

    def __post_init__(self) -> None:
        if self.fiscal_quarter not in (1, 2, 3, 4):
            raise ValueError(f"fiscal_quarter must be 1..4, got {self.fiscal_quarter}")

    @property
    def text(self) -> str:
        """The text the word count describes: extracted narrative if present."""
        return self.extracted_text if self.extracted_text is not None else self.raw_text


def make_record(
    doc_id: str,
    firm_id: str,
    form_label: str,
    filing_date: dt.date,
    fiscal_year: int,
    fiscal_quarter: int,
    raw_text: str,
    extracted_text: str | None = None,
) -> FilingRecord:
    """Build a record with its word count computed from the governing text."""
    text = extracted_text if extracted_text is not None else raw_text
    return FilingRecord(
        doc_id=doc_id,
        firm_id=firm_id,
        form_label=form_label,
        form=classify_form(form_label),
        filing_date=filing_date,
        fiscal_year=fiscal_year,
        fiscal_quarter=fiscal_quarter,
        raw_text=raw_text,
        extracted_text=extracted_text,
        word_count=count_words(text),
    )


@dataclass(frozen=True)
class RowError:
    row: int
    doc_ref: str
    reason: str


@dataclass
class LoadResult:
    records: list[FilingRecord]
    errors: list[RowError]


def load_corpus(metadata_path: str | Path, text_root: str | Path) -> LoadResult:
    """Read a delimited metadata file and the filing texts it references.

    Malformed rows and missing text files become :class:`RowError` entries
    rather than silent drops; a missing metadata file is fatal.
    """
    metadata_path = Path(metadata_path)
    text_root = Path(text_root)
    if not metadata_path.is_file():
        raise FileNotFoundError(f"metadata file not found: {metadata_path}")

    records: list[FilingRecord] = []
    errors: list[RowError] = []
    with metadata_path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        missing = [c for c in METADATA_COLUMNS if c not in (reader.fieldnames or ())]
        if missing:
            raise ValueError(f"metadata is missing columns: {', '.join(missing)}")
        for row_no, row in enumerate(reader, start=2):
            ref = (row.get("text_path") or f"row {row_no}").strip()
            try:
                filing_date = dt.date.fromisoformat(row["filing_date"].strip())
                fiscal_year = int(row["fiscal_year"])
                fiscal_quarter = int(row["fiscal_quarter"])
                text_file = text_root / row["text_path"].strip()
                raw_text = text_file.read_text(encoding="utf-8")
            except FileNotFoundError:
                errors.append(RowError(row_no, ref, "text file not found"))
                continue
            except (KeyError, ValueError) as exc:
                errors.append(RowError(row_no, ref, f"malformed row: {exc}"))
                continue
            try:
                records.append(
                    make_record(
                        doc_id=row["text_path"].strip(),
                        firm_id=row["firm_id"].strip(),
                        form_label=row["form_type"].strip(),
                        filing_date=filing_date,
                        fiscal_year=fiscal_year,
                        fiscal_quarter=fiscal_quarter,
                        raw_text=raw_text,
                    )
                )
            except ValueError as exc:
                errors.append(RowError(row_no, ref, str(exc)))
    return LoadResult(records=records, errors=errors)


def write_manifest(records: list[FilingRecord], path: str | Path) -> None:
    """Write records back out in the metadata format (text_path = doc_id)."""
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(METADATA_COLUMNS)
        for r in records:
            writer.writerow(
                [
                    r.firm_id,
                    r.form_label,
                    r.filing_date.isoformat(),
                    r.fiscal_year,
                    r.fiscal_quarter,
                    r.doc_id,
                ]
            )


# --- section extraction -------------------------------------------------

# Item and part headers are matched at line starts after newline
# normalization; a section runs to the next item/part header or to the end
# of the document.  Patterns are module-level so callers can tighten them.
ITEM_HEADER_RE = re.compile(r"^[ \t]*item\s+(\d{1,2})\s*([a-z])?\s*[.:)\-]?", re.IGNORECASE | re.MULTILINE)
PART_HEADER_RE = re.compile(r"^[ \t]*part\s+(iv|iii|ii|i)\b", re.IGNORECASE | re.MULTILINE)

TEN_K_ITEMS = frozenset({"1a", "7", "7a"})
# Quarterly reports: risk factors sit in part II, the management discussion
# and market risk items in part I.  Without part markers the item numbers
# alone decide.
TEN_Q_ITEMS_BY_PART = {None: frozenset({"1a", "2", "3"}), "i": frozenset({"2", "3"}), "ii": frozenset({"1a"})}


def _normalize_newlines(text: str) -> str:
    return text.replace("\r\n", "\n").replace("\r", "\n")


def extract_sections(record: FilingRecord) -> str | None:
    """Extract the narrative sections of a standard filing.

    Returns the concatenated section bodies in document order, or ``None``
    when no target section header is found.  Header lines themselves are
    not part of the output.
    """
    if record.form is FormKind.OTHER:
        raise ValueError(f"section extraction applies to standard forms only, got {record.form_label!r}")
    return extract_sections_text(record.raw_text, record.form)


def extract_sections_text(raw_text: str, form: FormKind) -> str | None:
    text = _normalize_newlines(raw_text)
    boundaries: list[tuple[int, str, str | None]] = []  # (pos, kind, item label)
    for m in ITEM_HEADER_RE.finditer(text):
        label = (m.group(1) + (m.group(2) or "")).lower()
        boundaries.append((m.start(), "item", label))
    for m in PART_HEADER_RE.finditer(text):
        boundaries.append((m.start(), "part", m.group(1).lower()))
    boundaries.sort(key=lambda b: b[0])

    has_parts = any(kind == "part" for _, kind, _ in boundaries)
    bodies: list[str] = []
    found_target = False
    current_part: str | None = None
    for i, (pos, kind, label) in enumerate(boundaries):
        if kind == "part":
            current_part = label
            continue
        if form is FormKind.TEN_K:
            is_target = label in TEN_K_ITEMS
        else:
            part_key = current_part if has_parts else None
            is_target = label in TEN_Q_ITEMS_BY_PART.get(part_key, frozenset())
        if not is_target:
            continue
        found_target = True
        end = boundaries[i + 1][0] if i + 1 < len(boundaries) else len(text)
        line_end = text.find("\n", pos)
        if line_end == -1 or line_end >= end:
            continue  # header with no body before the next boundary
        body = text[line_end + 1 : end].strip()
        if body:
            bodies.append(body)

    if not found_target:
        return None
    return "\n".join(bodies)


# --- filter stages ------------------------------------------------------


def filter_form_types(records: list[FilingRecord]) -> tuple[list[FilingRecord], list[FilingRecord]]:
    """Keep only standard 10-K / 10-Q filings."""
    kept = [r for r in records if r.form is not FormKind.OTHER]
    dropped = [r for r in records if r.form is FormKind.OTHER]
    return kept, dropped


def extract_all_sections(records: list[FilingRecord]) -> tuple[list[FilingRecord], list[FilingRecord]]:
    """Attach extracted narrative (recomputing word counts); drop filings without one.

    Records that already carry an extraction are passed through unchanged,
    which makes the stage idempotent.
    """
    kept: list[FilingRecord] = []
    dropped: list[FilingRecord] = []
    for r in records:
        if r.extracted_text is not None:
            kept.append(r)
            continue
        extracted = extract_sections(r)
        if extracted is None:
            dropped.append(r)
        else:
            kept.append(
                dataclasses.replace(r, extracted_text=extracted, word_count=count_words(extracted))
            )
    return kept, dropped


def apply_word_floor(
    records: list[FilingRecord], floor: int = DEFAULT_WORD_FLOOR
) -> tuple[list[FilingRecord], list[FilingRecord]]:
    """Drop filings whose word count falls below ``floor`` (exactly ``floor`` is kept)."""
    kept = [r for r in records if r.word_count >= floor]
    dropped = [r for r in records if r.word_count < floor]
    return kept, dropped


def dedup_and_cap(records: list[FilingRecord]) -> tuple[list[FilingRecord], list[tuple[FilingRecord, str]]]:
    """Remove same-day duplicates, then firm-years with excessive filings.

    A duplicate is a same-firm, same-day filing of the same form kind; the
    lexicographically first ``doc_id`` is the surviving representative, so a
    10-K and a 10-Q filed the same day both survive.  Any firm-year left
    with more than four filings after deduplication is removed entirely.
    Output order is canonical: (firm_id, filing_date, doc_id).
    """
    dropped: list[tuple[FilingRecord, str]] = []
    representative: dict[tuple[str, dt.date, FormKind], FilingRecord] = {}
    for r in sorted(records, key=lambda r: (r.firm_id, r.filing_date, r.doc_id)):
        key = (r.firm_id, r.filing_date, r.form)
        if key in representative:
            dropped.append((r, "same_day_duplicate"))
        else:
            representative[key] = r

    deduped = sorted(representative.values(), key=lambda r: (r.firm_id, r.filing_date, r.doc_id))
    per_firm_year = Counter((r.firm_id, r.filing_date.year) for r in deduped)
    kept: list[FilingRecord] = []
    for r in deduped:
        if per_firm_year[(r.firm_id, r.filing_date.year)] > MAX_FILINGS_PER_FIRM_YEAR:
            dropped.append((r, "over_frequent_firm_year"))
        else:
            kept.append(r)
    return kept, dropped


@dataclass
class FiltrationReport:
    stage_counts: list[tuple[str, int]] = field(default_factory=list)
    drop_reasons: dict[str, Counter] = field(default_factory=dict)

    def count_after(self, stage: str) -> int:
        for name, count in self.stage_counts:
            if name == stage:
                return count
        raise KeyError(stage)

    def to_text(self) -> str:
        """One stage per line: name, count."""
        return "\n".join(f"{name}\t{count}" for name, count in self.stage_counts) + "\n"


def run_filtration(
    records: list[FilingRecord], word_floor: int = DEFAULT_WORD_FLOOR
) -> tuple[list[FilingRecord], FiltrationReport]:
    """Run the four filter stages in order and report per-stage counts."""
    report = FiltrationReport()
    report.stage_counts.append((STAGE_INITIAL, len(records)))

    kept, dropped_forms = filter_form_types(records)
    report.stage_counts.append((STAGE_STANDARD_FORMS, len(kept)))
    report.drop_reasons[STAGE_STANDARD_FORMS] = Counter(
        f"nonstandard_form:{r.form_label.strip().upper()}" for r in dropped_forms
    )

    kept, dropped_extract = extract_all_sections(kept)
    report.stage_counts.append((STAGE_SECTIONS_EXTRACTED, len(kept)))
    report.drop_reasons[STAGE_SECTIONS_EXTRACTED] = Counter(
        "no_sections_found" for _ in dropped_extract
    )

    kept, dropped_floor = apply_word_floor(kept, floor=word_floor)
    report.stage_counts.append((STAGE_WORD_FLOOR, len(kept)))
    report.drop_reasons[STAGE_WORD_FLOOR] = Counter("below_word_floor" for _ in dropped_floor)

    kept, dropped_dedup = dedup_and_cap(kept)
    report.stage_counts.append((STAGE_DEDUP_CAPPED, len(kept)))
    report.drop_reasons[STAGE_DEDUP_CAPPED] = Counter(reason for _, reason in dropped_dedup)

    return kept, report
