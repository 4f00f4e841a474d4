"""Synthetic corpus and data generator with a ground-truth manifest.

Documents carry dictionary words planted at controlled rates inside the
narrative sections, so the generator knows every ratio, growth rate, and
weekly index value the pipeline should reproduce, plus the exact count each
filtration stage should report.  A weekly-level data generating process
(tone index, uninformative benchmark, GDP whose lower tail loads on tone)
supports end-to-end forecast evaluation without the corpus layer.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .backtest import write_gdp_series, write_recession_flags
from .corpus import STAGES
from .periods import (
    Quarter,
    Week,
    add_quarters,
    add_weeks,
    iter_weeks,
    last_week_ending_by,
    quarter_end,
    quarter_of,
    week_of,
)

NEUTRAL_WORDS = (
    "company operations quarter revenue results period products customers "
    "markets business segment flow capital expenses general administrative "
    "total compared prior primarily related offset partially amounts balance "
    "statements notes fiscal interim current deferred income taxes property "
    "equipment intangible assets liabilities equity shares outstanding during "
    "within across under over certain various respective approximately"
).split()

CATEGORY_WORDS = {
    "positive": ("achieve", "gain", "improve", "strong", "favorable", "benefit"),
    "negative": ("loss", "decline", "adverse", "impairment", "deteriorate", "weak"),
    "uncertainty": ("may", "uncertain", "approximate", "fluctuate", "possibly"),
    "litigious": ("lawsuit", "litigation", "plaintiff", "settlement"),
}

SENTINEL = "zqboilerplatezq"

BASE_RATES = {"positive": 0.020, "negative": 0.020, "uncertainty": 0.010, "litigious": 0.005}


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 1234
    n_firms: int = 10
    start_year: int = 2000
    n_years: int = 6
    tokens_per_filing: int = 900
    cycle_scale: float = 0.35
    negative_rate_boost: float = 1.0
    boost_fiscal_year: int | None = None


@dataclass
class TrueFiling:
    doc_id: str
    firm_id: str
    form_label: str
    filing_date: dt.date
    fiscal_year: int
    fiscal_quarter: int
    tokens: int
    counts: dict[str, int]
    cap: float | None  # None = unresolvable
    cap_source: str | None
    survives: bool = False  # reaches the final filtered sample

    def ratios(self) -> dict[str, float]:
        return {cat: self.counts[cat] / self.tokens for cat in CATEGORY_WORDS}


@dataclass
class GroundTruth:
    seed: int
    stage_counts: dict[str, int] = field(default_factory=dict)
    filings: list[TrueFiling] = field(default_factory=list)
    weekly_index: dict[Week, float] = field(default_factory=dict)
    cap_failures: list[str] = field(default_factory=list)
    observations: dict[str, dict] = field(default_factory=dict)  # doc_id -> growth info

    def manifest(self) -> dict:
        return {
            "seed": self.seed,
            "stage_counts": self.stage_counts,
            "weekly_index": [[w[0], w[1], v] for w, v in sorted(self.weekly_index.items())],
            "cap_failures": sorted(self.cap_failures),
            "n_filings": len(self.filings),
        }


@dataclass
class _Spec:
    """One planned filing before text rendering."""

    firm_id: str
    form_label: str
    filing_date: dt.date
    fiscal_year: int
    fiscal_quarter: int
    tokens: int
    headerless: bool = False


def _quarter_cycle(config: SynthConfig, rng: np.random.Generator) -> dict[Quarter, float]:
    """Smooth latent macro mood per fiscal quarter, centered at zero."""
    cycle: dict[Quarter, float] = {}
    level = 0.0
    for i in range(4 * config.n_years):
        level = 0.75 * level + float(rng.normal(scale=config.cycle_scale))
        cycle[(config.start_year + i // 4, i % 4 + 1)] = level
    return cycle


def _category_rates(config: SynthConfig, quarter: Quarter, cycle: dict[Quarter, float]) -> dict[str, float]:
    """Planted word rates: pessimism rises and optimism falls with a low cycle."""
    level = cycle.get(quarter, 0.0)
    rates = {
        "positive": BASE_RATES["positive"] * float(np.exp(0.5 * level)),
        "negative": BASE_RATES["negative"] * float(np.exp(-0.8 * level)),
        "uncertainty": BASE_RATES["uncertainty"] * float(np.exp(-0.3 * level)),
        "litigious": BASE_RATES["litigious"],
    }
    if config.boost_fiscal_year is not None and quarter[0] == config.boost_fiscal_year:
        rates["negative"] *= config.negative_rate_boost
    return rates


def _body_tokens(total: int, counts: dict[str, int], rng: np.random.Generator) -> list[str]:
    tokens: list[str] = []
    for cat, count in counts.items():
        words = CATEGORY_WORDS[cat]
        tokens.extend(words[i % len(words)] for i in range(count))
    fill = total - len(tokens)
    tokens.extend(str(w) for w in np.array(NEUTRAL_WORDS)[rng.integers(0, len(NEUTRAL_WORDS), size=fill)])
    order = rng.permutation(len(tokens))
    return [tokens[i] for i in order]


def _wrap(tokens: list[str], per_line: int = 12) -> str:
    lines = [" ".join(tokens[i : i + per_line]) for i in range(0, len(tokens), per_line)]
    return "\n".join(lines)


def _document(form_label: str, tokens: list[str], headerless: bool = False) -> str:
    """Assemble a filing: sentinel-bearing boilerplate around the target sections."""
    n = len(tokens)
    a, b = (2 * n) // 5, (4 * n) // 5
    part1, part2, part3 = tokens[:a], tokens[a:b], tokens[b:]
    preamble = f"{SENTINEL} cover page {SENTINEL} table of contents {SENTINEL}"
    trailer = f"signatures {SENTINEL} exhibits {SENTINEL}"
    if headerless:
        return "\n".join([preamble, _wrap(part1), _wrap(part2), _wrap(part3), trailer])
    if form_label.upper().startswith("10-K"):
        return "\n".join(
            [
                preamble,
                "Item 1. Business",
                f"{SENTINEL} overview {SENTINEL}",
                "Item 1A. Risk Factors",
                _wrap(part1),
                "Item 7. Management Discussion and Analysis",
                _wrap(part2),
                "Item 7A. Market Risk Disclosures",
                _wrap(part3),
                "Item 8. Financial Statements",
                trailer,
            ]
        )
    return "\n".join(
        [
            preamble,
            "Part I. Financial Information",
            "Item 1. Financial Statements",
            f"{SENTINEL} tables {SENTINEL}",
            "Item 2. Management Discussion and Analysis",
            _wrap(part1),
            "Item 3. Market Risk Disclosures",
            _wrap(part2),
            "Part II. Other Information",
            "Item 1A. Risk Factors",
            _wrap(part3),
            "Item 2. Unregistered Sales",
            f"{SENTINEL} none {SENTINEL}",
            trailer,
        ]
    )


def _regular_schedule(config: SynthConfig, rng: np.random.Generator) -> list[_Spec]:
    """Firms filing 10-Qs in Q1-Q3 and a 10-K for Q4 early the next year."""
    specs: list[_Spec] = []
    for f in range(config.n_firms):
        firm = f"F{f:03d}"
        lag_weeks = int(rng.integers(2, 7))
        for year in range(config.start_year, config.start_year + config.n_years):
            for quarter in (1, 2, 3, 4):
                form = "10-K" if quarter == 4 else "10-Q"
                date = quarter_end((year, quarter)) + dt.timedelta(
                    weeks=lag_weeks, days=int(rng.integers(0, 5))
                )
                specs.append(
                    _Spec(
                        firm_id=firm,
                        form_label=form,
                        filing_date=date,
                        fiscal_year=year,
                        fiscal_quarter=quarter,
                        tokens=config.tokens_per_filing + int(rng.integers(-80, 81)),
                    )
                )
    return specs


def _engineered_cases(config: SynthConfig) -> list[_Spec]:
    y0 = config.start_year
    base = config.tokens_per_filing
    cases: list[_Spec] = []

    def spec(firm, form, date, fy, fq, tokens=base, **kw):
        cases.append(_Spec(firm, form, date, fy, fq, tokens, **kw))

    # Nonstandard forms: dropped at the form-type stage.
    spec("XNONSTD", "10-K-A", dt.date(y0 + 1, 3, 10), y0, 4)
    spec("XNONSTD", "10-QSB", dt.date(y0 + 1, 5, 12), y0 + 1, 1)
    spec("XNONSTD", "10-KT", dt.date(y0 + 1, 7, 9), y0 + 1, 2)
    spec("XNONSTD", "10-K405", dt.date(y0 + 2, 3, 11), y0 + 1, 4)

    # No extractable sections.
    spec("XNOHEAD", "10-Q", dt.date(y0 + 1, 5, 20), y0 + 1, 1, headerless=True)

    # Word-floor boundary: 609 drops, 610 stays.
    spec("XSHORT", "10-Q", dt.date(y0 + 1, 5, 21), y0 + 1, 1, tokens=609)
    spec("XFLOOR", "10-Q", dt.date(y0 + 1, 5, 22), y0 + 1, 1, tokens=610)

    # Same-day duplicate pair (same form): one survives.
    spec("XDUP", "10-Q", dt.date(y0 + 1, 5, 23), y0 + 1, 1)
    spec("XDUP", "10-Q", dt.date(y0 + 1, 5, 23), y0 + 1, 1)
    spec("XDUP", "10-Q", dt.date(y0 + 1, 8, 14), y0 + 1, 2)

    # Same-day 10-K + 10-Q: both survive (different form kinds).
    spec("XPAIR", "10-K", dt.date(y0 + 1, 11, 10), y0 + 1, 3)
    spec("XPAIR", "10-Q", dt.date(y0 + 1, 11, 10), y0 + 1, 3)

    # Five standard filings inside one calendar year: the firm-year is removed.
    for month, day, fq in [(2, 5, 1), (4, 20, 1), (6, 15, 2), (9, 10, 3), (12, 5, 4)]:
        spec("XFREQ", "10-Q", dt.date(y0 + 2, month, day), y0 + 2, fq)

    return cases


def _cap_regime(firm_id: str) -> str:
    """Deterministic per-firm market data coverage: daily, quarterly fallback, or none."""
    if firm_id == "XPAIR":
        return "quarterly"
    if firm_id.startswith("F"):
        index = int(firm_id[1:])
        if index % 5 == 3:
            return "quarterly"
        if index % 7 == 4:
            return "missing"
    return "daily"


def generate_corpus(config: SynthConfig, outdir: str | Path) -> GroundTruth:
    """Write a synthetic corpus plus cap/GDP/benchmark files and the truth manifest."""
    outdir = Path(outdir)
    (outdir / "texts").mkdir(parents=True, exist_ok=True)
    seed_root = np.random.SeedSequence(config.seed)
    layout_rng, caps_rng, macro_rng = (np.random.default_rng(s) for s in seed_root.spawn(3))
    cycle = _quarter_cycle(config, macro_rng)

    specs = _regular_schedule(config, layout_rng) + _engineered_cases(config)
    specs.sort(key=lambda s: (s.filing_date, s.firm_id, s.form_label))

    firm_ids = sorted({s.firm_id for s in specs})
    shares = {f: float(1000 + 500 * i) for i, f in enumerate(firm_ids)}
    base_price = {f: float(np.round(caps_rng.lognormal(mean=3.0, sigma=1.0), 4)) for f in firm_ids}
    daily_price: dict[tuple[str, dt.date], float] = {}
    quarterly_price: dict[tuple[str, Quarter], float] = {}

    truth = GroundTruth(seed=config.seed)
    metadata_rows: list[list[str]] = []

    for i, spec in enumerate(specs):
        doc_id = f"d{i:04d}.txt"
        rates = _category_rates(config, (spec.fiscal_year, spec.fiscal_quarter), cycle)
        counts = {cat: int(round(rate * spec.tokens)) for cat, rate in rates.items()}
        doc_rng = np.random.default_rng([config.seed, 1_000_000 + i])
        tokens = _body_tokens(spec.tokens, counts, doc_rng)
        text = _document(spec.form_label, tokens, headerless=spec.headerless)
        (outdir / "texts" / doc_id).write_text(text, encoding="utf-8")
        metadata_rows.append(
            [
                spec.firm_id,
                spec.form_label,
                spec.filing_date.isoformat(),
                str(spec.fiscal_year),
                str(spec.fiscal_quarter),
                doc_id,
            ]
        )

        regime = _cap_regime(spec.firm_id)
        if regime == "missing":
            cap, source = None, None
        elif regime == "quarterly":
            key_q = (spec.firm_id, quarter_of(spec.filing_date))
            if key_q not in quarterly_price:
                quarterly_price[key_q] = base_price[spec.firm_id] * float(
                    np.round(np.exp(caps_rng.normal(scale=0.08)), 6)
                )
            cap, source = quarterly_price[key_q] * shares[spec.firm_id], "quarterly"
        else:
            key_d = (spec.firm_id, spec.filing_date)
            if key_d not in daily_price:
                daily_price[key_d] = base_price[spec.firm_id] * float(
                    np.round(np.exp(caps_rng.normal(scale=0.03)), 6)
                )
            cap, source = daily_price[key_d] * shares[spec.firm_id], "daily"

        truth.filings.append(
            TrueFiling(
                doc_id=doc_id,
                firm_id=spec.firm_id,
                form_label=spec.form_label,
                filing_date=spec.filing_date,
                fiscal_year=spec.fiscal_year,
                fiscal_quarter=spec.fiscal_quarter,
                tokens=spec.tokens,
                counts=counts,
                cap=cap,
                cap_source=source,
            )
        )

    _write_csv(
        outdir / "metadata.csv",
        ["firm_id", "form_type", "filing_date", "fiscal_year", "fiscal_quarter", "text_path"],
        metadata_rows,
    )
    _write_csv(
        outdir / "caps_daily.csv",
        ["firm_id", "date", "price", "shares"],
        [[f, d.isoformat(), repr(p), repr(shares[f])] for (f, d), p in sorted(daily_price.items())],
    )
    _write_csv(
        outdir / "caps_quarterly.csv",
        ["firm_id", "quarter_start", "quarter_end", "price", "shares"],
        [
            [
                f,
                (quarter_end(add_quarters(q, -1)) + dt.timedelta(days=1)).isoformat(),
                quarter_end(q).isoformat(),
                repr(p),
                repr(shares[f]),
            ]
            for (f, q), p in sorted(quarterly_price.items())
        ],
    )
    _write_lexicon(outdir / "lexicon.csv")

    _apply_filtration_truth(truth)
    _apply_growth_truth(truth)
    _apply_index_truth(truth)

    gdp, flags = _gdp_from_cycle(cycle, macro_rng)
    write_gdp_series(gdp, outdir / "gdp.csv")
    write_recession_flags(flags, outdir / "recession.csv")
    _write_benchmark(config, macro_rng, outdir / "benchmark.csv")

    (outdir / "truth.json").write_text(json.dumps(truth.manifest(), indent=1), encoding="utf-8")
    return truth


def _write_csv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    lines = [",".join(header)] + [",".join(str(c) for c in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_lexicon(path: Path) -> None:
    rows = []
    for cat, words in CATEGORY_WORDS.items():
        for word in words:
            flags = {c: 0 for c in CATEGORY_WORDS}
            flags[cat] = 2009
            rows.append(
                [word.upper(), flags["positive"], flags["negative"], flags["uncertainty"], flags["litigious"], 1]
            )
    _write_csv(path, ["Word", "Positive", "Negative", "Uncertainty", "Litigious", "Entry"], [list(map(str, r)) for r in rows])


def _apply_filtration_truth(truth: GroundTruth) -> None:
    """Stage counts from the generator's own knowledge of each filing."""
    filings = truth.filings
    counts = {STAGES[0]: len(filings)}

    standard = [f for f in filings if f.form_label in ("10-K", "10-Q")]
    counts[STAGES[1]] = len(standard)

    extracted = [f for f in standard if f.firm_id != "XNOHEAD"]
    counts[STAGES[2]] = len(extracted)

    floored = [f for f in extracted if f.tokens >= 610]
    counts[STAGES[3]] = len(floored)

    seen: set[tuple] = set()
    deduped: list[TrueFiling] = []
    for f in sorted(floored, key=lambda f: (f.firm_id, f.filing_date, f.doc_id)):
        key = (f.firm_id, f.filing_date, f.form_label)
        if key in seen:
            continue
        seen.add(key)
        deduped.append(f)
    per_year: dict[tuple[str, int], int] = {}
    for f in deduped:
        per_year[(f.firm_id, f.filing_date.year)] = per_year.get((f.firm_id, f.filing_date.year), 0) + 1
    final = [f for f in deduped if per_year[(f.firm_id, f.filing_date.year)] <= 4]
    counts[STAGES[4]] = len(final)

    final_ids = {f.doc_id for f in final}
    for f in filings:
        f.survives = f.doc_id in final_ids
    truth.stage_counts = counts


def _apply_growth_truth(truth: GroundTruth) -> None:
    """Year-over-year growth per surviving filing under the matching rules."""
    survivors = [f for f in truth.filings if f.survives]
    groups: dict[tuple, list[TrueFiling]] = {}
    for f in survivors:
        groups.setdefault((f.firm_id, f.fiscal_year, f.fiscal_quarter, f.form_label), []).append(f)
    for group in groups.values():
        group.sort(key=lambda f: (f.filing_date, f.doc_id))

    for f in survivors:
        group = groups[(f.firm_id, f.fiscal_year, f.fiscal_quarter, f.form_label)]
        rank = group.index(f)
        prior = groups.get((f.firm_id, f.fiscal_year - 1, f.fiscal_quarter, f.form_label))
        if not prior:
            continue
        baseline = prior[min(rank, len(prior) - 1)]
        ratios, base_ratios = f.ratios(), baseline.ratios()
        growth = {
            cat: (ratios[cat] - base_ratios[cat]) / base_ratios[cat]
            for cat in ratios
            if base_ratios[cat] > 0
        }
        entry: dict = {"baseline": baseline.doc_id, "growth": growth}
        if "positive" in growth and "negative" in growth:
            entry["tone_growth"] = growth["positive"] - growth["negative"]
        truth.observations[f.doc_id] = entry


def _apply_index_truth(truth: GroundTruth) -> None:
    by_doc = {f.doc_id: f for f in truth.filings}
    per_week: dict[Week, list[tuple[str, str, float, float]]] = {}
    for doc_id, obs in truth.observations.items():
        if "tone_growth" not in obs:
            continue
        filing = by_doc[doc_id]
        if filing.cap is None:
            truth.cap_failures.append(doc_id)
            continue
        per_week.setdefault(week_of(filing.filing_date), []).append(
            (filing.firm_id, doc_id, obs["tone_growth"], filing.cap)
        )
    for week, entries in per_week.items():
        entries.sort(key=lambda e: (e[0], e[1]))
        total = sum(cap for _, _, _, cap in entries)
        truth.weekly_index[week] = sum(cap * g for _, _, g, cap in entries) / total


def _gdp_from_cycle(
    cycle: dict[Quarter, float], rng: np.random.Generator
) -> tuple[dict[Quarter, float], dict[Quarter, bool]]:
    gdp: dict[Quarter, float] = {}
    for quarter in sorted(cycle):
        gdp[quarter] = 2.5 + 2.0 * cycle[quarter] + float(rng.normal(scale=1.2))
    flags = {q: gdp[q] < -1.0 for q in gdp}
    return gdp, flags


def _write_benchmark(config: SynthConfig, rng: np.random.Generator, path: Path) -> None:
    first = week_of(dt.date(config.start_year, 1, 15))
    last = last_week_ending_by(dt.date(config.start_year + config.n_years, 6, 30))
    rows = []
    level = 0.0
    for week in iter_weeks(first, last):
        level = 0.85 * level + float(rng.normal(scale=0.3))
        rows.append([str(week[0]), str(week[1]), repr(level)])
    _write_csv(path, ["iso_year", "iso_week", "value"], rows)


def corpus_checksum(outdir: str | Path) -> str:
    """Stable digest of the generated corpus (metadata plus every text file)."""
    outdir = Path(outdir)
    digest = hashlib.sha256()
    digest.update((outdir / "metadata.csv").read_bytes())
    for text_file in sorted((outdir / "texts").glob("*.txt")):
        digest.update(text_file.name.encode())
        digest.update(text_file.read_bytes())
    return digest.hexdigest()


# --- weekly-level data generating process ---------------------------------


@dataclass
class WeeklyDgp:
    tone: dict[Week, float]
    benchmark: dict[Week, float]
    gdp: dict[Quarter, float]
    signal: dict[Quarter, float]
    tail_loading: float


def generate_weekly_dgp(
    seed: int,
    n_quarters: int = 100,
    tail_loading: float = 3.0,
    mean_loading: float = 1.0,
    noise_scale: float = 1.5,
    start: Quarter = (1980, 1),
    warmup_quarters: int = 9,
) -> WeeklyDgp:
    """Weekly tone index plus GDP whose downside dispersion loads on low tone.

    GDP growth one quarter ahead is mean_loading * signal plus noise whose
    standard deviation widens by tail_loading * max(-signal, 0); with both
    loadings zero the tone index carries no information about growth,
    exactly like the independent benchmark series.
    """
    rng = np.random.default_rng(seed)
    first_quarter = add_quarters(start, -warmup_quarters)
    quarters = [add_quarters(start, i) for i in range(n_quarters + 1)]
    first_week = add_weeks(last_week_ending_by(quarter_end(first_quarter)), -1)
    last_week = last_week_ending_by(quarter_end(quarters[-1]))

    tone: dict[Week, float] = {}
    benchmark: dict[Week, float] = {}
    tone_level = bench_level = 0.0
    weeks: list[Week] = []
    for week in iter_weeks(first_week, last_week):
        tone_level = 0.90 * tone_level + float(rng.normal(scale=0.30))
        bench_level = 0.90 * bench_level + float(rng.normal(scale=0.30))
        tone[week] = tone_level
        benchmark[week] = bench_level
        weeks.append(week)

    week_pos = {w: i for i, w in enumerate(weeks)}
    tone_values = np.array([tone[w] for w in weeks])
    decay = np.exp(-np.arange(26) / 8.0)
    decay /= decay.sum()

    signal: dict[Quarter, float] = {}
    for quarter in quarters:
        end_pos = week_pos[last_week_ending_by(quarter_end(quarter))]
        lags = tone_values[end_pos - len(decay) + 1 : end_pos + 1][::-1]
        signal[quarter] = float(decay @ lags)

    gdp: dict[Quarter, float] = {}
    gdp[quarters[0]] = 2.5 + noise_scale * float(rng.normal())
    for quarter in quarters[:-1]:
        s = signal[quarter]
        spread = noise_scale + tail_loading * max(-s, 0.0)
        gdp[add_quarters(quarter, 1)] = 2.5 + mean_loading * s + spread * float(rng.normal())

    return WeeklyDgp(tone=tone, benchmark=benchmark, gdp=gdp, signal=signal, tail_loading=tail_loading)
