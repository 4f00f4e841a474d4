from __future__ import annotations

import datetime as dt

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_filing
from tonegar.corpus import (
    STAGES,
    FormKind,
    apply_word_floor,
    classify_form,
    dedup_and_cap,
    extract_all_sections,
    extract_sections,
    filter_form_types,
    load_corpus,
    run_filtration,
    write_manifest,
)

TEN_K_TEXT = """\
COVER PAGE BOILERPLATE sentinelzero
Item 1. Business
sentinelone filler text here
Item 1A. Risk Factors
competition could reduce margins
demand may weaken
Item 2. Properties
sentineltwo offices and plants
Item 7. Management Discussion and Analysis
revenue grew over the period
costs were stable
Item 7A. Market Risk Disclosures
interest rate exposure is hedged
Item 8. Financial Statements
sentinelthree audited tables
"""

TEN_Q_TEXT = """\
front matter sentinelzero
Part I. Financial Information
Item 1. Financial Statements
sentinelone unaudited tables
Item 2. Management Discussion and Analysis
quarterly revenue commentary
Item 3. Market Risk Disclosures
rate sensitivity paragraph
Part II. Other Information
Item 1A. Risk Factors
new risk disclosed
Item 2. Unregistered Sales
sentineltwo none to report
"""


class TestFormClassification:
    @pytest.mark.parametrize("label", ["10-K", "10-k", " 10-K "])
    def test_standard_annual(self, label):
        assert classify_form(label) is FormKind.TEN_K

    @pytest.mark.parametrize(
        "label",
        ["10-K-A", "10-K405", "10-KSB", "10-KT", "10-Q-A", "10-QSB", "10-QT", "10KSB40", "8-K"],
    )
    def test_variants_are_other(self, label):
        assert classify_form(label) is FormKind.OTHER

    def test_form_filter_keeps_standard_forms_only(self):
        records = [
            make_filing(doc_id=f"d{i}", form=form)
            for i, form in enumerate(["10-K", "10-K-A", "10-QSB", "10-Q"])
        ]
        kept, dropped = filter_form_types(records)
        assert [r.form_label for r in kept] == ["10-K", "10-Q"]
        assert len(dropped) == 2

    def test_empty_input(self):
        assert filter_form_types([]) == ([], [])

    def test_mixed_fixture_count(self):
        forms = ["10-K"] * 3 + ["10-Q"] * 4 + ["10-K-A", "10-KT", "10-QSB"] * 4 + ["10-KSB"]
        records = [make_filing(doc_id=f"d{i}", form=f) for i, f in enumerate(forms)]
        kept, _ = filter_form_types(records)
        assert len(kept) == 7


class TestSectionExtraction:
    def test_annual_report_concatenates_three_sections(self):
        record = make_filing(form="10-K", raw_text=TEN_K_TEXT)
        extracted = extract_sections(record)
        assert extracted == (
            "competition could reduce margins\ndemand may weaken\n"
            "revenue grew over the period\ncosts were stable\n"
            "interest rate exposure is hedged"
        )

    def test_quarterly_report_sections(self):
        record = make_filing(form="10-Q", raw_text=TEN_Q_TEXT)
        extracted = extract_sections(record)
        assert extracted == (
            "quarterly revenue commentary\nrate sensitivity paragraph\nnew risk disclosed"
        )

    def test_no_headers_returns_absent(self):
        record = make_filing(form="10-Q", raw_text="plain prose without any headers at all")
        assert extract_sections(record) is None

    def test_quarterly_with_only_discussion_item(self):
        text = "preamble\nItem 2. Management Discussion\nonly this body\nItem 4. Controls\ntail"
        record = make_filing(form="10-Q", raw_text=text)
        assert extract_sections(record) == "only this body"

    def test_sentinels_never_survive(self):
        for form, text in (("10-K", TEN_K_TEXT), ("10-Q", TEN_Q_TEXT)):
            extracted = extract_sections(make_filing(form=form, raw_text=text))
            assert "sentinel" not in extracted

    def test_part_context_excludes_other_information_items(self):
        # the part II "Item 2" is not a discussion section and must not leak in
        record = make_filing(form="10-Q", raw_text=TEN_Q_TEXT)
        assert "none to report" not in extract_sections(record)

    def test_extraction_content_is_subsequence_of_raw(self):
        record = make_filing(form="10-K", raw_text=TEN_K_TEXT)
        extracted = extract_sections(record)
        for line in extracted.splitlines():
            assert line in TEN_K_TEXT

    def test_nonstandard_form_rejected(self):
        record = make_filing(form="10-K405", raw_text=TEN_K_TEXT)
        with pytest.raises(ValueError):
            extract_sections(record)

    def test_stage_updates_word_count(self):
        record = make_filing(form="10-K", raw_text=TEN_K_TEXT)
        kept, dropped = extract_all_sections([record])
        assert not dropped
        assert kept[0].word_count == len(kept[0].extracted_text.split())


class TestWordFloor:
    @pytest.mark.parametrize("count, expect_kept", [(610, True), (609, False)])
    def test_boundary(self, count, expect_kept):
        text = " ".join(["word"] * count)
        record = make_filing(raw_text=text)
        kept, dropped = apply_word_floor([record])
        assert bool(kept) is expect_kept

    def test_counts_fixture(self):
        records = [
            make_filing(doc_id=f"d{i}", raw_text=" ".join(["word"] * n))
            for i, n in enumerate([100, 610, 5000])
        ]
        kept, _ = apply_word_floor(records)
        assert len(kept) == 2


class TestDedupAndCap:
    def test_same_day_same_form_duplicate_keeps_first_doc_id(self):
        a = make_filing(doc_id="b.txt", date=dt.date(2001, 3, 15))
        b = make_filing(doc_id="a.txt", date=dt.date(2001, 3, 15))
        kept, dropped = dedup_and_cap([a, b])
        assert [r.doc_id for r in kept] == ["a.txt"]
        assert dropped[0][1] == "same_day_duplicate"

    def test_five_filings_in_a_year_all_removed(self):
        records = [
            make_filing(doc_id=f"d{i}", firm_id="B", date=dt.date(2005, 1 + 2 * i, 3), fiscal_quarter=1 + i % 4)
            for i in range(5)
        ]
        kept, dropped = dedup_and_cap(records)
        assert kept == []
        assert {reason for _, reason in dropped} == {"over_frequent_firm_year"}

    def test_other_years_of_the_firm_survive(self):
        crowded = [
            make_filing(doc_id=f"c{i}", firm_id="B", date=dt.date(2005, 1 + 2 * i, 3))
            for i in range(5)
        ]
        normal = [make_filing(doc_id="n0", firm_id="B", date=dt.date(2006, 4, 3))]
        kept, _ = dedup_and_cap(crowded + normal)
        assert [r.doc_id for r in kept] == ["n0"]

    def test_same_quarter_annual_and_quarterly_pair_retained(self):
        k = make_filing(doc_id="k", form="10-K", date=dt.date(2004, 11, 2), fiscal_quarter=3)
        q = make_filing(doc_id="q", form="10-Q", date=dt.date(2004, 11, 2), fiscal_quarter=3)
        kept, dropped = dedup_and_cap([k, q])
        assert len(kept) == 2 and not dropped

    def test_idempotent(self):
        records = [
            make_filing(doc_id="b.txt", date=dt.date(2001, 3, 15)),
            make_filing(doc_id="a.txt", date=dt.date(2001, 3, 15)),
            make_filing(doc_id="c.txt", date=dt.date(2001, 6, 20)),
        ]
        once, _ = dedup_and_cap(records)
        twice, dropped = dedup_and_cap(once)
        assert twice == once and not dropped


def _pipeline_corpus():
    """A corpus engineered so every stage drops a known number of filings."""
    records = []
    body_long = " ".join(["narrative"] * 700)
    body_short = " ".join(["narrative"] * 100)

    def doc(body):
        return f"preamble\nItem 1A. Risk Factors\n{body}\nItem 9. Other\ntail"

    for i in range(4):  # pass everything
        records.append(
            make_filing(doc_id=f"ok{i}", firm_id=f"F{i}", form="10-K", raw_text=doc(body_long),
                        date=dt.date(2001, 2, 3 + i))
        )
    records.append(make_filing(doc_id="amend", form="10-K-A", raw_text=doc(body_long)))  # stage 2
    records.append(make_filing(doc_id="nohead", firm_id="G", form="10-K", raw_text="no item lines"))  # stage 3
    records.append(
        make_filing(doc_id="short", firm_id="H", form="10-K", raw_text=doc(body_short),
                    date=dt.date(2001, 3, 4))
    )  # stage 4
    records.append(
        make_filing(doc_id="dup2", firm_id="F0", form="10-K", raw_text=doc(body_long),
                    date=dt.date(2001, 2, 3))
    )  # stage 5 duplicate of ok0
    return records


class TestRunFiltration:
    def test_engineered_counts(self):
        final, report = run_filtration(_pipeline_corpus())
        assert report.stage_counts == [
            (STAGES[0], 8),
            (STAGES[1], 7),
            (STAGES[2], 6),
            (STAGES[3], 5),
            (STAGES[4], 4),
        ]
        assert len(final) == 4

    def test_empty_corpus(self):
        final, report = run_filtration([])
        assert final == []
        assert all(count == 0 for _, count in report.stage_counts)

    def test_all_pass_keeps_counts_constant(self):
        records = _pipeline_corpus()[:4]
        _, report = run_filtration(records)
        assert {count for _, count in report.stage_counts} == {4}

    def test_equals_manual_composition(self):
        records = _pipeline_corpus()
        kept, _ = filter_form_types(records)
        kept, _ = extract_all_sections(kept)
        kept, _ = apply_word_floor(kept)
        kept, _ = dedup_and_cap(kept)
        final, _ = run_filtration(records)
        assert final == kept

    def test_monotone_counts(self):
        _, report = run_filtration(_pipeline_corpus())
        counts = [count for _, count in report.stage_counts]
        assert counts == sorted(counts, reverse=True)

    def test_report_text_has_one_line_per_stage(self):
        _, report = run_filtration(_pipeline_corpus())
        lines = report.to_text().strip().splitlines()
        assert len(lines) == len(STAGES)
        assert [line.split("\t")[0] for line in lines] == list(STAGES)


@st.composite
def corpora(draw):
    n = draw(st.integers(min_value=0, max_value=12))
    records = []
    for i in range(n):
        firm = draw(st.sampled_from(["A", "B", "C"]))
        form = draw(st.sampled_from(["10-K", "10-Q", "10-K-A", "10-QSB"]))
        month = draw(st.integers(min_value=1, max_value=12))
        day = draw(st.integers(min_value=1, max_value=28))
        year = draw(st.integers(min_value=2000, max_value=2002))
        words = draw(st.sampled_from([30, 609, 610, 700]))
        has_header = draw(st.booleans())
        body = " ".join(["tokenword"] * words)
        text = f"head\nItem 1A. Risk Factors\n{body}" if has_header else body
        records.append(
            make_filing(
                doc_id=f"d{i}.txt",
                firm_id=firm,
                form=form,
                date=dt.date(year, month, day),
                fiscal_year=year,
                fiscal_quarter=(month - 1) // 3 + 1,
                raw_text=text,
            )
        )
    return records


@settings(max_examples=40, deadline=None)
@given(corpora())
def test_filters_are_idempotent_and_counts_monotone(records):
    final, report = run_filtration(records)
    counts = [count for _, count in report.stage_counts]
    assert counts == sorted(counts, reverse=True)

    refiltered, report2 = run_filtration(final)
    assert refiltered == final
    assert {count for _, count in report2.stage_counts} == {len(final)} or not final

    for filt in (filter_form_types, extract_all_sections, apply_word_floor, dedup_and_cap):
        kept, _ = filt(final)
        again, dropped = filt(kept)
        assert again == kept
        assert not dropped


class TestLoadCorpus:
    def test_roundtrip_and_missing_file(self, tmp_path):
        texts = tmp_path / "texts"
        texts.mkdir()
        rows = []
        for i in range(3):
            name = f"f{i}.txt"
            if i != 1:  # leave one file missing
                (texts / name).write_text("Item 1A. Risk Factors\nsome body text")
            rows.append(f"F{i},10-K,2001-02-0{i + 1},2000,4,{name}")
        metadata = tmp_path / "meta.csv"
        metadata.write_text(
            "firm_id,form_type,filing_date,fiscal_year,fiscal_quarter,text_path\n" + "\n".join(rows) + "\n"
        )
        result = load_corpus(metadata, texts)
        assert len(result.records) == 2
        assert len(result.errors) == 1
        assert result.errors[0].doc_ref == "f1.txt"

    def test_all_present(self, tmp_path):
        texts = tmp_path / "texts"
        texts.mkdir()
        lines = ["firm_id,form_type,filing_date,fiscal_year,fiscal_quarter,text_path"]
        for i in range(3):
            (texts / f"f{i}.txt").write_text("body")
            lines.append(f"F{i},10-Q,2001-05-01,2001,1,f{i}.txt")
        metadata = tmp_path / "meta.csv"
        metadata.write_text("\n".join(lines) + "\n")
        result = load_corpus(metadata, texts)
        assert len(result.records) == 3 and not result.errors

    def test_missing_metadata_fatal(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_corpus(tmp_path / "nope.csv", tmp_path)

    def test_malformed_row_collected(self, tmp_path):
        texts = tmp_path / "texts"
        texts.mkdir()
        (texts / "a.txt").write_text("body")
        metadata = tmp_path / "meta.csv"
        metadata.write_text(
            "firm_id,form_type,filing_date,fiscal_year,fiscal_quarter,text_path\n"
            "F0,10-K,not-a-date,2001,1,a.txt\n"
            "F1,10-K,2001-02-03,2001,9,a.txt\n"
        )
        result = load_corpus(metadata, texts)
        assert not result.records
        assert len(result.errors) == 2

    def test_manifest_roundtrip(self, tmp_path):
        texts = tmp_path / "texts"
        texts.mkdir()
        (texts / "a.txt").write_text("body words here")
        record = make_filing(doc_id="a.txt", raw_text="body words here")
        write_manifest([record], tmp_path / "manifest.csv")
        result = load_corpus(tmp_path / "manifest.csv", texts)
        assert result.records[0].firm_id == record.firm_id
        assert result.records[0].filing_date == record.filing_date
