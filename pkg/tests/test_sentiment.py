from __future__ import annotations

import datetime as dt

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_filing
from tonegar.corpus import FormKind
from tonegar.sentiment import (
    CATEGORIES,
    SentimentObservation,
    build_observations,
    load_lexicon,
    match_prior,
    sentiment_growth,
    sentiment_ratios,
    tone_growth,
)


def obs(
    doc_id="d0",
    firm="A",
    date=dt.date(2003, 5, 10),
    fy=2003,
    fq=1,
    form=FormKind.TEN_Q,
    ratios=None,
):
    return SentimentObservation(
        doc_id=doc_id,
        firm_id=firm,
        filing_date=date,
        fiscal_year=fy,
        fiscal_quarter=fq,
        form=form,
        ratios=ratios or {c: 0.01 for c in CATEGORIES},
    )


class TestLexicon:
    def test_small_fixture(self, tmp_path):
        path = tmp_path / "lex.csv"
        path.write_text(
            "Word,Positive,Negative,Uncertainty,Litigious\n"
            "GOOD,2009,0,0,0\nLOSS,0,2009,0,0\nMAY,0,0,1,0\nLAWSUIT,0,0,0,3\n"
        )
        lexicon = load_lexicon(path)
        assert lexicon.categories["positive"] == frozenset({"good"})
        assert lexicon.categories["negative"] == frozenset({"loss"})
        assert lexicon.categories["uncertainty"] == frozenset({"may"})
        assert lexicon.categories["litigious"] == frozenset({"lawsuit"})

    def test_word_in_two_categories(self, tmp_path):
        path = tmp_path / "lex.csv"
        path.write_text(
            "Word,Positive,Negative,Uncertainty,Litigious\n"
            "GOOD,1,0,0,0\nMAY,0,0,1,0\nPENALTY,0,2011,0,2011\nLAWSUIT,0,0,0,1\n"
        )
        lexicon = load_lexicon(path)
        assert "penalty" in lexicon.categories["negative"]
        assert "penalty" in lexicon.categories["litigious"]

    def test_extra_columns_ignored_and_counted(self, tmp_path):
        path = tmp_path / "lex.csv"
        path.write_text(
            "Word,Sequence,Positive,Negative,Uncertainty,Litigious,Syllables\n"
            "GOOD,1,1,0,0,0,1\nLOSS,2,0,1,0,0,1\nMAY,3,0,0,1,0,1\nSUE,4,0,0,0,1,1\n"
        )
        lexicon = load_lexicon(path)
        assert set(lexicon.ignored_columns) == {"Sequence", "Syllables"}

    def test_empty_category_fatal(self, tmp_path):
        path = tmp_path / "lex.csv"
        path.write_text("Word,Positive,Negative,Uncertainty,Litigious\nGOOD,1,0,0,0\n")
        with pytest.raises(ValueError, match="no words in"):
            load_lexicon(path)

    def test_unreadable_fatal(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_lexicon(tmp_path / "missing.csv")


class TestRatios:
    def test_direct_formula(self, tiny_lexicon):
        text = " ".join(["neutral"] * 96 + ["loss"] * 4)
        ratios = sentiment_ratios(text, tiny_lexicon)
        assert ratios["negative"] == pytest.approx(0.04)

    def test_no_hits(self, tiny_lexicon):
        ratios = sentiment_ratios("completely neutral words only", tiny_lexicon)
        assert all(v == 0.0 for v in ratios.values())

    def test_hand_counted_paragraph(self, tiny_lexicon):
        words = ["filler"] * 190 + ["good", "gain", "good"] + ["loss"] * 5 + ["may"] * 2
        text = " ".join(words)  # 200 tokens
        ratios = sentiment_ratios(text, tiny_lexicon)
        assert ratios == pytest.approx(
            {"positive": 0.015, "negative": 0.025, "uncertainty": 0.01, "litigious": 0.0}
        )

    def test_case_and_punctuation_insensitive(self, tiny_lexicon):
        assert sentiment_ratios("LOSS, loss; LoSs!", tiny_lexicon)["negative"] == 1.0

    def test_duplicating_text_leaves_ratios_unchanged(self, tiny_lexicon):
        text = "good day with some loss and may be lawsuit words"
        once = sentiment_ratios(text, tiny_lexicon)
        twice = sentiment_ratios(text + " " + text, tiny_lexicon)
        assert once == pytest.approx(twice)

    def test_zero_tokens_is_an_error(self, tiny_lexicon):
        with pytest.raises(ValueError):
            sentiment_ratios("123 456 !!!", tiny_lexicon)


class TestMatchPrior:
    def test_prior_year_same_quarter_same_type(self):
        current = obs(fy=2003, fq=1)
        baseline = obs(doc_id="old", fy=2002, fq=1, date=dt.date(2002, 5, 12))
        assert match_prior(current, [baseline]) is baseline

    def test_gap_year_yields_absent(self):
        current = obs(fy=2003, fq=1)
        too_old = obs(doc_id="old", fy=2001, fq=1, date=dt.date(2001, 5, 12))
        assert match_prior(current, [too_old]) is None

    def test_first_year_yields_absent(self):
        assert match_prior(obs(fy=2003, fq=1), []) is None

    def test_no_cross_type_pairing(self):
        current = obs(fy=2003, fq=2, form=FormKind.TEN_K)
        prior_q = obs(doc_id="q", fy=2002, fq=2, form=FormKind.TEN_Q, date=dt.date(2002, 8, 1))
        assert match_prior(current, [prior_q]) is None

    def test_rank_pairing_earliest_to_earliest(self):
        prior_early = obs(doc_id="p1", fy=2002, fq=1, date=dt.date(2002, 4, 10))
        prior_late = obs(doc_id="p2", fy=2002, fq=1, date=dt.date(2002, 5, 20))
        current_early = obs(doc_id="c1", fy=2003, fq=1, date=dt.date(2003, 4, 12))
        current_late = obs(doc_id="c2", fy=2003, fq=1, date=dt.date(2003, 5, 22))
        history_for_early = [prior_early, prior_late]
        history_for_late = [prior_early, prior_late, current_early]
        assert match_prior(current_early, history_for_early) is prior_early
        assert match_prior(current_late, history_for_late) is prior_late

    def test_many_current_one_baseline(self):
        baseline = obs(doc_id="p", fy=2002, fq=1, date=dt.date(2002, 4, 10))
        current_a = obs(doc_id="c1", fy=2003, fq=1, date=dt.date(2003, 4, 12))
        current_b = obs(doc_id="c2", fy=2003, fq=1, date=dt.date(2003, 5, 22))
        assert match_prior(current_a, [baseline]) is baseline
        assert match_prior(current_b, [baseline, current_a]) is baseline

    def test_history_order_invariance(self):
        history = [
            obs(doc_id=f"h{i}", fy=2002, fq=1, date=dt.date(2002, 3 + i, 10)) for i in range(4)
        ]
        current = obs(fy=2003, fq=1)
        expected = match_prior(current, history)
        assert match_prior(current, list(reversed(history))) is expected

    def test_baseline_is_a_fiscal_year_behind(self):
        baseline = obs(doc_id="p", fy=2002, fq=3, date=dt.date(2002, 11, 10), form=FormKind.TEN_K)
        current = obs(doc_id="c", fy=2003, fq=3, date=dt.date(2003, 11, 12), form=FormKind.TEN_K)
        matched = match_prior(current, [baseline])
        assert matched.fiscal_year == current.fiscal_year - 1
        assert matched.filing_date < current.filing_date


class TestGrowth:
    def test_direct_formula(self):
        growth = sentiment_growth({"negative": 0.06}, {"negative": 0.05})
        assert growth["negative"] == pytest.approx(0.2)

    def test_equal_ratios_zero_growth(self):
        growth = sentiment_growth({"positive": 0.03}, {"positive": 0.03})
        assert growth["positive"] == 0.0

    def test_zero_baseline_category_absent(self):
        growth = sentiment_growth({"litigious": 0.01, "negative": 0.02}, {"litigious": 0.0, "negative": 0.01})
        assert "litigious" not in growth
        assert "negative" in growth

    def test_growth_sign_matches_ratio_change(self):
        up = sentiment_growth({"positive": 0.04}, {"positive": 0.02})["positive"]
        down = sentiment_growth({"positive": 0.01}, {"positive": 0.02})["positive"]
        assert up > 0 > down

    def test_tone_growth(self):
        assert tone_growth({"positive": 0.10, "negative": 0.05}) == pytest.approx(0.05)
        assert tone_growth({"positive": 0.07, "negative": 0.07}) == 0.0
        assert tone_growth({"positive": 0.10}) is None
        assert tone_growth({}) is None


class TestBuildObservations:
    def _records(self):
        text_neutral = " ".join(["filler"] * 95)
        records = []
        # 2002 Q1: ratio of "loss" 5/100; 2003 Q1: "loss" 10/100
        records.append(
            make_filing(
                doc_id="a2002",
                firm_id="A",
                date=dt.date(2002, 5, 10),
                fiscal_year=2002,
                raw_text=text_neutral + " " + " ".join(["loss"] * 5),
            )
        )
        records.append(
            make_filing(
                doc_id="a2003",
                firm_id="A",
                date=dt.date(2003, 5, 11),
                fiscal_year=2003,
                raw_text=" ".join(["filler"] * 90) + " " + " ".join(["loss"] * 10),
            )
        )
        return records

    def test_growth_computed_for_second_year(self, tiny_lexicon):
        first, second = sorted(build_observations(self._records(), tiny_lexicon), key=lambda o: o.doc_id)
        assert first.growth is None and first.tone_growth is None
        assert second.growth["negative"] == pytest.approx(1.0)
        assert second.tone_growth is None  # positive baseline ratio is zero

    def test_input_order_invariance(self, tiny_lexicon):
        records = self._records()
        a = build_observations(records, tiny_lexicon)
        b = build_observations(list(reversed(records)), tiny_lexicon)
        assert sorted(o.doc_id for o in a) == sorted(o.doc_id for o in b)
        growth_a = {o.doc_id: o.growth for o in a}
        growth_b = {o.doc_id: o.growth for o in b}
        assert growth_a == growth_b


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(min_value=0, max_value=3), min_size=1, max_size=8), st.randoms())
def test_match_prior_shuffle_property(quarter_codes, rnd):
    history = [
        obs(doc_id=f"h{i}", fy=2002, fq=code + 1, date=dt.date(2002, 1 + code * 3, 5 + i))
        for i, code in enumerate(quarter_codes)
    ]
    current = obs(fy=2003, fq=1, date=dt.date(2003, 4, 1))
    expected = match_prior(current, history)
    shuffled = list(history)
    rnd.shuffle(shuffled)
    assert match_prior(current, shuffled) is expected
