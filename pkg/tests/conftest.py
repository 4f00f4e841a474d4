from __future__ import annotations

import datetime as dt

import numpy as np
import pytest

from tonegar.corpus import make_record
from tonegar.midas import MidasConfig, RegressorPanel, collapse_matrix
from tonegar.sentiment import Lexicon


def make_filing(
    doc_id="d0.txt",
    firm_id="F000",
    form="10-Q",
    date=dt.date(2001, 5, 15),
    fiscal_year=2001,
    fiscal_quarter=1,
    raw_text="alpha beta gamma",
    extracted_text=None,
):
    return make_record(doc_id, firm_id, form, date, fiscal_year, fiscal_quarter, raw_text, extracted_text)


@pytest.fixture
def tiny_lexicon() -> Lexicon:
    return Lexicon(
        categories={
            "positive": frozenset({"good", "gain"}),
            "negative": frozenset({"loss", "bad"}),
            "uncertainty": frozenset({"may"}),
            "litigious": frozenset({"lawsuit"}),
        }
    )


def config_for_free(n_free: int) -> MidasConfig:
    """A small lag configuration whose restricted parameter count is n_free."""
    degree_restrictions = {0: (3, 2), 1: (1, 1), 2: (3, 2), 3: (2, 0)}
    poly_degree, n_restrictions = degree_restrictions[n_free]
    return MidasConfig(
        weeks_per_quarter=2, lag_quarters=2, poly_degree=poly_degree, n_restrictions=n_restrictions
    )


def synthetic_panel(n_rows: int, n_free: int, seed: int = 0, noise: float = 1.0) -> RegressorPanel:
    """A panel with arbitrary regressors, bypassing the weekly-lag assembly."""
    rng = np.random.default_rng(seed)
    config = config_for_free(n_free)
    X = rng.normal(size=(n_rows, n_free))
    beta = np.arange(1, n_free + 1, dtype=float)
    y = 0.5 + (X @ beta if n_free else 0.0) + noise * rng.normal(size=n_rows)
    quarters = [(1990 + i // 4, i % 4 + 1) for i in range(n_rows)]
    return RegressorPanel(
        quarters=quarters,
        y=y,
        X=X,
        raw_lags=np.zeros((n_rows, config.n_lags)),
        fill_counts=np.zeros(n_rows, dtype=int),
        flagged=np.zeros(n_rows, dtype=bool),
        skipped=[],
        config=config,
    )
