"""Disclosure-tone Growth-at-Risk toolkit.

Pipeline layers, each usable on its own:

- ``corpus``:    filing ingestion and the staged filtration pipeline
- ``sentiment``: dictionary sentiment ratios and year-over-year tone growth
- ``weekly``:    market-cap-weighted weekly aggregation of firm tone growth
- ``midas``:     quantile regression on Almon-restricted weekly lag polynomials
- ``skewt``:     skewed Student's-t quantile matching and Growth-at-Risk
- ``backtest``:  rolling out-of-sample evaluation (pinball, QSS, Diebold-Mariano)
- ``synth``:     synthetic corpus / data generator with ground-truth manifest
- ``cli``:       end-to-end orchestration
"""

__version__ = "0.1.0"
