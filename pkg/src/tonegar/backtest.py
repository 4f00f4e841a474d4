"""Rolling out-of-sample evaluation of competing weekly predictors.

Each origin refits the quantile model on the trailing window of fully
realized rows (targets up to the origin quarter), forecasts the next
quarter's lower tail, and records the pinball loss.  Aggregates feed the
Quantile Skill Score against a benchmark and the Diebold-Mariano test of
equal predictive accuracy with the small-sample correction.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import stats

from .midas import MidasConfig, RegressorPanel, build_design, fit_quantile_grid, pinball
from .periods import Quarter, Week, format_quarter, next_quarter, parse_quarter
from .skewt import SkewTFit, SkewTParams, fit_skew_t, gar

HEADLINE_GAR = "gar"
HEADLINE_RAW = "raw"


def read_gdp_series(path: str | Path) -> dict[Quarter, float]:
    series: dict[Quarter, float] = {}
    with Path(path).open(newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            series[parse_quarter(row["quarter"])] = float(row["value"])
    return series


def write_gdp_series(series: dict[Quarter, float], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["quarter", "value"])
        for quarter in sorted(series):
            writer.writerow([format_quarter(quarter), repr(series[quarter])])


def read_recession_flags(path: str | Path) -> dict[Quarter, bool]:
    flags: dict[Quarter, bool] = {}
    with Path(path).open(newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            flags[parse_quarter(row["quarter"])] = bool(int(row["flag"]))
    return flags


def write_recession_flags(flags: dict[Quarter, bool], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["quarter", "flag"])
        for quarter in sorted(flags):
            writer.writerow([format_quarter(quarter), int(flags[quarter])])


@dataclass(frozen=True)
class BacktestConfig:
    window: int = 80
    horizon: int = 1
    tau: float = 0.05
    midas: MidasConfig = field(default_factory=MidasConfig)
    headline: str = HEADLINE_GAR

    def __post_init__(self) -> None:
        if self.horizon != 1:
            raise ValueError("only one-quarter-ahead evaluation is supported")
        if self.tau not in self.midas.tau_grid:
            raise ValueError(f"tau={self.tau} must be one of the fitted grid {self.midas.tau_grid}")
        if self.window < self.midas.n_free + 1 + 10:
            raise ValueError("window must exceed the parameter count by at least 10")
        if self.headline not in (HEADLINE_GAR, HEADLINE_RAW):
            raise ValueError(f"headline must be '{HEADLINE_GAR}' or '{HEADLINE_RAW}'")


@dataclass(frozen=True)
class ForecastRecord:
    predictor: str
    origin: Quarter
    target: Quarter
    forecast: float | None
    raw_q05: float | None
    realized: float | None
    loss: float | None
    skew_t: SkewTParams | None = None
    skew_t_objective: float | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def rolling_backtest(panel: RegressorPanel, config: BacktestConfig, predictor: str) -> list[ForecastRecord]:
    """One record per origin from row ``window`` to the last panel row.

    The fit at origin row i uses rows [i - window, i); those rows' targets
    are realized by the origin quarter, so nothing after the origin enters
    the fit.  Fit failures yield records with an error marker instead of
    aborting the run.
    """
    n = panel.n_rows
    if n < config.window + 1:
        raise ValueError(f"panel has {n} rows; need more than the window ({config.window})")
    records: list[ForecastRecord] = []
    tau_pos = config.midas.tau_grid.index(config.tau)
    for i in range(config.window, n):
        origin = panel.quarters[i]
        target = next_quarter(origin)
        realized = float(panel.y[i])
        try:
            grid = fit_quantile_grid(panel.window(i - config.window, i), config=config.midas)
            quantiles = grid.predict(panel.X[i])
            raw_q05 = float(quantiles[tau_pos])
            skew_fit: SkewTFit | None = None
            if config.headline == HEADLINE_GAR:
                estimates = dict(zip(grid.taus, (float(q) for q in quantiles)))
                skew_fit = fit_skew_t(estimates)
                forecast = gar(skew_fit.params, config.tau)
            else:
                forecast = raw_q05
        except Exception as exc:  # noqa: BLE001 - per-origin failures must not kill the run
            records.append(
                ForecastRecord(
                    predictor=predictor,
                    origin=origin,
                    target=target,
                    forecast=None,
                    raw_q05=None,
                    realized=realized,
                    loss=None,
                    error=f"{type(exc).__name__}: {exc}",
                )
            )
            continue
        records.append(
            ForecastRecord(
                predictor=predictor,
                origin=origin,
                target=target,
                forecast=float(forecast),
                raw_q05=raw_q05,
                realized=realized,
                loss=float(pinball(realized, forecast, config.tau)),
                skew_t=skew_fit.params if skew_fit else None,
                skew_t_objective=skew_fit.objective if skew_fit else None,
            )
        )
    return records


def aggregate_loss(records: list[ForecastRecord], mode: str = "mean") -> float:
    losses = [r.loss for r in records if r.ok and r.loss is not None]
    if not losses:
        raise ValueError("no successful forecast records to aggregate")
    if mode == "mean":
        return float(np.mean(losses))
    if mode == "median":
        return float(np.median(losses))
    raise ValueError(f"unknown aggregation mode {mode!r}")


def qss(qs_model: float, qs_benchmark: float) -> float:
    """Quantile skill score: 1 - QS_model / QS_benchmark (positive = better)."""
    if qs_benchmark <= 0:
        raise ValueError("benchmark loss must be positive")
    return 1.0 - qs_model / qs_benchmark


@dataclass(frozen=True)
class DmResult:
    stat: float
    p_value: float
    n: int
    degenerate: bool = False


def dm_test(
    loss_model: np.ndarray, loss_benchmark: np.ndarray, small_sample: bool = True, horizon: int = 1
) -> DmResult:
    """Diebold-Mariano test on the loss differential d = model - benchmark.

    The long-run variance uses a Bartlett kernel truncated at horizon - 1
    lags, which for the one-step horizon is just the sample variance (1/n
    scaling).  With ``small_sample`` the statistic is shrunk by the
    small-sample factor sqrt((n + 1 - 2h + h(h-1)/n) / n) and referred to a
    Student-t distribution with n - 1 degrees of freedom.  The p-value is
    one-sided for "model better than benchmark" (low losses, negative d).
    """
    l1 = np.asarray(loss_model, dtype=float)
    l2 = np.asarray(loss_benchmark, dtype=float)
    if l1.shape != l2.shape:
        raise ValueError("loss series must have equal length")
    n = l1.shape[0]
    if n < 5:
        raise ValueError("need at least 5 loss pairs")
    d = l1 - l2
    dbar = float(np.mean(d))
    centered = d - dbar
    gamma0 = float(np.mean(centered * centered))
    lrv = gamma0
    for lag in range(1, horizon):
        cov = float(np.mean(centered[lag:] * centered[:-lag]))
        lrv += 2.0 * (1.0 - lag / horizon) * cov
    var_dbar = lrv / n
    if var_dbar == 0.0:
        if dbar == 0.0:
            return DmResult(stat=0.0, p_value=0.5, n=n, degenerate=True)
        stat = -np.inf if dbar < 0 else np.inf
        return DmResult(stat=stat, p_value=0.0 if dbar < 0 else 1.0, n=n, degenerate=True)
    stat = dbar / np.sqrt(var_dbar)
    if small_sample:
        h = horizon
        stat *= np.sqrt((n + 1 - 2 * h + h * (h - 1) / n) / n)
        p_value = float(stats.t.cdf(stat, df=n - 1))
    else:
        p_value = float(stats.norm.cdf(stat))
    return DmResult(stat=float(stat), p_value=p_value, n=n, degenerate=False)


@dataclass
class EvalSummary:
    predictor: str
    benchmark: str
    subset: str
    n_records: int
    n_errors: int
    mean_loss: float | None = None
    median_loss: float | None = None
    benchmark_mean_loss: float | None = None
    benchmark_median_loss: float | None = None
    qss_mean: float | None = None
    qss_median: float | None = None
    dm: DmResult | None = None


def _paired(
    records: list[ForecastRecord], predictor: str, benchmark: str
) -> tuple[list[ForecastRecord], list[ForecastRecord], int]:
    """Records paired by target quarter, dropping targets where either side failed."""
    model = {r.target: r for r in records if r.predictor == predictor}
    bench = {r.target: r for r in records if r.predictor == benchmark}
    targets = sorted(set(model) & set(bench))
    n_errors = sum(1 for t in targets if not (model[t].ok and bench[t].ok))
    good = [t for t in targets if model[t].ok and bench[t].ok]
    return [model[t] for t in good], [bench[t] for t in good], n_errors


def summarize(
    records: list[ForecastRecord], predictor: str, benchmark: str, subset: str = "full"
) -> EvalSummary:
    """Aggregate losses, skill scores, and the DM test for one predictor pair."""
    model, bench, n_errors = _paired(records, predictor, benchmark)
    summary = EvalSummary(
        predictor=predictor,
        benchmark=benchmark,
        subset=subset,
        n_records=len(model),
        n_errors=n_errors,
    )
    if not model:
        return summary
    summary.mean_loss = aggregate_loss(model, "mean")
    summary.median_loss = aggregate_loss(model, "median")
    summary.benchmark_mean_loss = aggregate_loss(bench, "mean")
    summary.benchmark_median_loss = aggregate_loss(bench, "median")
    if summary.benchmark_mean_loss > 0:
        summary.qss_mean = qss(summary.mean_loss, summary.benchmark_mean_loss)
    if summary.benchmark_median_loss > 0:
        summary.qss_median = qss(summary.median_loss, summary.benchmark_median_loss)
    if len(model) >= 5:
        summary.dm = dm_test(
            np.array([r.loss for r in model]), np.array([r.loss for r in bench])
        )
    return summary


def recession_subset(
    records: list[ForecastRecord],
    flags: dict[Quarter, bool],
    predictor: str,
    benchmark: str,
) -> EvalSummary:
    """Summary restricted to records whose target quarter is flagged."""
    missing = {r.target for r in records if r.target not in flags}
    if missing:
        raise ValueError(f"recession flags missing for target quarters: {sorted(missing)[:5]}")
    subset = [r for r in records if flags[r.target]]
    return summarize(subset, predictor, benchmark, subset="recession")


@dataclass(frozen=True)
class GridCell:
    lag_quarters: int
    window: int
    summary: EvalSummary | None
    infeasible_reason: str | None = None

    @property
    def feasible(self) -> bool:
        return self.infeasible_reason is None


def robustness_grid(
    weekly_model: dict[Week, float],
    weekly_benchmark: dict[Week, float],
    gdp: dict[Quarter, float],
    config: BacktestConfig,
    predictor: str = "model",
    benchmark: str = "benchmark",
    lag_orders: tuple[int, ...] = (2, 4, 6, 8),
    windows: tuple[int, ...] = (40, 60, 80, 100),
) -> dict[tuple[int, int], GridCell]:
    """One evaluation per (lag order, window) cell; infeasible cells are marked."""
    cells: dict[tuple[int, int], GridCell] = {}
    for lag in lag_orders:
        midas_cfg = replace(config.midas, lag_quarters=lag)
        panel_m = build_design(weekly_model, gdp, midas_cfg)
        panel_b = build_design(weekly_benchmark, gdp, midas_cfg)
        for window in windows:
            key = (lag, window)
            rows = min(panel_m.n_rows, panel_b.n_rows)
            if rows < window + 1:
                cells[key] = GridCell(lag, window, None, f"panel has {rows} rows; window {window} needs more")
                continue
            cell_cfg = replace(config, window=window, midas=midas_cfg)
            records = rolling_backtest(panel_m, cell_cfg, predictor)
            records += rolling_backtest(panel_b, cell_cfg, benchmark)
            cells[key] = GridCell(lag, window, summarize(records, predictor, benchmark))
    return cells
