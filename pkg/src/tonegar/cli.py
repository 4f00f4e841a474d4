"""Command-line orchestration: synth, filter, index, backtest, grid, report.

Every command validates its inputs first, writes its outputs under one
subdirectory of the configured output root, and drops the resolved
configuration next to them, so a run can be reproduced from its artifacts
alone.  Identical configuration and seed give byte-identical outputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from collections import Counter
from pathlib import Path

from . import backtest as bt
from . import corpus as corpus_mod
from . import sentiment as sentiment_mod
from . import weekly as weekly_mod
from .config import PipelineConfig
from .midas import build_design
from .periods import format_quarter
from .synth import SynthConfig, generate_corpus
from .weekly import CapTable, read_weekly_series


def _fmt(value: float | None) -> str:
    return "" if value is None else repr(value)


def _write_rows(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    config = PipelineConfig.from_file(args.config)
    if getattr(args, "out", None):
        config.output_dir = Path(args.out)
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
    if getattr(args, "window", None) is not None:
        config.window = args.window
    return config


def _require_inputs(config: PipelineConfig) -> None:
    missing = config.validate_inputs()
    if missing:
        raise SystemExit("missing input paths:\n  " + "\n  ".join(missing))


def cmd_synth(args: argparse.Namespace) -> int:
    outdir = Path(args.out)
    synth_config = SynthConfig(
        seed=args.seed,
        n_firms=args.firms,
        start_year=args.start_year,
        n_years=args.years,
    )
    truth = generate_corpus(synth_config, outdir)
    pipeline = {
        "metadata": str(outdir / "metadata.csv"),
        "text_root": str(outdir / "texts"),
        "lexicon": str(outdir / "lexicon.csv"),
        "caps_daily": str(outdir / "caps_daily.csv"),
        "caps_quarterly": str(outdir / "caps_quarterly.csv"),
        "gdp": str(outdir / "gdp.csv"),
        "benchmark": str(outdir / "benchmark.csv"),
        "recession_flags": str(outdir / "recession.csv"),
        "output_dir": str(outdir / "runs"),
        "seed": args.seed,
    }
    (outdir / "config.json").write_text(json.dumps(pipeline, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    print(f"synthetic dataset written to {outdir} ({len(truth.filings)} filings)")
    return 0


def cmd_filter(args: argparse.Namespace) -> int:
    config = _load_config(args)
    _require_inputs(config)
    outdir = config.output_dir / "filter"
    extracted_dir = outdir / "extracted"
    extracted_dir.mkdir(parents=True, exist_ok=True)
    config.write_resolved(outdir)

    load = corpus_mod.load_corpus(config.metadata, config.text_root)
    if load.errors:
        _write_rows(
            outdir / "load_errors.csv",
            ["row", "doc_ref", "reason"],
            [[e.row, e.doc_ref, e.reason] for e in load.errors],
        )
    kept, report = corpus_mod.run_filtration(load.records, word_floor=config.word_floor)

    for record in kept:
        (extracted_dir / record.doc_id).write_text(record.text, encoding="utf-8")
    corpus_mod.write_manifest(kept, outdir / "manifest.csv")
    (outdir / "filtration_report.txt").write_text(report.to_text(), encoding="utf-8")
    reason_lines = []
    for stage, reasons in report.drop_reasons.items():
        for reason, count in sorted(reasons.items()):
            reason_lines.append(f"{stage}\t{reason}\t{count}")
    (outdir / "filtration_reasons.txt").write_text("\n".join(reason_lines) + "\n", encoding="utf-8")

    per_year: dict[int, Counter] = {}
    for record in load.records:
        per_year.setdefault(record.filing_date.year, Counter())["initial"] += 1
    for record in kept:
        per_year.setdefault(record.filing_date.year, Counter())["final"] += 1
    _write_rows(
        outdir / "filings_by_year.csv",
        ["year", "initial", "final"],
        [[year, c.get("initial", 0), c.get("final", 0)] for year, c in sorted(per_year.items())],
    )
    print(report.to_text().rstrip())
    return 0


def cmd_index(args: argparse.Namespace) -> int:
    config = _load_config(args)
    _require_inputs(config)
    manifest_path = config.output_dir / "filter" / "manifest.csv"
    text_root = config.output_dir / "filter" / "extracted"
    if not manifest_path.exists():
        raise SystemExit(f"filtered manifest not found at {manifest_path}; run the filter command first")
    outdir = config.output_dir / "index"
    outdir.mkdir(parents=True, exist_ok=True)
    config.write_resolved(outdir)

    lexicon = sentiment_mod.load_lexicon(config.lexicon)
    load = corpus_mod.load_corpus(manifest_path, text_root)
    if load.errors:
        raise SystemExit(f"{len(load.errors)} unreadable rows in the filtered manifest")
    observations = sentiment_mod.build_observations(load.records, lexicon)

    rows = []
    for obs in sorted(observations, key=lambda o: o.doc_id):
        growth = obs.growth or {}
        rows.append(
            [
                obs.doc_id,
                obs.firm_id,
                obs.filing_date.isoformat(),
                obs.fiscal_year,
                obs.fiscal_quarter,
                obs.form.value,
                *[_fmt(obs.ratios[c]) for c in sentiment_mod.CATEGORIES],
                *[_fmt(growth.get(c)) for c in sentiment_mod.CATEGORIES],
                _fmt(obs.tone_growth),
            ]
        )
    _write_rows(
        outdir / "observations.csv",
        [
            "doc_id",
            "firm_id",
            "filing_date",
            "fiscal_year",
            "fiscal_quarter",
            "form",
            *[f"ratio_{c}" for c in sentiment_mod.CATEGORIES],
            *[f"growth_{c}" for c in sentiment_mod.CATEGORIES],
            "tone_growth",
        ],
        rows,
    )

    caps = CapTable.from_files(config.caps_daily, config.caps_quarterly)
    tone_index = weekly_mod.build_index(observations, caps, category=weekly_mod.TONE)
    if not tone_index.points:
        raise SystemExit("no weekly index points could be built (no resolvable capitalizations)")
    weekly_mod.write_weekly_index(tone_index, outdir / "weekly_tone.csv")
    for category in sentiment_mod.CATEGORIES:
        series = weekly_mod.build_index(observations, caps, category=category)
        weekly_mod.write_weekly_index(series, outdir / f"weekly_{category}.csv")
    (outdir / "weekly_gaps.txt").write_text(
        "\n".join(f"{w[0]}\t{w[1]}" for w in tone_index.gaps) + "\n", encoding="utf-8"
    )
    _write_rows(
        outdir / "cap_failures.csv",
        ["doc_id", "firm_id", "filing_date"],
        [[f.doc_id, f.firm_id, f.filing_date.isoformat()] for f in tone_index.failures],
    )
    print(f"weekly tone index: {len(tone_index.points)} weeks, {len(tone_index.gaps)} gaps, "
          f"{len(tone_index.failures)} cap failures")
    return 0


def _summary_lines(summary: bt.EvalSummary, mode_note: str) -> list[str]:
    lines = [
        f"subset\t{summary.subset}",
        f"predictor\t{summary.predictor}",
        f"benchmark\t{summary.benchmark}",
        f"n_records\t{summary.n_records}",
        f"n_errors\t{summary.n_errors}",
        f"mean_loss\t{_fmt(summary.mean_loss)}",
        f"median_loss\t{_fmt(summary.median_loss)}",
        f"benchmark_mean_loss\t{_fmt(summary.benchmark_mean_loss)}",
        f"benchmark_median_loss\t{_fmt(summary.benchmark_median_loss)}",
        f"qss_mean\t{_fmt(summary.qss_mean)}",
        f"qss_median\t{_fmt(summary.qss_median)}",
    ]
    if summary.dm is not None:
        lines += [
            f"dm_stat\t{_fmt(summary.dm.stat)}",
            f"dm_p_value\t{_fmt(summary.dm.p_value)}",
            f"dm_degenerate\t{int(summary.dm.degenerate)}",
        ]
    lines.append(f"aggregate_note\t{mode_note}")
    return lines


def _run_backtest(config: PipelineConfig) -> tuple[list[bt.ForecastRecord], bt.EvalSummary, bt.EvalSummary]:
    gdp = bt.read_gdp_series(config.gdp)
    flags = bt.read_recession_flags(config.recession_flags)
    weekly_model = read_weekly_series(config.weekly_index_path())
    weekly_bench = read_weekly_series(config.benchmark)
    midas = config.midas
    backtest_config = bt.BacktestConfig(
        window=config.window, tau=config.tau, midas=midas, headline=config.headline
    )
    panel_model = build_design(weekly_model, gdp, midas)
    panel_bench = build_design(weekly_bench, gdp, midas)
    records = bt.rolling_backtest(panel_model, backtest_config, config.predictor_name)
    records += bt.rolling_backtest(panel_bench, backtest_config, config.benchmark_name)
    summary = bt.summarize(records, config.predictor_name, config.benchmark_name)
    recession = bt.recession_subset(records, flags, config.predictor_name, config.benchmark_name)
    return records, summary, recession


def cmd_backtest(args: argparse.Namespace) -> int:
    config = _load_config(args)
    _require_inputs(config)
    if not config.weekly_index_path().exists():
        raise SystemExit(
            f"weekly index not found at {config.weekly_index_path()}; run the index command first"
        )
    outdir = config.output_dir / "backtest"
    outdir.mkdir(parents=True, exist_ok=True)
    config.write_resolved(outdir)

    records, summary, recession = _run_backtest(config)
    _write_rows(
        outdir / "forecasts.csv",
        [
            "predictor",
            "origin",
            "target",
            "forecast",
            "raw_q05",
            "realized",
            "loss",
            "mu",
            "sigma",
            "alpha",
            "nu",
            "skew_t_objective",
            "error",
        ],
        [
            [
                r.predictor,
                format_quarter(r.origin),
                format_quarter(r.target),
                _fmt(r.forecast),
                _fmt(r.raw_q05),
                _fmt(r.realized),
                _fmt(r.loss),
                _fmt(r.skew_t.mu if r.skew_t else None),
                _fmt(r.skew_t.sigma if r.skew_t else None),
                _fmt(r.skew_t.alpha if r.skew_t else None),
                _fmt(r.skew_t.nu if r.skew_t else None),
                _fmt(r.skew_t_objective),
                r.error or "",
            ]
            for r in sorted(records, key=lambda r: (r.predictor, r.origin))
        ],
    )

    mode_note = "qss and dm reported for both mean and median aggregates of per-record pinball losses"
    text = "\n".join(_summary_lines(summary, mode_note) + [""] + _summary_lines(recession, mode_note))
    (outdir / "summary.txt").write_text(text + "\n", encoding="utf-8")

    by_target: dict = {}
    for r in records:
        if r.ok:
            by_target.setdefault(r.target, {})[r.predictor] = r
    plot_rows, error_rows = [], []
    for target in sorted(by_target):
        row = by_target[target]
        model = row.get(config.predictor_name)
        bench = row.get(config.benchmark_name)
        if model is None or bench is None:
            continue
        plot_rows.append(
            [format_quarter(target), _fmt(model.realized), _fmt(model.forecast), _fmt(bench.forecast)]
        )
        error_rows.append(
            [
                format_quarter(target),
                _fmt(model.realized - model.forecast),
                _fmt(bench.realized - bench.forecast),
            ]
        )
    _write_rows(
        outdir / "plot_forecasts.csv",
        ["target", "actual", f"forecast_{config.predictor_name}", f"forecast_{config.benchmark_name}"],
        plot_rows,
    )
    _write_rows(
        outdir / "plot_errors.csv",
        ["target", f"error_{config.predictor_name}", f"error_{config.benchmark_name}"],
        error_rows,
    )
    _write_rows(
        outdir / "skewt_params.csv",
        ["predictor", "origin", "mu", "sigma", "alpha", "nu", "gar05", "objective"],
        [
            [
                r.predictor,
                format_quarter(r.origin),
                _fmt(r.skew_t.mu),
                _fmt(r.skew_t.sigma),
                _fmt(r.skew_t.alpha),
                _fmt(r.skew_t.nu),
                _fmt(r.forecast),
                _fmt(r.skew_t_objective),
            ]
            for r in sorted(records, key=lambda r: (r.predictor, r.origin))
            if r.ok and r.skew_t is not None
        ],
    )
    print(text)
    return 0


def cmd_grid(args: argparse.Namespace) -> int:
    config = _load_config(args)
    _require_inputs(config)
    if not config.weekly_index_path().exists():
        raise SystemExit(
            f"weekly index not found at {config.weekly_index_path()}; run the index command first"
        )
    outdir = config.output_dir / "grid"
    outdir.mkdir(parents=True, exist_ok=True)
    config.write_resolved(outdir)

    gdp = bt.read_gdp_series(config.gdp)
    weekly_model = read_weekly_series(config.weekly_index_path())
    weekly_bench = read_weekly_series(config.benchmark)
    backtest_config = bt.BacktestConfig(
        window=config.window, tau=config.tau, midas=config.midas, headline=config.headline
    )
    cells = bt.robustness_grid(
        weekly_model,
        weekly_bench,
        gdp,
        backtest_config,
        predictor=config.predictor_name,
        benchmark=config.benchmark_name,
        lag_orders=config.grid_lag_orders,
        windows=config.grid_windows,
    )
    rows = []
    for (lag, window), cell in sorted(cells.items()):
        if not cell.feasible:
            rows.append([lag, window, 0, "", "", "", "", "", "", cell.infeasible_reason])
            continue
        s = cell.summary
        rows.append(
            [
                lag,
                window,
                1,
                s.n_records,
                _fmt(s.mean_loss),
                _fmt(s.benchmark_mean_loss),
                _fmt(s.qss_mean),
                _fmt(s.dm.stat if s.dm else None),
                _fmt(s.dm.p_value if s.dm else None),
                "",
            ]
        )
    _write_rows(
        outdir / "grid.csv",
        [
            "lag_quarters",
            "window",
            "feasible",
            "n_records",
            "mean_loss",
            "benchmark_mean_loss",
            "qss_mean",
            "dm_stat",
            "dm_p_value",
            "note",
        ],
        rows,
    )
    print(f"robustness grid: {len(rows)} cells -> {outdir / 'grid.csv'}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    config = _load_config(args)
    outdir = config.output_dir / "report"
    outdir.mkdir(parents=True, exist_ok=True)
    sections = ["# Pipeline report", ""]

    filtration = config.output_dir / "filter" / "filtration_report.txt"
    if filtration.exists():
        sections += ["## Filtration stages", "", "```", filtration.read_text(encoding="utf-8").rstrip(), "```", ""]
    else:
        sections += ["## Filtration stages", "", "(filter stage not run)", ""]

    weekly = config.output_dir / "index" / "weekly_tone.csv"
    if weekly.exists():
        n_weeks = max(0, len(weekly.read_text(encoding="utf-8").splitlines()) - 1)
        sections += ["## Weekly tone index", "", f"{n_weeks} weekly observations in {weekly}", ""]
    else:
        sections += ["## Weekly tone index", "", "(index stage not run)", ""]

    summary = config.output_dir / "backtest" / "summary.txt"
    if summary.exists():
        sections += ["## Out-of-sample evaluation", "", "```", summary.read_text(encoding="utf-8").rstrip(), "```", ""]
    else:
        sections += ["## Out-of-sample evaluation", "", "(backtest stage not run)", ""]

    grid = config.output_dir / "grid" / "grid.csv"
    if grid.exists():
        sections += ["## Robustness grid", "", "```", grid.read_text(encoding="utf-8").rstrip(), "```", ""]

    (outdir / "report.md").write_text("\n".join(sections), encoding="utf-8")
    print(f"report written to {outdir / 'report.md'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tonegar", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic dataset with ground truth")
    p_synth.add_argument("--out", required=True)
    p_synth.add_argument("--seed", type=int, default=1234)
    p_synth.add_argument("--firms", type=int, default=10)
    p_synth.add_argument("--years", type=int, default=6)
    p_synth.add_argument("--start-year", type=int, default=2000)
    p_synth.set_defaults(func=cmd_synth)

    for name, func, help_text in (
        ("filter", cmd_filter, "run the corpus filtration pipeline"),
        ("index", cmd_index, "compute sentiment observations and the weekly index"),
        ("backtest", cmd_backtest, "rolling out-of-sample evaluation"),
        ("grid", cmd_grid, "lag-order x window robustness grid"),
        ("report", cmd_report, "consolidate artifacts into a report"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True)
        p.add_argument("--out", help="override the configured output directory")
        p.add_argument("--seed", type=int, help="override the configured seed")
        if name in ("backtest", "grid"):
            p.add_argument("--window", type=int, help="override the rolling window length")
        p.set_defaults(func=func)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as exc:
        if exc.code is None or isinstance(exc.code, int):
            raise
        print(f"error: {exc.code}", file=sys.stderr)
        return 1
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
