"""Batch pipeline CLI.

Subcommands:

    synth     generate a synthetic market (quotes.csv + benchmark.csv)
    select    study-year preprocessing, operator build, eigen solve and
              constituent selection; one constituent CSV per requested N
    index     divisor-maintained index series for the target year from
              constituent CSVs; one series CSV per input
    metrics   per-index-per-year reports against a benchmark, plus the
              stability summary
    backtest  select + index over consecutive year pairs, then metrics

Configuration is a flat ``key=value`` file ('#' starts a comment); any flag
given on the command line overrides the file.  Stages communicate through
CSV artifacts only, so each can be re-run from the previous stage's output.
Exit code is 0 on success; failures print one diagnostic line to stderr.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import indexcalc, manifold, marketdata, metrics, selection, spectral, synth
from .errors import (
    InsufficientFeaturesError,
    MissingPriceError,
    NotCompletableError,
    ParameterError,
    ParseError,
    PipelineError,
)

DEFAULT_N_LIST = (50, 100, 150, 180, 380)


@dataclass(frozen=True)
class PipelineConfig:
    quotes: str | None = None
    benchmark: str | None = None
    actions: str | None = None
    outdir: str = "out"
    study_year: int | None = None
    target_year: int | None = None
    k: int = manifold.DEFAULT_K
    t: float | None = None  # None = self-tuning bandwidth
    mode: str = "balanced"
    n_list: tuple[int, ...] = DEFAULT_N_LIST
    base_level: float = indexcalc.DEFAULT_BASE_LEVEL
    eigen_batch: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.study_year is not None and self.target_year is not None:
            if self.target_year != self.study_year + 1:
                raise ParameterError(
                    f"target_year must be study_year + 1, got {self.study_year} "
                    f"-> {self.target_year}"
                )
        if self.mode not in manifold.MODES:
            raise ParameterError(f"mode must be one of {manifold.MODES}")
        if self.eigen_batch < 1:
            raise ParameterError("eigen_batch must be >= 1")

    def resolved_target_year(self) -> int:
        if self.target_year is not None:
            return self.target_year
        if self.study_year is not None:
            return self.study_year + 1
        raise ParameterError("no study_year/target_year configured")


def _parse_t(text: str) -> float | None:
    if text.strip().lower() == "auto":
        return None
    try:
        return float(text)
    except ValueError:
        raise ParameterError(f"bandwidth must be a number or 'auto', got {text!r}") from None


def _parse_n_list(text: str) -> tuple[int, ...]:
    values = tuple(int(tok) for tok in text.replace(",", " ").split())
    if not values or any(v < 1 for v in values):
        raise ParameterError(f"bad constituent-count list {text!r}")
    return values


_CONFIG_PARSERS = {
    "quotes": str,
    "benchmark": str,
    "actions": str,
    "outdir": str,
    "study_year": int,
    "target_year": int,
    "k": int,
    "t": _parse_t,
    "mode": str,
    "n_list": _parse_n_list,
    "base_level": float,
    "eigen_batch": int,
    "seed": int,
}


def load_config(path) -> PipelineConfig:
    """Read a flat key=value config file into a PipelineConfig."""
    values = {}
    with open(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(path, line_no, f"expected key=value, got {line!r}")
            key, text = (part.strip() for part in line.split("=", 1))
            if key not in _CONFIG_PARSERS:
                raise ParseError(path, line_no, f"unknown config key {key!r}")
            try:
                values[key] = _CONFIG_PARSERS[key](text)
            except ValueError as exc:
                raise ParseError(path, line_no, f"bad value for {key}: {exc}") from None
    return PipelineConfig(**values)


def _merge_overrides(cfg: PipelineConfig, args: argparse.Namespace) -> PipelineConfig:
    updates = {}
    for f in fields(PipelineConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            if f.name == "t":
                value = _parse_t(value)  # '--t auto' resets a config-file bandwidth
            updates[f.name] = value
    return replace(cfg, **updates) if updates else cfg


def _log(message: str) -> None:
    print(message, file=sys.stderr)


# ---------------------------------------------------------------------------
# pipeline stages


def grow_basis_and_select(
    weights: manifold.WeightMatrix,
    mass: manifold.MassMatrix,
    graph: manifold.AdjacencyGraph,
    caps: np.ndarray,
    n_targets,
    batch: int,
    seed: int = 0,
) -> dict[int, selection.FeatureSet]:
    """Select constituents for each target count, requesting eigenpairs in
    batches and expanding the basis whenever the accumulated features run
    short.  Fatal once all n eigenpairs are exhausted."""
    n = weights.n
    p = min(n, batch)
    basis = spectral.solve_generalized(weights, mass, p, seed=seed)
    out: dict[int, selection.FeatureSet] = {}
    for n_target in sorted(n_targets):
        while True:
            try:
                out[n_target] = selection.select_constituents(basis, graph, n_target, caps)
                break
            except InsufficientFeaturesError:
                if basis.count >= n:
                    raise
                p = min(n, p + batch)
                basis = spectral.solve_generalized(weights, mass, p, seed=seed)
    return out


def cmd_select(cfg: PipelineConfig) -> list[Path]:
    """Run marketdata -> manifold -> spectral -> selection for the study year
    and write one constituent CSV per requested N."""
    if cfg.quotes is None or cfg.study_year is None:
        raise ParameterError("select needs --quotes and --study-year")
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    quotes = marketdata.load_quotes(cfg.quotes)
    calendar = marketdata.calendar_from_quotes(quotes, cfg.study_year)
    frame = marketdata.build_market_frame(quotes, calendar, calendar.dates[-1])
    _log(f"select: {frame.n} stocks x {calendar.m} days after preprocessing")
    for n_target in cfg.n_list:
        if n_target >= frame.n:
            raise ParameterError(
                f"requested N={n_target} but only {frame.n} stocks survive screening"
            )

    graph, weights, mass = manifold.build_operator(frame, k=cfg.k, t=cfg.t, mode=cfg.mode)
    picks = grow_basis_and_select(
        weights, mass, graph, frame.caps_vector(), cfg.n_list, cfg.eigen_batch, cfg.seed
    )
    paths = []
    for n_target in cfg.n_list:
        path = outdir / f"constituents_{n_target:03d}.csv"
        selection.write_constituents_csv(path, picks[n_target], frame.tickers, frame.caps_vector())
        paths.append(path)
        _log(f"select: wrote {path}")
    return paths


def _completed_prices(quotes, calendar, tickers):
    prices: dict[str, dict] = {}
    for ticker in tickers:
        if ticker not in quotes:
            raise MissingPriceError(ticker, calendar.dates[0])
        try:
            closes = marketdata.complete_series(quotes[ticker], calendar)
        except NotCompletableError:
            raise MissingPriceError(ticker, calendar.dates[0]) from None
        prices[ticker] = dict(zip(calendar.dates, closes))
    return prices


def _shares_at(quotes, calendar, ticker, date):
    if ticker not in quotes:
        raise MissingPriceError(ticker, date)
    by_date = {q.date: q.shares_issued for q in quotes[ticker]}
    series = [by_date.get(d) for d in calendar.dates]
    try:
        filled = marketdata.complete_series(series, calendar)
    except NotCompletableError:
        raise MissingPriceError(ticker, date) from None
    return float(filled[calendar.index_of(date)])


def cmd_index(cfg: PipelineConfig, constituent_files) -> list[Path]:
    """Compute the target-year index series for each constituent CSV."""
    if cfg.quotes is None:
        raise ParameterError("index needs --quotes")
    target_year = cfg.resolved_target_year()
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    quotes = marketdata.load_quotes(cfg.quotes)
    calendar = marketdata.calendar_from_quotes(quotes, target_year)
    base_date = calendar.dates[0]
    actions = indexcalc.read_actions_csv(cfg.actions) if cfg.actions else []

    paths = []
    for cfile in constituent_files:
        cfile = Path(cfile)
        tickers = selection.read_constituents_csv(cfile)
        members = [
            indexcalc.Constituent(t, _shares_at(quotes, calendar, t, base_date))
            for t in tickers
        ]
        prices = _completed_prices(quotes, calendar, tickers)
        series = indexcalc.compute_series(
            calendar.dates, prices, members, cfg.base_level, actions
        )
        stem = cfile.stem.replace("constituents", "index")
        path = outdir / f"{stem}_{target_year}.csv"
        indexcalc.write_series_csv(path, series)
        paths.append(path)
        _log(f"index: wrote {path}")
    return paths


def _split_years(series: indexcalc.IndexSeries) -> dict[int, indexcalc.IndexSeries]:
    by_year: dict[int, list[int]] = {}
    for i, date in enumerate(series.dates):
        by_year.setdefault(date.year, []).append(i)
    out = {}
    for year, idx in by_year.items():
        out[year] = indexcalc.IndexSeries(
            dates=tuple(series.dates[i] for i in idx),
            values=tuple(series.values[i] for i in idx),
            divisors=tuple(series.divisors[i] for i in idx) if series.divisors else (),
        )
    return out


def cmd_metrics(cfg: PipelineConfig, series_files) -> tuple[Path, Path]:
    """Evaluate each series CSV against the benchmark, one report row per
    index per calendar year, then summarize stability across years and
    across series."""
    if cfg.benchmark is None:
        raise ParameterError("metrics needs --benchmark")
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    bench_years = _split_years(synth.read_benchmark_csv(cfg.benchmark))

    rows: list[tuple[str, int, metrics.MetricsReport]] = []
    for sfile in sorted(Path(p) for p in series_files):
        series = indexcalc.read_series_csv(sfile)
        name = sfile.stem
        for year, chunk in sorted(_split_years(series).items()):
            if year not in bench_years:
                raise ParameterError(f"benchmark has no dates for year {year} ({sfile})")
            rows.append((name, year, metrics.evaluate(chunk, bench_years[year])))

    report_path = outdir / "metrics.csv"
    metrics.write_reports_csv(report_path, rows)
    _log(f"metrics: wrote {report_path}")

    stability_rows: list[dict] = []
    metric_names = ("pearson", "alpha", "beta", "jensen_alpha")
    by_name: dict[str, list[metrics.MetricsReport]] = {}
    by_year: dict[int, list[metrics.MetricsReport]] = {}
    for name, year, report in rows:
        by_name.setdefault(name, []).append(report)
        by_year.setdefault(year, []).append(report)
    for name in sorted(by_name):
        reports = by_name[name]
        for metric in metric_names:
            values = [getattr(r, metric) for r in reports]
            stability_rows.append(
                {
                    "scope": "index",
                    "name": name,
                    "metric": metric,
                    "std": metrics.stability_std(values) if len(values) >= 2 else None,
                    "mean_baseline_distance": metrics.mean_baseline_distance(
                        values, metrics.BASELINES[metric]
                    ),
                }
            )
    for year in sorted(by_year):
        reports = by_year[year]
        if len(reports) < 2:
            continue
        for metric in metric_names:
            values = [getattr(r, metric) for r in reports]
            stability_rows.append(
                {
                    "scope": "year",
                    "name": str(year),
                    "metric": metric,
                    "std": metrics.stability_std(values),
                }
            )
    stability_path = outdir / "stability.csv"
    metrics.write_stability_csv(stability_path, stability_rows)
    _log(f"metrics: wrote {stability_path}")
    return report_path, stability_path


def cmd_synth(args) -> tuple[Path, Path]:
    """Generate a synthetic market and emit quotes.csv + benchmark.csv."""
    config = synth.SynthConfig(
        n_stocks=args.n_stocks,
        m_days=args.m_days,
        n_sectors=args.n_sectors,
        sector_vol=args.sector_vol,
        idio_vol=args.idio_vol,
        cap_log_mean=args.cap_log_mean,
        cap_log_sd=args.cap_log_sd,
        seed=args.seed,
        start_year=args.start_year,
        n_years=args.n_years,
    )
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    market = synth.generate_market(config)
    quotes_path = outdir / "quotes.csv"
    bench_path = outdir / "benchmark.csv"
    synth.write_quotes_csv(quotes_path, market)
    synth.write_benchmark_csv(bench_path, market.benchmark)
    _log(f"synth: wrote {quotes_path} and {bench_path}")
    return quotes_path, bench_path


def cmd_backtest(cfg: PipelineConfig, start_year: int, end_year: int) -> tuple[Path, Path]:
    """Annual refresh loop: for each study year in [start, end], select
    constituents and compute the next year's index, then evaluate all series
    against the benchmark."""
    series_files: list[Path] = []
    for study_year in range(start_year, end_year + 1):
        year_cfg = replace(
            cfg,
            study_year=study_year,
            target_year=study_year + 1,
            outdir=str(Path(cfg.outdir) / str(study_year)),
        )
        constituent_files = cmd_select(year_cfg)
        series_files.extend(cmd_index(year_cfg, constituent_files))
    return cmd_metrics(cfg, series_files)


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--quotes", help="quote CSV path")
    parser.add_argument("--benchmark", help="benchmark CSV path")
    parser.add_argument("--actions", help="corporate-action CSV path")
    parser.add_argument("--outdir", help="output directory")
    parser.add_argument("--study-year", dest="study_year", type=int)
    parser.add_argument("--target-year", dest="target_year", type=int)
    parser.add_argument("--k", type=int, help="KNN neighbor count")
    parser.add_argument("--t", help="kernel bandwidth or 'auto'")
    parser.add_argument("--mode", choices=manifold.MODES)
    parser.add_argument("--n-list", dest="n_list", type=_parse_n_list,
                        help="comma-separated constituent counts")
    parser.add_argument("--base-level", dest="base_level", type=float)
    parser.add_argument("--eigen-batch", dest="eigen_batch", type=int)
    parser.add_argument("--seed", type=int)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="manifold-index", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic market")
    p_synth.add_argument("--outdir", default="out")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--n-stocks", dest="n_stocks", type=int, default=300)
    p_synth.add_argument("--m-days", dest="m_days", type=int, default=244)
    p_synth.add_argument("--n-sectors", dest="n_sectors", type=int, default=8)
    p_synth.add_argument("--sector-vol", dest="sector_vol", type=float, default=0.012)
    p_synth.add_argument("--idio-vol", dest="idio_vol", type=float, default=0.006)
    p_synth.add_argument("--cap-log-mean", dest="cap_log_mean", type=float, default=16.0)
    p_synth.add_argument("--cap-log-sd", dest="cap_log_sd", type=float, default=0.8)
    p_synth.add_argument("--start-year", dest="start_year", type=int, default=2020)
    p_synth.add_argument("--n-years", dest="n_years", type=int, default=2)

    p_select = sub.add_parser("select", help="select constituents from the study year")
    _add_common(p_select)

    p_index = sub.add_parser("index", help="compute target-year index series")
    _add_common(p_index)
    p_index.add_argument("--constituents", nargs="+", required=True,
                         help="constituent CSVs from the select stage")

    p_metrics = sub.add_parser("metrics", help="evaluate series against a benchmark")
    _add_common(p_metrics)
    p_metrics.add_argument("--series", nargs="+", required=True, help="index series CSVs")

    p_back = sub.add_parser("backtest", help="run select+index over year pairs, then metrics")
    _add_common(p_back)
    p_back.add_argument("--start-year", dest="bt_start", type=int, required=True,
                        help="first study year")
    p_back.add_argument("--end-year", dest="bt_end", type=int, required=True,
                        help="last study year")

    return parser


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else PipelineConfig()
    return _merge_overrides(cfg, args)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "synth":
            cmd_synth(args)
        elif args.command == "select":
            cmd_select(_config_from_args(args))
        elif args.command == "index":
            cmd_index(_config_from_args(args), args.constituents)
        elif args.command == "metrics":
            cmd_metrics(_config_from_args(args), args.series)
        elif args.command == "backtest":
            cmd_backtest(_config_from_args(args), args.bt_start, args.bt_end)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
