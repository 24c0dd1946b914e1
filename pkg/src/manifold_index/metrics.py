"""Evaluation metrics: Pearson on levels, alpha/beta/Jensen on monthly returns.

Correlation is computed on raw level series (indexes compared as m-day
vectors); the risk metrics work on calendar-month simple returns, taken
from the last trading day of each month.  Sample (n-1) covariance and
variance are used throughout.  The default monthly risk-free rate is 0.2%.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    AlignmentError,
    InsufficientDataError,
    UndefinedMetricError,
)
from .indexcalc import IndexSeries

DEFAULT_RISK_FREE = 0.002

BASELINES = {"pearson": 1.0, "alpha": 0.0, "beta": 1.0, "jensen_alpha": 0.0}


@dataclass(frozen=True)
class ReturnSeries:
    """Simple per-calendar-month returns."""

    period_returns: tuple[float, ...]

    def __post_init__(self):
        arr = np.asarray(self.period_returns, dtype=float)
        if arr.size and (not np.all(np.isfinite(arr)) or np.any(arr <= -1.0)):
            raise UndefinedMetricError("returns must be finite and > -1")

    def __len__(self) -> int:
        return len(self.period_returns)


@dataclass(frozen=True)
class MetricsReport:
    pearson: float
    alpha: float
    beta: float
    jensen_alpha: float
    risk_free: float

    def __post_init__(self):
        if abs(self.pearson) > 1.0 + 1e-12:
            raise UndefinedMetricError(f"pearson {self.pearson} outside [-1, 1]")


def _as_array(returns) -> np.ndarray:
    return np.asarray(getattr(returns, "period_returns", returns), dtype=float)


def monthly_returns(series: IndexSeries) -> ReturnSeries:
    """Month-over-month returns from last-trading-day-of-month levels; the
    first month is the baseline, not a return."""
    month_last: dict[tuple[int, int], float] = {}
    for date, level in zip(series.dates, series.values):
        month_last[(date.year, date.month)] = level  # dates ascending, last write wins
    if len(month_last) < 2:
        raise InsufficientDataError("need at least 2 calendar months of levels")
    closes = [month_last[k] for k in sorted(month_last)]
    rets = tuple(
        (curr - prev) / prev for prev, curr in zip(closes, closes[1:])
    )
    return ReturnSeries(period_returns=rets)


def pearson(x, y) -> float:
    """Linear correlation of two equal-length level vectors."""
    xv = np.asarray(x, dtype=float)
    yv = np.asarray(y, dtype=float)
    if xv.shape != yv.shape:
        raise AlignmentError(f"length mismatch: {xv.shape} vs {yv.shape}")
    if xv.size < 2:
        raise InsufficientDataError("pearson needs at least 2 samples")
    dx = xv - xv.mean()
    dy = yv - yv.mean()
    sx = float(np.sqrt(dx @ dx))
    sy = float(np.sqrt(dy @ dy))
    if sx == 0.0 or sy == 0.0:
        raise UndefinedMetricError("pearson undefined for a constant series")
    return float((dx @ dy) / (sx * sy))


def alpha(index_returns, market_returns) -> float:
    """Mean excess monthly return over the market."""
    ri = _as_array(index_returns)
    rm = _as_array(market_returns)
    if ri.shape != rm.shape:
        raise AlignmentError(f"length mismatch: {ri.shape} vs {rm.shape}")
    return float(ri.mean() - rm.mean())


def beta(index_returns, market_returns) -> float:
    """Regression slope of index returns on market returns
    (sample covariance over sample variance)."""
    ri = _as_array(index_returns)
    rm = _as_array(market_returns)
    if ri.shape != rm.shape:
        raise AlignmentError(f"length mismatch: {ri.shape} vs {rm.shape}")
    if ri.size < 2:
        raise InsufficientDataError("beta needs at least 2 samples")
    dm = rm - rm.mean()
    var_m = float(dm @ dm) / (rm.size - 1)
    if var_m == 0.0:
        raise UndefinedMetricError("beta undefined: market variance is zero")
    cov = float((ri - ri.mean()) @ dm) / (ri.size - 1)
    return cov / var_m


def jensen_alpha(index_returns, market_returns, risk_free: float = DEFAULT_RISK_FREE) -> float:
    """Mean index return minus the beta-adjusted benchmark return."""
    b = beta(index_returns, market_returns)
    ri = _as_array(index_returns).mean()
    rm = _as_array(market_returns).mean()
    return float(ri - (risk_free + b * (rm - risk_free)))


def stability_std(values: Sequence[float]) -> float:
    """Sample standard deviation of a metric across years or across series;
    closer to 0 means more stable."""
    arr = np.asarray(values, dtype=float)
    if arr.size < 2:
        raise InsufficientDataError("stability needs at least 2 values")
    return float(arr.std(ddof=1))


def mean_baseline_distance(values: Sequence[float], baseline: float) -> float:
    """Mean absolute distance of a metric from its ideal baseline
    (1.0 for pearson and beta, 0.0 for the alphas)."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise InsufficientDataError("mean distance needs at least 1 value")
    return float(np.abs(arr - baseline).mean())


def evaluate(
    series: IndexSeries,
    benchmark: IndexSeries,
    risk_free: float = DEFAULT_RISK_FREE,
) -> MetricsReport:
    """Full report for one index against a benchmark over identical dates."""
    if series.dates != benchmark.dates:
        raise AlignmentError("series and benchmark are not on the same trading dates")
    ri = monthly_returns(series)
    rm = monthly_returns(benchmark)
    return MetricsReport(
        pearson=pearson(series.values, benchmark.values),
        alpha=alpha(ri, rm),
        beta=beta(ri, rm),
        jensen_alpha=jensen_alpha(ri, rm, risk_free),
        risk_free=risk_free,
    )


def write_reports_csv(path, rows: Sequence[tuple[str, int, MetricsReport]]) -> None:
    """Export ``index_name,year,pearson,alpha,beta,jensen_alpha`` rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index_name", "year", "pearson", "alpha", "beta", "jensen_alpha"])
        for name, year, report in rows:
            writer.writerow(
                [name, year]
                + [repr(getattr(report, f)) for f in ("pearson", "alpha", "beta", "jensen_alpha")]
            )


def write_stability_csv(path, rows: Sequence[dict]) -> None:
    """Export stability rows: ``scope,name,metric,std,mean_baseline_distance``
    (std across years for scope=index and across series for scope=year; the
    mean distance to baseline is reported per index)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scope", "name", "metric", "std", "mean_baseline_distance"])
        for row in rows:
            dist = row.get("mean_baseline_distance")
            writer.writerow(
                [
                    row["scope"],
                    row["name"],
                    row["metric"],
                    repr(row["std"]) if row.get("std") is not None else "",
                    repr(dist) if dist is not None else "",
                ]
            )
