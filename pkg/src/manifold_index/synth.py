"""Deterministic synthetic market generator for pipeline fixtures.

Stocks follow a sector factor model: each daily return is the stock's
sector factor return plus idiosyncratic noise, so the point cloud of price
curves genuinely concentrates near a low-dimensional structure.  Caps are
lognormal, prices start near 100, every return is floored above -99% so
prices stay positive, and the full-market cap-weighted benchmark (base
level 1000 on the first day) rides along.

All draws come from numpy's Philox bit generator - a 64-bit counter-based
generator with a stable cross-platform stream - in a fixed order (start
jitter, caps, sector returns, idiosyncratic noise), so a given seed yields
bit-identical output everywhere.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .indexcalc import IndexSeries
from .marketdata import RawQuote

RETURN_FLOOR = -0.99


@dataclass(frozen=True)
class SynthConfig:
    n_stocks: int = 300
    m_days: int = 244
    n_sectors: int = 8
    sector_vol: float = 0.012
    idio_vol: float = 0.006
    cap_log_mean: float = 16.0
    cap_log_sd: float = 0.8
    seed: int = 0
    start_year: int = 2020
    n_years: int = 2

    def __post_init__(self):
        if not self.n_stocks >= self.n_sectors >= 1:
            raise ParameterError(
                f"need n_stocks >= n_sectors >= 1, got {self.n_stocks}, {self.n_sectors}"
            )
        if self.sector_vol < 0 or self.idio_vol < 0:
            raise ParameterError("volatilities must be >= 0")
        if self.m_days < 20:
            raise ParameterError(f"m_days must be >= 20, got {self.m_days}")
        if self.m_days > 260:
            raise ParameterError(f"m_days must fit inside one year of weekdays, got {self.m_days}")
        if self.n_years < 1:
            raise ParameterError("n_years must be >= 1")


@dataclass(frozen=True)
class SyntheticMarket:
    """Generator output: per-ticker quotes, the dates they cover, the sector
    of each stock, and the full-market benchmark series."""

    config: SynthConfig
    dates: tuple[dt.date, ...]
    quotes: dict[str, list[RawQuote]]
    sectors: np.ndarray
    benchmark: IndexSeries


def trading_dates(start_year: int, n_years: int, m_days: int) -> tuple[dt.date, ...]:
    """First ``m_days`` weekdays of each calendar year, concatenated."""
    out: list[dt.date] = []
    for year in range(start_year, start_year + n_years):
        day = dt.date(year, 1, 1)
        taken = 0
        while taken < m_days:
            if day.weekday() < 5:
                out.append(day)
                taken += 1
            day += dt.timedelta(days=1)
    return tuple(out)


def generate_market(config: SynthConfig) -> SyntheticMarket:
    """Generate quotes and the cap-weighted benchmark for one seed."""
    rng = np.random.Generator(np.random.Philox(config.seed))
    n = config.n_stocks
    dates = trading_dates(config.start_year, config.n_years, config.m_days)
    n_days = len(dates)

    start = 100.0 * (1.0 + rng.uniform(-0.02, 0.02, size=n))
    caps = np.exp(rng.normal(config.cap_log_mean, config.cap_log_sd, size=n))
    sector_returns = rng.normal(0.0, config.sector_vol, size=(n_days - 1, config.n_sectors))
    idio = rng.normal(0.0, config.idio_vol, size=(n_days - 1, n))

    sectors = np.arange(n) % config.n_sectors
    returns = np.maximum(sector_returns[:, sectors] + idio, RETURN_FLOOR)
    prices = np.empty((n_days, n))
    prices[0] = start
    prices[1:] = start[None, :] * np.cumprod(1.0 + returns, axis=0)

    shares = caps / start
    tickers = [f"S{i:04d}" for i in range(n)]
    quotes = {
        tickers[i]: [
            RawQuote(tickers[i], d, float(prices[j, i]), float(shares[i]))
            for j, d in enumerate(dates)
        ]
        for i in range(n)
    }

    base_level = 1000.0
    market_cap = prices @ shares
    divisor = market_cap[0] / base_level
    benchmark = IndexSeries(
        dates=dates,
        values=tuple(float(v) for v in market_cap / divisor),
        divisors=(float(divisor),) * n_days,
    )
    return SyntheticMarket(
        config=config, dates=dates, quotes=quotes, sectors=sectors, benchmark=benchmark
    )


def write_quotes_csv(path, market: SyntheticMarket) -> None:
    """Emit the quote schema the loader consumes: date,ticker,close,shares_issued."""
    with open(path, "w", newline="") as fh:
        fh.write("date,ticker,close,shares_issued\n")
        for ticker in sorted(market.quotes):
            for q in market.quotes[ticker]:
                fh.write(f"{q.date.isoformat()},{q.ticker},{q.close!r},{q.shares_issued!r}\n")


def write_benchmark_csv(path, benchmark: IndexSeries) -> None:
    """Emit ``date,level`` rows."""
    with open(path, "w", newline="") as fh:
        fh.write("date,level\n")
        for date, level in zip(benchmark.dates, benchmark.values):
            fh.write(f"{date.isoformat()},{level!r}\n")


def read_benchmark_csv(path) -> IndexSeries:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        dates, values = [], []
        for row in reader:
            dates.append(dt.date.fromisoformat(row["date"]))
            values.append(float(row["level"]))
    return IndexSeries(dates=tuple(dates), values=tuple(values))
