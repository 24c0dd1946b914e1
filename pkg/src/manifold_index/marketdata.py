"""Quote ingestion and preprocessing.

Raw daily quotes arrive as CSV rows ``date,ticker,close,shares_issued``
(ISO-8601 dates; an absent close is an empty field or ``NA``).  Three steps
turn one study year of quotes into an aligned frame of unit-norm price
vectors:

1. completion      - forward-fill absent closes from the previous trading day
2. screening       - keep only tickers quoted on the first and last calendar
                     date (stocks listing or delisting mid-year are dropped)
3. transformation  - scale each dense close series to unit Euclidean norm,
                     so distances between stocks reflect price shape, not
                     price magnitude

Market caps (close x shares_issued on the selection date) ride along for
constituent trimming and index weighting downstream.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DuplicateQuoteError,
    EmptyUniverseError,
    NormalizationError,
    NotCompletableError,
    ParameterError,
    ParseError,
)

MISSING_TOKENS = {"", "NA"}

NORM_TOL = 1e-12


@dataclass(frozen=True)
class RawQuote:
    """One ticker-day observation; close/shares may be absent (None)."""

    ticker: str
    date: dt.date
    close: float | None
    shares_issued: float | None

    def __post_init__(self):
        if self.close is not None and not self.close > 0:
            raise ParameterError(f"close must be > 0, got {self.close} for {self.ticker}")
        if self.shares_issued is not None and self.shares_issued < 0:
            raise ParameterError(
                f"shares_issued must be >= 0, got {self.shares_issued} for {self.ticker}"
            )


@dataclass(frozen=True)
class TradingCalendar:
    """Strictly increasing trading dates for one study window."""

    dates: tuple[dt.date, ...]

    def __post_init__(self):
        if len(self.dates) < 2:
            raise ParameterError("calendar needs at least 2 trading dates")
        for a, b in zip(self.dates, self.dates[1:]):
            if not a < b:
                raise ParameterError(f"calendar dates not strictly increasing at {b}")

    @property
    def m(self) -> int:
        return len(self.dates)

    def index_of(self, date: dt.date) -> int:
        try:
            return self.dates.index(date)
        except ValueError:
            raise ParameterError(f"{date} is not a trading date of this calendar") from None


@dataclass(frozen=True)
class StockVector:
    """A stock's preprocessed price curve as a unit-norm point."""

    ticker: str
    components: np.ndarray

    def __post_init__(self):
        nrm = float(np.linalg.norm(self.components))
        if abs(nrm - 1.0) > NORM_TOL:
            raise NormalizationError(f"{self.ticker}: vector norm {nrm} is not 1")


@dataclass
class MarketFrame:
    """Aligned universe of unit-norm stock vectors plus selection-date caps."""

    calendar: TradingCalendar
    stocks: list[StockVector]
    caps: dict[str, float]

    def __post_init__(self):
        m = self.calendar.m
        seen = set()
        for s in self.stocks:
            if len(s.components) != m:
                raise ParameterError(f"{s.ticker}: vector length {len(s.components)} != m={m}")
            if s.ticker in seen:
                raise ParameterError(f"duplicate ticker {s.ticker} in frame")
            seen.add(s.ticker)
            if s.ticker not in self.caps:
                raise ParameterError(f"{s.ticker} has no market-cap entry")

    @property
    def n(self) -> int:
        return len(self.stocks)

    @property
    def tickers(self) -> list[str]:
        return [s.ticker for s in self.stocks]

    def matrix(self) -> np.ndarray:
        """Stack the stock vectors into an (n, m) point-cloud array."""
        return np.vstack([s.components for s in self.stocks])

    def caps_vector(self) -> np.ndarray:
        return np.array([self.caps[t] for t in self.tickers], dtype=float)


def _parse_optional(token: str, column: str, path, line_no: int) -> float | None:
    token = token.strip()
    if token in MISSING_TOKENS:
        return None
    try:
        return float(token)
    except ValueError:
        raise ParseError(path, line_no, f"bad {column} value {token!r}") from None


def load_quotes(
    source,
    calendar_window: tuple[dt.date, dt.date] | None = None,
) -> dict[str, list[RawQuote]]:
    """Read a quote CSV into per-ticker quote lists sorted by date.

    The file must carry a header with at least ``date,ticker,close,
    shares_issued``; unknown columns are ignored.  ``calendar_window``
    (inclusive) drops rows outside the range before any other processing.
    """
    groups: dict[str, dict[dt.date, RawQuote]] = {}
    with open(source, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyUniverseError(f"{source}: file is empty") from None
        names = [h.strip() for h in header]
        try:
            cols = {k: names.index(k) for k in ("date", "ticker", "close", "shares_issued")}
        except ValueError as exc:
            raise ParseError(source, 1, f"missing required column: {exc}") from None

        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < len(names):
                raise ParseError(source, line_no, f"expected {len(names)} fields, got {len(row)}")
            try:
                date = dt.date.fromisoformat(row[cols["date"]].strip())
            except ValueError:
                raise ParseError(
                    source, line_no, f"bad date {row[cols['date']]!r}"
                ) from None
            ticker = row[cols["ticker"]].strip()
            if not ticker:
                raise ParseError(source, line_no, "empty ticker")
            if calendar_window is not None:
                lo, hi = calendar_window
                if not lo <= date <= hi:
                    continue
            close = _parse_optional(row[cols["close"]], "close", source, line_no)
            shares = _parse_optional(row[cols["shares_issued"]], "shares_issued", source, line_no)
            try:
                quote = RawQuote(ticker, date, close, shares)
            except ParameterError as exc:
                raise ParseError(source, line_no, str(exc)) from None
            per_ticker = groups.setdefault(ticker, {})
            if date in per_ticker:
                raise DuplicateQuoteError(source, line_no, f"duplicate quote for ({ticker}, {date})")
            per_ticker[date] = quote

    if not groups:
        raise EmptyUniverseError(f"{source}: no quote rows")
    return {t: [per[d] for d in sorted(per)] for t, per in sorted(groups.items())}


def raw_close_series(quotes: Sequence[RawQuote], calendar: TradingCalendar) -> list[float | None]:
    """Closes aligned to the calendar; None where the row or value is absent."""
    by_date = {q.date: q.close for q in quotes}
    return [by_date.get(d) for d in calendar.dates]


def _forward_fill(values: Sequence[float | None]) -> np.ndarray:
    out = np.empty(len(values), dtype=float)
    last = None
    for i, v in enumerate(values):
        if v is not None:
            last = v
        elif last is None:
            raise NotCompletableError("first calendar value is absent; cannot forward-fill")
        out[i] = last
    return out


def complete_series(
    quotes: Sequence[RawQuote] | Sequence[float | None],
    calendar: TradingCalendar,
) -> np.ndarray:
    """Forward-fill one ticker's closes over the calendar.

    Accepts either the ticker's RawQuote list or a calendar-aligned list of
    optional closes.  Raises NotCompletableError when the first calendar
    date has no close (the caller routes such tickers to screening).
    """
    if len(quotes) and isinstance(quotes[0], RawQuote):
        values = raw_close_series(quotes, calendar)  # type: ignore[arg-type]
    else:
        values = list(quotes)  # type: ignore[arg-type]
        if len(values) != calendar.m:
            raise ParameterError(f"series length {len(values)} != calendar m={calendar.m}")
    return _forward_fill(values)


def screen_universe(
    all_series: Mapping[str, Sequence[float | None]],
    calendar: TradingCalendar,
) -> list[str]:
    """Tickers traded throughout the window: close present on the first AND
    last calendar date.  Stocks listing or delisting mid-window fail one of
    the two endpoints and drop out."""
    survivors = []
    for ticker in sorted(all_series):
        series = all_series[ticker]
        if len(series) != calendar.m:
            raise ParameterError(f"{ticker}: series length {len(series)} != m={calendar.m}")
        if series[0] is not None and series[-1] is not None:
            survivors.append(ticker)
    if not survivors:
        raise EmptyUniverseError("screening removed every ticker")
    return survivors


def normalize(series) -> np.ndarray:
    """Scale a dense series to unit Euclidean norm (direction preserved)."""
    v = np.asarray(series, dtype=float)
    nrm = float(np.linalg.norm(v))
    if not np.isfinite(nrm) or nrm <= 0.0:
        raise NormalizationError(f"cannot normalize vector with norm {nrm}")
    return v / nrm


def build_market_frame(
    quotes: Mapping[str, Sequence[RawQuote]],
    calendar: TradingCalendar,
    selection_date: dt.date,
) -> MarketFrame:
    """Run completion, screening and normalization; attach selection-date caps.

    Caps are close x shares_issued on ``selection_date`` with both fields
    forward-filled over the calendar.
    """
    sel_idx = calendar.index_of(selection_date)

    raws = {t: raw_close_series(qs, calendar) for t, qs in quotes.items()}
    completed: dict[str, np.ndarray] = {}
    for ticker, raw in raws.items():
        try:
            completed[ticker] = _forward_fill(raw)
        except NotCompletableError:
            pass  # absent on day one; screening drops it below

    survivors = screen_universe(raws, calendar)

    stocks: list[StockVector] = []
    caps: dict[str, float] = {}
    for ticker in survivors:
        closes = completed[ticker]
        stocks.append(StockVector(ticker, normalize(closes)))
        shares_raw = {q.date: q.shares_issued for q in quotes[ticker]}
        shares_series = [shares_raw.get(d) for d in calendar.dates]
        try:
            shares = _forward_fill(shares_series)
        except NotCompletableError:
            raise NotCompletableError(
                f"{ticker}: shares_issued absent through {selection_date}"
            ) from None
        caps[ticker] = float(closes[sel_idx] * shares[sel_idx])
    return MarketFrame(calendar, stocks, caps)


def calendar_from_quotes(
    quotes: Mapping[str, Sequence[RawQuote]] | Iterable[RawQuote],
    year: int | None = None,
) -> TradingCalendar:
    """Trading calendar implied by a quote set: every distinct quoted date,
    optionally restricted to one calendar year."""
    if isinstance(quotes, Mapping):
        it: Iterable[RawQuote] = (q for qs in quotes.values() for q in qs)
    else:
        it = quotes
    dates = {q.date for q in it if year is None or q.date.year == year}
    if len(dates) < 2:
        raise EmptyUniverseError(f"no trading dates found for year {year}")
    return TradingCalendar(tuple(sorted(dates)))
