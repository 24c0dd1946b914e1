"""Divisor-maintained, capitalization-weighted index computation.

The index level at time t is the total constituent market cap (price x
shares summed over constituents) divided by the divisor D.  D is fixed at
the base date as base cap / base level, so the base-date level equals the
base level B exactly, and is rescaled by the cap ratio M_new / M_old
whenever a non-trading event (share change, delisting, rights or bonus
issue) moves the constituent cap; the ratio form makes the level exactly
continuous at the event instant.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

from .errors import (
    DegenerateUniverseError,
    MissingPriceError,
    ParameterError,
    ParseError,
)

ACTION_KINDS = ("share_change", "delisting", "rights_or_bonus_issue")

DEFAULT_BASE_LEVEL = 1000.0


@dataclass(frozen=True)
class Constituent:
    ticker: str
    shares_issued: float

    def __post_init__(self):
        if not self.shares_issued > 0:
            raise ParameterError(f"{self.ticker}: shares_issued must be > 0")


@dataclass(frozen=True)
class DivisorState:
    divisor: float
    base_level: float
    base_date: dt.date

    def __post_init__(self):
        if not self.divisor > 0:
            raise ParameterError(f"divisor must be > 0, got {self.divisor}")
        if not self.base_level > 0:
            raise ParameterError(f"base level must be > 0, got {self.base_level}")


@dataclass(frozen=True)
class CorporateAction:
    """A non-trading event that moves constituent market cap.

    ``share_change`` and ``rights_or_bonus_issue`` need ``new_shares``; the
    latter also accepts ``replacement_price`` (theoretical ex price) for the
    post-event cap, defaulting to the event-day price when omitted.
    """

    kind: str
    ticker: str
    effective_date: dt.date
    new_shares: float | None = None
    replacement_price: float | None = None

    def __post_init__(self):
        if self.kind not in ACTION_KINDS:
            raise ParameterError(f"action kind must be one of {ACTION_KINDS}, got {self.kind!r}")
        if self.kind in ("share_change", "rights_or_bonus_issue"):
            if self.new_shares is None or not self.new_shares > 0:
                raise ParameterError(f"{self.kind} on {self.ticker} needs new_shares > 0")
        if self.replacement_price is not None and not self.replacement_price > 0:
            raise ParameterError(f"replacement_price must be > 0 for {self.ticker}")


@dataclass(frozen=True)
class IndexSeries:
    """Daily index levels, with the divisor that produced each level."""

    dates: tuple[dt.date, ...]
    values: tuple[float, ...]
    divisors: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.dates) != len(self.values):
            raise ParameterError("dates and values must have equal length")
        if self.divisors and len(self.divisors) != len(self.dates):
            raise ParameterError("divisors must be empty or match dates")
        if any(v <= 0 for v in self.values):
            raise ParameterError("index levels must be positive")
        if any(a >= b for a, b in zip(self.dates, self.dates[1:])):
            raise ParameterError("series dates must be strictly increasing")


def _price(prices: Mapping[str, float], ticker: str, date) -> float:
    try:
        return prices[ticker]
    except KeyError:
        raise MissingPriceError(ticker, date) from None


def total_cap(prices: Mapping[str, float], constituents: Sequence[Constituent], date=None) -> float:
    return sum(_price(prices, c.ticker, date) * c.shares_issued for c in constituents)


def init_divisor(
    constituents: Sequence[Constituent],
    prices_at_base: Mapping[str, float],
    base_level: float = DEFAULT_BASE_LEVEL,
    base_date: dt.date | None = None,
) -> DivisorState:
    """Fix D so the base-date level equals the base level exactly."""
    if not base_level > 0:
        raise ParameterError(f"base level must be > 0, got {base_level}")
    cap = total_cap(prices_at_base, constituents, base_date)
    if cap <= 0:
        raise DegenerateUniverseError(f"total cap at base is {cap}")
    return DivisorState(
        divisor=cap / base_level,
        base_level=base_level,
        base_date=base_date if base_date is not None else dt.date.min,
    )


def index_value(
    prices_at_t: Mapping[str, float],
    constituents: Sequence[Constituent],
    state: DivisorState,
    date: dt.date | None = None,
) -> float:
    """Level at one instant: total constituent cap / divisor."""
    return total_cap(prices_at_t, constituents, date) / state.divisor


def adjust_divisor(
    state: DivisorState,
    action: CorporateAction,
    prices_at_event: Mapping[str, float],
    constituents: Sequence[Constituent],
) -> tuple[DivisorState, list[Constituent]]:
    """Apply one corporate action: D_new = D_old x M_new / M_old.

    Returns the adjusted state together with the post-event constituent
    list.  The level computed with (post-event caps, D_new) equals the one
    with (pre-event caps, D_old) at the event instant.
    """
    tickers = [c.ticker for c in constituents]
    if action.ticker not in tickers:
        raise ParameterError(f"{action.ticker} is not a constituent on {action.effective_date}")
    m_old = total_cap(prices_at_event, constituents, action.effective_date)
    if m_old <= 0:
        raise DegenerateUniverseError(f"pre-event cap is {m_old} on {action.effective_date}")

    price = _price(prices_at_event, action.ticker, action.effective_date)
    pos = tickers.index(action.ticker)
    old_cap = price * constituents[pos].shares_issued

    if action.kind == "delisting":
        new_list = [c for c in constituents if c.ticker != action.ticker]
        new_cap = 0.0
    elif action.kind == "share_change":
        new_list = list(constituents)
        new_list[pos] = replace(constituents[pos], shares_issued=action.new_shares)
        new_cap = price * action.new_shares
    else:  # rights_or_bonus_issue
        new_list = list(constituents)
        new_list[pos] = replace(constituents[pos], shares_issued=action.new_shares)
        ex_price = action.replacement_price if action.replacement_price is not None else price
        new_cap = ex_price * action.new_shares

    m_new = m_old - old_cap + new_cap
    if m_new <= 0:
        raise DegenerateUniverseError(f"post-event cap is {m_new} on {action.effective_date}")
    new_state = replace(state, divisor=state.divisor * (m_new / m_old))
    return new_state, new_list


def compute_series(
    dates: Sequence[dt.date],
    prices: Mapping[str, Mapping[dt.date, float]],
    constituents: Sequence[Constituent],
    base_level: float = DEFAULT_BASE_LEVEL,
    actions: Sequence[CorporateAction] = (),
) -> IndexSeries:
    """Daily index series over ``dates`` with the base on the first date.

    ``prices`` maps ticker -> date -> close and must cover every constituent
    on every date it is still in the index.  Actions apply in (date, ticker)
    order, each before that day's closing valuation.
    """
    if not dates:
        raise ParameterError("dates must be nonempty")
    for action in actions:
        if not dates[0] <= action.effective_date <= dates[-1]:
            raise ParameterError(
                f"action on {action.ticker} dated {action.effective_date} "
                f"falls outside [{dates[0]}, {dates[-1]}]"
            )
    pending = sorted(actions, key=lambda x: (x.effective_date, x.ticker, x.kind))

    def snapshot(date, members):
        out = {}
        for c in members:
            by_date = prices.get(c.ticker)
            if by_date is None or date not in by_date:
                raise MissingPriceError(c.ticker, date)
            out[c.ticker] = by_date[date]
        return out

    current = list(constituents)
    state = init_divisor(current, snapshot(dates[0], current), base_level, dates[0])

    levels: list[float] = []
    divisors: list[float] = []
    cursor = 0
    for date in dates:
        while cursor < len(pending) and pending[cursor].effective_date <= date:
            action = pending[cursor]
            state, current = adjust_divisor(state, action, snapshot(date, current), current)
            cursor += 1
        levels.append(index_value(snapshot(date, current), current, state, date))
        divisors.append(state.divisor)
    return IndexSeries(dates=tuple(dates), values=tuple(levels), divisors=tuple(divisors))


def write_series_csv(path, series: IndexSeries) -> None:
    """Export ``date,level,divisor`` rows."""
    divisors = series.divisors if series.divisors else (float("nan"),) * len(series.dates)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "level", "divisor"])
        for date, level, div in zip(series.dates, series.values, divisors):
            writer.writerow([date.isoformat(), repr(float(level)), repr(float(div))])


def read_series_csv(path) -> IndexSeries:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        dates, values, divisors = [], [], []
        for line_no, row in enumerate(reader, start=2):
            try:
                dates.append(dt.date.fromisoformat(row["date"]))
                values.append(float(row["level"]))
                divisors.append(float(row["divisor"]))
            except (KeyError, ValueError) as exc:
                raise ParseError(path, line_no, f"bad series row: {exc}") from None
    return IndexSeries(dates=tuple(dates), values=tuple(values), divisors=tuple(divisors))


def read_actions_csv(path) -> list[CorporateAction]:
    """Corporate actions from ``effective_date,ticker,kind,new_shares,replacement_price``."""
    actions = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for line_no, row in enumerate(reader, start=2):
            try:
                new_shares = row.get("new_shares", "").strip()
                repl = row.get("replacement_price", "").strip()
                actions.append(
                    CorporateAction(
                        kind=row["kind"].strip(),
                        ticker=row["ticker"].strip(),
                        effective_date=dt.date.fromisoformat(row["effective_date"].strip()),
                        new_shares=float(new_shares) if new_shares else None,
                        replacement_price=float(repl) if repl else None,
                    )
                )
            except (KeyError, ValueError, ParameterError) as exc:
                raise ParseError(path, line_no, f"bad action row: {exc}") from None
    return actions
