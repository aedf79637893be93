"""Deterministic synthetic market data for fixtures and offline demos.

Generates weekday OHLCV random walks plus headline streams with a seeded
numpy generator, then writes them in the fixture-provider layout. Used by
the test suite and by the `gen-fixtures` CLI command; never by live runs.
"""

from __future__ import annotations

from datetime import date, datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from ..util import atomic_write_text
from .types import NewsHeadline, PriceBar, PriceSeries, headlines_to_json

SECTORS = [
    "technology", "healthcare", "financials", "energy",
    "consumer", "industrials", "materials", "utilities",
]

BENCHMARKS = ("SPY", "QQQ", "DIA")

_POSITIVE_BITS = [
    "beats quarterly estimates", "announces record revenue", "wins major contract",
    "receives analyst upgrade", "expands into new markets", "reports strong demand",
    "raises full-year guidance", "posts surprise profit",
]
_NEGATIVE_BITS = [
    "misses earnings forecast", "faces regulatory warning", "announces layoffs",
    "receives analyst downgrade", "issues recall", "reports weak demand",
    "cuts guidance amid slowdown", "hit by supply shortfall",
]
_NEUTRAL_BITS = [
    "schedules investor day", "appoints new board member", "files annual report",
    "presents at industry conference", "announces dividend unchanged",
    "completes routine audit", "renews credit facility",
]
_SOURCES = ["NewsWire", "MarketDesk", "DailyTape", "StreetBrief"]


def weekday_sessions(start: date, count: int) -> list[date]:
    out: list[date] = []
    d = start
    while len(out) < count:
        if d.weekday() < 5:
            out.append(d)
        d += timedelta(days=1)
    return out


def synth_ticker_symbols(n: int) -> list[str]:
    """SY00, SY01, ... stable synthetic symbols."""
    return [f"SY{i:03d}" for i in range(n)]


def generate_price_bars(
    symbol: str, sessions: list[date], rng: np.random.Generator, *, start_price: float | None = None
) -> list[PriceBar]:
    n = len(sessions)
    if start_price is None:
        start_price = float(rng.uniform(8.0, 420.0))
    drift = float(rng.normal(0.0004, 0.0012))
    vol = float(rng.uniform(0.008, 0.035))
    rets = rng.normal(drift, vol, size=n)
    closes = start_price * np.exp(np.cumsum(rets))
    closes = np.maximum(closes, 0.25)
    base_volume = int(rng.integers(50_000, 5_000_000))
    bars = []
    for i, day in enumerate(sessions):
        close = round(float(closes[i]), 6)
        prev = float(closes[i - 1]) if i > 0 else start_price
        open_ = round(max(0.9 * min(prev, close), prev * float(rng.uniform(0.995, 1.005))), 6)
        spread = abs(close - open_) + close * float(rng.uniform(0.002, 0.02))
        high = round(max(open_, close) + spread * float(rng.uniform(0.0, 0.6)), 6)
        low = round(max(min(open_, close) - spread * float(rng.uniform(0.0, 0.6)), 0.01), 6)
        high = max(high, open_, close)
        low = min(low, open_, close)
        volume = max(0, int(base_volume * float(rng.lognormal(0.0, 0.35))))
        bars.append(PriceBar(
            date=day,
            open=open_, high=high, low=low,
            close=close, adjusted_close=close,
            volume=volume,
        ))
    return bars


def generate_headlines(
    symbol: str, sessions: list[date], rng: np.random.Generator, *, tone: float
) -> list[NewsHeadline]:
    """A handful of headlines spread over the session range.

    ``tone`` in [-1, 1] biases positive vs negative wording so sentiment
    scans have something to find.
    """
    count = int(rng.integers(4, 10))
    picks = sorted(rng.choice(len(sessions), size=min(count, len(sessions)), replace=False).tolist())
    out = []
    for idx in picks:
        day = sessions[idx]
        roll = float(rng.uniform(-1, 1))
        if roll < tone - 0.3:
            bit = _POSITIVE_BITS[int(rng.integers(len(_POSITIVE_BITS)))]
        elif roll > tone + 0.3:
            bit = _NEGATIVE_BITS[int(rng.integers(len(_NEGATIVE_BITS)))]
        else:
            bit = _NEUTRAL_BITS[int(rng.integers(len(_NEUTRAL_BITS)))]
        published = datetime(day.year, day.month, day.day, tzinfo=timezone.utc) + timedelta(
            hours=int(rng.integers(6, 23)), minutes=int(rng.integers(0, 60))
        )
        out.append(NewsHeadline(
            ticker=symbol,
            published_at=published,
            headline=f"{symbol} {bit}",
            source=_SOURCES[int(rng.integers(len(_SOURCES)))],
            url=f"https://news.example/{symbol.lower()}/{day.isoformat()}",
        ))
    return out


def generate_fixture_dir(
    root: Path,
    *,
    n_tickers: int = 120,
    sessions: int = 110,
    start: date = date(2025, 1, 6),
    seed: int = 7,
    include_benchmarks: bool = True,
) -> Path:
    """Write a full fixture-provider tree plus a universe.csv sector map.

    The generated history deliberately extends to the end of the session
    range so callers can pick an as-of date strictly inside it and exercise
    the look-ahead gate against genuinely present future bars.
    """
    root = Path(root)
    rng = np.random.default_rng(seed)
    days = weekday_sessions(start, sessions)
    symbols = synth_ticker_symbols(n_tickers)

    universe_rows = ["symbol,sector"]
    for i, sym in enumerate(symbols):
        sector = SECTORS[i % len(SECTORS)]
        universe_rows.append(f"{sym},{sector}")
        bars = generate_price_bars(sym, days, rng)
        series = PriceSeries(sym, tuple(bars), as_of=days[-1])
        atomic_write_text(root / "prices" / f"{sym}.csv", series.to_csv())
        tone = float(np.tanh((bars[-1].adjusted_close / bars[0].adjusted_close - 1.0) * 4.0))
        heads = generate_headlines(sym, days, rng, tone=tone)
        atomic_write_text(root / "headlines" / f"{sym}.json", headlines_to_json(heads) + "\n")

    if include_benchmarks:
        for sym in BENCHMARKS:
            bars = generate_price_bars(sym, days, rng, start_price=float(rng.uniform(150, 500)))
            series = PriceSeries(sym, tuple(bars), as_of=days[-1])
            atomic_write_text(root / "prices" / f"{sym}.csv", series.to_csv())

    atomic_write_text(root / "universe.csv", "\n".join(universe_rows) + "\n")
    return root
