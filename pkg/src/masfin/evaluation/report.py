"""Performance accounting for published allocations.

Each published run holds a portfolio for one week: from its as-of date to
the next run's as-of date (the final week closes seven calendar days out).
Benchmarks are single-asset portfolios pushed through the same return
arithmetic, so a tracker holding exactly one benchmark correlates 1.0
with it by construction.

All arithmetic is plain float; no numpy here. The figures are small and
the point is auditability, not speed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path
from typing import Mapping, Sequence

from ..errors import DegenerateSeries, EmptySeries, LengthMismatch, MissingPrice
from ..marketdata.types import PriceSeries
from ..util import atomic_write_text, write_json

GROWTH_HEADER = "week,masfin,spy,qqq,dia"
RISKRETURN_HEADER = "series,weekly_volatility,cumulative_return"
SERIES_ORDER = ("masfin", "spy", "qqq", "dia")
BENCHMARK_TICKERS = {"spy": "SPY", "qqq": "QQQ", "dia": "DIA"}
FINAL_WEEK_DAYS = 7


def weekly_portfolio_return(
    weights: Mapping[str, float],
    start_prices: Mapping[str, float],
    end_prices: Mapping[str, float],
) -> float:
    """Weight-averaged simple return between two price marks."""
    missing = [s for s in weights if s not in start_prices or s not in end_prices]
    if missing:
        raise MissingPrice(missing)
    return sum(
        w * (end_prices[s] / start_prices[s] - 1.0) for s, w in weights.items()
    )


def cumulative_return(returns: Sequence[float]) -> float:
    acc = 1.0
    for r in returns:
        acc *= 1.0 + r
    return acc - 1.0


def win_rate(returns: Sequence[float]) -> float:
    """Share of strictly positive weeks."""
    if not returns:
        raise EmptySeries("win rate needs at least one weekly return")
    return sum(1 for r in returns if r > 0) / len(returns)


def weekly_volatility(returns: Sequence[float]) -> float:
    # Sample standard deviation; a single week has no spread to measure.
    n = len(returns)
    if n < 2:
        raise DegenerateSeries(f"volatility needs two weekly returns, got {n}")
    mean = sum(returns) / n
    var = sum((r - mean) ** 2 for r in returns) / (n - 1)
    return math.sqrt(var)


def correlation(a: Sequence[float], b: Sequence[float]) -> float:
    if len(a) != len(b):
        raise LengthMismatch(f"series lengths differ: {len(a)} vs {len(b)}")
    n = len(a)
    if n < 2:
        raise DegenerateSeries(f"correlation needs two points, got {n}")
    mean_a = sum(a) / n
    mean_b = sum(b) / n
    da = [x - mean_a for x in a]
    db = [y - mean_b for y in b]
    var_a = sum(x * x for x in da)
    var_b = sum(y * y for y in db)
    if var_a == 0.0 or var_b == 0.0:
        raise DegenerateSeries("correlation undefined for a flat series")
    return sum(x * y for x, y in zip(da, db)) / math.sqrt(var_a * var_b)


def growth_path(returns: Sequence[float]) -> list[float]:
    """Cumulative growth factors starting at 1.0 (one row per week end)."""
    path = [1.0]
    for r in returns:
        path.append(path[-1] * (1.0 + r))
    return path


def render_growth_csv(returns_by_series: Mapping[str, Sequence[float]]) -> str:
    paths = {name: growth_path(returns_by_series[name]) for name in SERIES_ORDER}
    weeks = len(paths["masfin"])
    for name in SERIES_ORDER:
        if len(paths[name]) != weeks:
            raise LengthMismatch(
                f"{name} covers {len(paths[name]) - 1} weeks, masfin {weeks - 1}"
            )
    lines = [GROWTH_HEADER]
    for week in range(weeks):
        cells = [str(week)] + [repr(paths[name][week]) for name in SERIES_ORDER]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def render_riskreturn_csv(returns_by_series: Mapping[str, Sequence[float]]) -> str:
    lines = [RISKRETURN_HEADER]
    for name in SERIES_ORDER:
        returns = returns_by_series[name]
        lines.append(
            f"{name},{repr(weekly_volatility(returns))},{repr(cumulative_return(returns))}"
        )
    return "\n".join(lines) + "\n"


def build_report(returns_by_series: Mapping[str, Sequence[float]]) -> dict:
    own = returns_by_series["masfin"]
    report: dict = {
        "weeks": len(own),
        "weekly_returns": {
            name: list(returns_by_series[name]) for name in SERIES_ORDER
        },
        "cumulative_return": {
            name: cumulative_return(returns_by_series[name]) for name in SERIES_ORDER
        },
        "weekly_volatility": {
            name: weekly_volatility(returns_by_series[name]) for name in SERIES_ORDER
        },
        "win_rate": win_rate(own),
        "correlation": {
            name: correlation(own, returns_by_series[name])
            for name in SERIES_ORDER
            if name != "masfin"
        },
    }
    return report


def emit_report(out_dir: str | Path, returns_by_series: Mapping[str, Sequence[float]]) -> dict:
    """Write growth.csv, riskreturn.csv, and report.json; return the report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out / "growth.csv", render_growth_csv(returns_by_series))
    atomic_write_text(out / "riskreturn.csv", render_riskreturn_csv(returns_by_series))
    report = build_report(returns_by_series)
    write_json(out / "report.json", report, pretty=True)
    return report


class PriceBook:
    """Mark-to-market lookups over pinned price histories."""

    def __init__(self, series: Mapping[str, PriceSeries]):
        self._series = dict(series)

    def price_on(self, symbol: str, on: date) -> float | None:
        series = self._series.get(symbol)
        if series is None:
            return None
        # Last session at or before the mark date.
        best: float | None = None
        for bar in series.bars:
            if bar.date > on:
                break
            best = bar.adjusted_close
        return best

    def marks(self, symbols: Sequence[str], on: date) -> dict[str, float]:
        out: dict[str, float] = {}
        missing: list[str] = []
        for symbol in symbols:
            price = self.price_on(symbol, on)
            if price is None:
                missing.append(symbol)
            else:
                out[symbol] = price
        if missing:
            raise MissingPrice(missing)
        return out


@dataclass(frozen=True)
class WeekSpan:
    start: date
    end: date
    weights: Mapping[str, float]


def week_spans(
    allocations: Sequence[tuple[date, Mapping[str, float]]],
    *,
    final_week_days: int = FINAL_WEEK_DAYS,
) -> list[WeekSpan]:
    """One holding period per allocation, closed by the next allocation."""
    if not allocations:
        raise EmptySeries("no published allocations to evaluate")
    ordered = sorted(allocations, key=lambda pair: pair[0])
    spans = []
    for i, (start, weights) in enumerate(ordered):
        if i + 1 < len(ordered):
            end = ordered[i + 1][0]
        else:
            end = start + timedelta(days=final_week_days)
        spans.append(WeekSpan(start=start, end=end, weights=dict(weights)))
    return spans


def weekly_series(
    spans: Sequence[WeekSpan],
    book: PriceBook,
    *,
    benchmarks: Mapping[str, str] = BENCHMARK_TICKERS,
) -> dict[str, list[float]]:
    """Weekly returns for the portfolio and each single-asset benchmark."""
    out: dict[str, list[float]] = {"masfin": []}
    for name in benchmarks:
        out[name] = []
    for span in spans:
        symbols = sorted(span.weights)
        start_prices = book.marks(symbols, span.start)
        end_prices = book.marks(symbols, span.end)
        out["masfin"].append(
            weekly_portfolio_return(span.weights, start_prices, end_prices)
        )
        for name, ticker in benchmarks.items():
            weights = {ticker: 1.0}
            out[name].append(weekly_portfolio_return(
                weights,
                book.marks([ticker], span.start),
                book.marks([ticker], span.end),
            ))
    return out
