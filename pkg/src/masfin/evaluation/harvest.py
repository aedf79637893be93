"""Collects published allocations and prices them for the report."""
from __future__ import annotations

from datetime import date, timedelta
from pathlib import Path

from ..errors import DataError, EmptySeries, EvaluationError
from ..marketdata.service import MarketDataService
from ..pipeline.runner import (
    ALLOCATION_JSON,
    PUBLISHED,
    RUN_FILE,
    RunState,
    stage_dir_name,
)
from ..pipeline.types import PortfolioAllocation
from ..util import read_json
from .report import (
    BENCHMARK_TICKERS,
    FINAL_WEEK_DAYS,
    PriceBook,
    emit_report,
    week_spans,
    weekly_series,
)


def collect_allocations(runs_root: str | Path) -> list[tuple[date, dict[str, float]]]:
    """Published allocations under a runs directory, ordered by as-of date."""
    runs_root = Path(runs_root)
    found: list[tuple[date, dict[str, float]]] = []
    if not runs_root.is_dir():
        raise EmptySeries(f"no runs directory at {runs_root}")
    for entry in sorted(runs_root.iterdir()):
        state_path = entry / RUN_FILE
        if not state_path.is_file():
            continue
        state = RunState.from_dict(read_json(state_path))
        if state.status != PUBLISHED:
            continue
        alloc_path = entry / stage_dir_name(5) / ALLOCATION_JSON
        allocation = PortfolioAllocation.from_dict(read_json(alloc_path))
        weights = {p.symbol: p.weight for p in allocation.positions}
        found.append((date.fromisoformat(state.as_of), weights))
    if not found:
        raise EmptySeries(f"no published runs under {runs_root}")
    return sorted(found, key=lambda pair: pair[0])


def build_price_book(
    service: MarketDataService,
    allocations: list[tuple[date, dict[str, float]]],
    *,
    final_week_days: int = FINAL_WEEK_DAYS,
    margin_days: int = 10,
) -> PriceBook:
    """Price history wide enough to mark every holding period."""
    symbols: set[str] = set(BENCHMARK_TICKERS.values())
    for _, weights in allocations:
        symbols.update(weights)
    first = allocations[0][0]
    final = allocations[-1][0] + timedelta(days=final_week_days)
    window_days = (final - first).days + margin_days
    series = {}
    try:
        for symbol in sorted(symbols):
            series[symbol] = service.fetch_price_history(symbol, final, window_days)
    except DataError as exc:
        raise EvaluationError(f"price data unavailable: {exc}") from exc
    return PriceBook(series)


def evaluate_runs(
    runs_root: str | Path,
    out_dir: str | Path,
    service: MarketDataService,
) -> dict:
    """End-to-end: published runs in, growth/riskreturn/report files out."""
    allocations = collect_allocations(runs_root)
    spans = week_spans(allocations)
    book = build_price_book(service, allocations)
    returns = weekly_series(spans, book)
    return emit_report(out_dir, returns)
