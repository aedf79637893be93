"""Weekly performance accounting over published runs."""
from .harvest import build_price_book, collect_allocations, evaluate_runs
from .report import (
    BENCHMARK_TICKERS,
    GROWTH_HEADER,
    PriceBook,
    RISKRETURN_HEADER,
    SERIES_ORDER,
    WeekSpan,
    build_report,
    correlation,
    cumulative_return,
    emit_report,
    growth_path,
    render_growth_csv,
    render_riskreturn_csv,
    week_spans,
    weekly_portfolio_return,
    weekly_series,
    weekly_volatility,
    win_rate,
)

__all__ = [
    "BENCHMARK_TICKERS",
    "GROWTH_HEADER",
    "PriceBook",
    "RISKRETURN_HEADER",
    "SERIES_ORDER",
    "WeekSpan",
    "build_price_book",
    "build_report",
    "collect_allocations",
    "correlation",
    "cumulative_return",
    "emit_report",
    "evaluate_runs",
    "growth_path",
    "render_growth_csv",
    "render_riskreturn_csv",
    "week_spans",
    "weekly_portfolio_return",
    "weekly_series",
    "weekly_volatility",
    "win_rate",
]
