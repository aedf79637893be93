"""Metric vectors, cohort benchmarks, and the computations behind them."""
from .engine import (
    DEFAULT_CONFIG,
    TRADING_DAYS,
    MetricConfig,
    annualized_volatility,
    beta_alpha,
    compute_cohort,
    compute_metric_vector,
    horizon_return,
    max_drawdown,
    price_vs_ma,
    regression_slope,
    rolling_zscore,
    rsi,
    sharpe_ratio,
    sortino_ratio,
    volume_trend,
)
from .types import (
    METRIC_NAMES,
    CohortBenchmark,
    MetricValue,
    MetricVector,
    Unavailable,
    benchmark_of,
    metric_from_json,
    metric_to_json,
)

__all__ = [
    "DEFAULT_CONFIG",
    "METRIC_NAMES",
    "TRADING_DAYS",
    "CohortBenchmark",
    "MetricConfig",
    "MetricValue",
    "MetricVector",
    "Unavailable",
    "annualized_volatility",
    "benchmark_of",
    "beta_alpha",
    "compute_cohort",
    "compute_metric_vector",
    "horizon_return",
    "max_drawdown",
    "metric_from_json",
    "metric_to_json",
    "price_vs_ma",
    "regression_slope",
    "rolling_zscore",
    "rsi",
    "sharpe_ratio",
    "sortino_ratio",
    "volume_trend",
]
