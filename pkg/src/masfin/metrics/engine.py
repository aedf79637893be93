"""Technical metric computations over daily price history.

All price inputs are adjusted closes.  Windowed metrics demand their full
window; a shorter series raises InsufficientHistory rather than degrading
silently.  Annualization uses 252 trading sessions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from datetime import date

import numpy as np

from ..errors import (
    DegenerateBenchmark,
    InsufficientHistory,
    InsufficientOverlap,
    MasfinError,
    NoDownside,
    ZeroVolatility,
    ZeroVolume,
)
from ..marketdata.types import PriceSeries
from .types import METRIC_NAMES, CohortBenchmark, MetricValue, MetricVector, Unavailable, benchmark_of

TRADING_DAYS = 252


@dataclass(frozen=True)
class MetricConfig:
    """Window lengths (in sessions) and rate conventions."""

    return_long: int = 21
    return_short: int = 5
    volatility: int = 21
    drawdown: int = 21
    sharpe: int = 21
    sortino: int = 21
    beta: int = 63
    rsi: int = 14
    zscore_window: int = 5
    zscore_baseline: int = 21
    volume_trend: int = 21
    regression: int = 21
    ma: int = 5
    risk_free_annual: float = 0.0
    benchmark_ticker: str = "SPY"

    def with_risk_free(self, rate: float) -> "MetricConfig":
        return replace(self, risk_free_annual=rate)


DEFAULT_CONFIG = MetricConfig()


def _adj(series: PriceSeries) -> np.ndarray:
    return np.asarray(series.adjusted_closes(), dtype=float)


def _need(series: PriceSeries, bars: int, what: str) -> None:
    if len(series.bars) < bars:
        raise InsufficientHistory(
            f"{what}: {series.ticker} has {len(series.bars)} bars, needs {bars}"
        )


def _daily_returns(prices: np.ndarray) -> np.ndarray:
    return prices[1:] / prices[:-1] - 1.0


def _ols_slope(y: np.ndarray) -> float:
    # Regression of y against x = 0..n-1, closed form.
    n = y.size
    x = np.arange(n, dtype=float)
    xm = x.mean()
    ym = y.mean()
    denom = float(((x - xm) ** 2).sum())
    return float(((x - xm) * (y - ym)).sum() / denom)


def horizon_return(series: PriceSeries, sessions: int) -> float:
    """Simple return over the trailing `sessions` sessions."""
    if sessions < 1:
        raise ValueError("sessions must be >= 1")
    _need(series, sessions + 1, f"return_{sessions}d")
    adj = _adj(series)
    return float(adj[-1] / adj[-1 - sessions] - 1.0)


def annualized_volatility(series: PriceSeries, window: int) -> float:
    """Sample standard deviation of daily returns, scaled by sqrt(252)."""
    _need(series, window + 1, "volatility")
    rets = _daily_returns(_adj(series)[-(window + 1):])
    return float(np.std(rets, ddof=1) * math.sqrt(TRADING_DAYS))


def max_drawdown(series: PriceSeries, window: int) -> float:
    """Largest peak-to-trough decline over the window, as a positive fraction."""
    _need(series, window + 1, "max_drawdown")
    adj = _adj(series)[-(window + 1):]
    peaks = np.maximum.accumulate(adj)
    return float(np.max((peaks - adj) / peaks))


def sharpe_ratio(series: PriceSeries, window: int, risk_free_annual: float = 0.0) -> float:
    _need(series, window + 1, "sharpe")
    rets = _daily_returns(_adj(series)[-(window + 1):])
    sd = float(np.std(rets, ddof=1))
    if sd == 0.0:
        raise ZeroVolatility(f"sharpe: {series.ticker} returns have zero dispersion")
    excess = rets - risk_free_annual / TRADING_DAYS
    return float(excess.mean() / sd * math.sqrt(TRADING_DAYS))


def sortino_ratio(series: PriceSeries, window: int, risk_free_annual: float = 0.0) -> float:
    _need(series, window + 1, "sortino")
    rets = _daily_returns(_adj(series)[-(window + 1):])
    excess = rets - risk_free_annual / TRADING_DAYS
    downside = np.minimum(excess, 0.0)
    if not np.any(downside < 0.0):
        raise NoDownside(f"sortino: {series.ticker} has no below-target returns")
    dd = math.sqrt(float((downside ** 2).mean()))
    return float(excess.mean() / dd * math.sqrt(TRADING_DAYS))


def _returns_by_date(series: PriceSeries) -> dict[date, float]:
    adj = _adj(series)
    rets = _daily_returns(adj)
    dates = series.dates()
    return {dates[i + 1]: float(rets[i]) for i in range(rets.size)}


def beta_alpha(series: PriceSeries, benchmark: PriceSeries, window: int) -> tuple[float, float]:
    """OLS of ticker daily returns on benchmark daily returns.

    Returns are matched by session date; the regression runs over the most
    recent `window` common sessions.  Alpha is the daily intercept times 252.
    """
    _need(series, window + 1, "beta")
    own = _returns_by_date(series)
    bench = _returns_by_date(benchmark)
    common = sorted(own.keys() & bench.keys())
    if len(common) < window:
        raise InsufficientOverlap(
            f"beta: {series.ticker} shares {len(common)} sessions with "
            f"{benchmark.ticker}, needs {window}"
        )
    tail = common[-window:]
    y = np.array([own[d] for d in tail])
    x = np.array([bench[d] for d in tail])
    xm = float(x.mean())
    denom = float(((x - xm) ** 2).sum())
    if denom == 0.0:
        raise DegenerateBenchmark(
            f"beta: {benchmark.ticker} returns are constant over the window"
        )
    beta = float(((x - xm) * (y - y.mean())).sum() / denom)
    alpha_daily = float(y.mean() - beta * xm)
    return beta, alpha_daily * TRADING_DAYS


def rsi(series: PriceSeries, window: int = 14) -> float:
    """Wilder's relative strength index over the whole series.

    Averages are seeded with simple means over the first `window` changes,
    then smoothed recursively.  A change-free average loss maps to 100.
    """
    _need(series, window + 1, "rsi")
    adj = _adj(series)
    deltas = np.diff(adj)
    gains = np.maximum(deltas, 0.0)
    losses = np.maximum(-deltas, 0.0)
    avg_gain = float(gains[:window].mean())
    avg_loss = float(losses[:window].mean())
    for i in range(window, deltas.size):
        avg_gain = (avg_gain * (window - 1) + float(gains[i])) / window
        avg_loss = (avg_loss * (window - 1) + float(losses[i])) / window
    if avg_loss == 0.0:
        return 100.0
    if avg_gain == 0.0:
        return 0.0
    rs = avg_gain / avg_loss
    return float(100.0 - 100.0 / (1.0 + rs))


def rolling_zscore(series: PriceSeries, window: int, baseline: int) -> float:
    """Latest `window`-session return versus the prior `baseline` such returns.

    The baseline excludes the latest observation; its sample mean and
    standard deviation standardize the newest return.
    """
    _need(series, window + baseline + 1, "zscore")
    adj = _adj(series)
    # Rolling window-session returns, newest last.
    rolled = adj[window:] / adj[:-window] - 1.0
    latest = float(rolled[-1])
    hist = rolled[-(baseline + 1):-1]
    mu = float(hist.mean())
    sd = float(np.std(hist, ddof=1))
    if sd == 0.0:
        raise ZeroVolatility(f"zscore: {series.ticker} baseline returns have zero dispersion")
    return (latest - mu) / sd


def volume_trend(series: PriceSeries, window: int) -> float:
    """Slope of daily volume over the window, normalized by mean volume."""
    _need(series, window, "volume_trend")
    vols = np.asarray(series.volumes(), dtype=float)[-window:]
    mean = float(vols.mean())
    if mean == 0.0:
        raise ZeroVolume(f"volume_trend: {series.ticker} traded no volume in the window")
    return _ols_slope(vols) / mean


def price_vs_ma(series: PriceSeries, window: int) -> float:
    """Last close relative to its `window`-session moving average, minus one."""
    _need(series, window, "price_vs_ma")
    adj = _adj(series)[-window:]
    return float(adj[-1] / adj.mean() - 1.0)


def regression_slope(series: PriceSeries, window: int) -> float:
    """OLS slope of adjusted close over the window, per session, normalized
    by the window's opening price."""
    _need(series, window, "regression_slope")
    adj = _adj(series)[-window:]
    return _ols_slope(adj) / float(adj[0])


def compute_metric_vector(
    series: PriceSeries,
    benchmark: PriceSeries | None = None,
    config: MetricConfig = DEFAULT_CONFIG,
) -> MetricVector:
    """Evaluate every metric, tagging the ones that cannot resolve.

    Raises InsufficientHistory only if nothing at all resolves.
    """
    values: dict[str, MetricValue] = {}

    def attempt(name: str, fn) -> None:
        try:
            values[name] = float(fn())
        except MasfinError as exc:
            values[name] = Unavailable(reason=str(exc))

    attempt("return_21d", lambda: horizon_return(series, config.return_long))
    attempt("return_5d", lambda: horizon_return(series, config.return_short))
    values["momentum_21d"] = values["return_21d"]
    attempt("volatility_ann", lambda: annualized_volatility(series, config.volatility))
    attempt("max_drawdown", lambda: max_drawdown(series, config.drawdown))
    attempt("sharpe", lambda: sharpe_ratio(series, config.sharpe, config.risk_free_annual))
    attempt("sortino", lambda: sortino_ratio(series, config.sortino, config.risk_free_annual))

    if benchmark is None:
        missing = Unavailable(reason="beta: no benchmark series supplied")
        values["beta"] = missing
        values["alpha_ann"] = Unavailable(reason="alpha: no benchmark series supplied")
    else:
        try:
            b, a = beta_alpha(series, benchmark, config.beta)
            values["beta"] = b
            values["alpha_ann"] = a
        except MasfinError as exc:
            values["beta"] = Unavailable(reason=str(exc))
            values["alpha_ann"] = Unavailable(reason=str(exc))

    attempt("rsi_14", lambda: rsi(series, config.rsi))
    attempt("zscore_5d", lambda: rolling_zscore(series, config.zscore_window, config.zscore_baseline))
    attempt("volume_trend", lambda: volume_trend(series, config.volume_trend))
    attempt("price_vs_ma5", lambda: price_vs_ma(series, config.ma))
    attempt("regression_slope", lambda: regression_slope(series, config.regression))

    if all(isinstance(v, Unavailable) for v in values.values()):
        raise InsufficientHistory(
            f"{series.ticker}: {len(series.bars)} bars resolve no metric at all"
        )
    return MetricVector(ticker=series.ticker, as_of=series.as_of.isoformat(), **values)


def compute_cohort(
    series_by_ticker: dict[str, PriceSeries],
    benchmark: PriceSeries | None,
    config: MetricConfig = DEFAULT_CONFIG,
) -> tuple[dict[str, MetricVector], CohortBenchmark]:
    """Metric vectors for a cohort plus their cross-sectional means."""
    vectors: dict[str, MetricVector] = {}
    as_of = ""
    for ticker in sorted(series_by_ticker):
        vec = compute_metric_vector(series_by_ticker[ticker], benchmark, config)
        vectors[ticker] = vec
        as_of = vec.as_of
    bench = benchmark_of(list(vectors.values()), as_of)
    return vectors, bench


__all__ = [
    "DEFAULT_CONFIG",
    "METRIC_NAMES",
    "MetricConfig",
    "TRADING_DAYS",
    "annualized_volatility",
    "beta_alpha",
    "compute_cohort",
    "compute_metric_vector",
    "horizon_return",
    "max_drawdown",
    "price_vs_ma",
    "regression_slope",
    "rolling_zscore",
    "rsi",
    "sharpe_ratio",
    "sortino_ratio",
    "volume_trend",
]
