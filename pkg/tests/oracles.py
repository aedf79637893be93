"""Brute-force reference implementations for the metric suite.

Deliberately written as plain Python loops with no shared code (and no
numpy) so that an error in the production engine cannot hide in a shared
helper. Each oracle returns a float, or None when the metric should be
reported as unavailable for that input.
"""
from __future__ import annotations

import math

ANNUAL = 252


def _mean(xs) -> float:
    return sum(xs) / len(xs)


def _sample_std(xs) -> float:
    n = len(xs)
    m = _mean(xs)
    return math.sqrt(sum((x - m) ** 2 for x in xs) / (n - 1))


def _line_slope(ys) -> float:
    n = len(ys)
    xs = list(range(n))
    xm = _mean(xs)
    ym = _mean(ys)
    num = sum((xs[i] - xm) * (ys[i] - ym) for i in range(n))
    den = sum((x - xm) ** 2 for x in xs)
    return num / den


def _daily_returns(prices) -> list[float]:
    return [prices[i] / prices[i - 1] - 1.0 for i in range(1, len(prices))]


def oracle_horizon_return(adj, sessions: int) -> float | None:
    if len(adj) < sessions + 1:
        return None
    return adj[-1] / adj[-1 - sessions] - 1.0


def oracle_volatility(adj, window: int) -> float | None:
    if len(adj) < window + 1:
        return None
    rets = _daily_returns(adj[-(window + 1):])
    return _sample_std(rets) * math.sqrt(ANNUAL)


def oracle_max_drawdown(adj, window: int) -> float | None:
    if len(adj) < window + 1:
        return None
    tail = adj[-(window + 1):]
    peak = tail[0]
    worst = 0.0
    for price in tail:
        if price > peak:
            peak = price
        dd = (peak - price) / peak
        if dd > worst:
            worst = dd
    return worst


def oracle_sharpe(adj, window: int, risk_free_annual: float = 0.0) -> float | None:
    if len(adj) < window + 1:
        return None
    rets = _daily_returns(adj[-(window + 1):])
    sd = _sample_std(rets)
    if sd == 0.0:
        return None
    rf_daily = risk_free_annual / ANNUAL
    excess = [r - rf_daily for r in rets]
    return _mean(excess) / sd * math.sqrt(ANNUAL)


def oracle_sortino(adj, window: int, risk_free_annual: float = 0.0) -> float | None:
    if len(adj) < window + 1:
        return None
    rets = _daily_returns(adj[-(window + 1):])
    rf_daily = risk_free_annual / ANNUAL
    excess = [r - rf_daily for r in rets]
    downside = [min(e, 0.0) for e in excess]
    if not any(d < 0.0 for d in downside):
        return None
    dd = math.sqrt(_mean([d * d for d in downside]))
    return _mean(excess) / dd * math.sqrt(ANNUAL)


def oracle_beta_alpha(own_dates, own_adj, bench_dates, bench_adj, window: int):
    """(beta, alpha) or (None, None); returns joined on session date."""
    if len(own_adj) < window + 1:
        return None, None
    own = {}
    for i in range(1, len(own_adj)):
        own[own_dates[i]] = own_adj[i] / own_adj[i - 1] - 1.0
    bench = {}
    for i in range(1, len(bench_adj)):
        bench[bench_dates[i]] = bench_adj[i] / bench_adj[i - 1] - 1.0
    common = sorted(d for d in own if d in bench)
    if len(common) < window:
        return None, None
    tail = common[-window:]
    ys = [own[d] for d in tail]
    xs = [bench[d] for d in tail]
    xm = _mean(xs)
    ym = _mean(ys)
    den = sum((x - xm) ** 2 for x in xs)
    if den == 0.0:
        return None, None
    beta = sum((xs[i] - xm) * (ys[i] - ym) for i in range(window)) / den
    alpha_daily = ym - beta * xm
    return beta, alpha_daily * ANNUAL


def oracle_rsi(adj, window: int = 14) -> float | None:
    if len(adj) < window + 1:
        return None
    gains = []
    losses = []
    for i in range(1, len(adj)):
        change = adj[i] - adj[i - 1]
        gains.append(max(change, 0.0))
        losses.append(max(-change, 0.0))
    avg_gain = _mean(gains[:window])
    avg_loss = _mean(losses[:window])
    for i in range(window, len(gains)):
        avg_gain = (avg_gain * (window - 1) + gains[i]) / window
        avg_loss = (avg_loss * (window - 1) + losses[i]) / window
    if avg_loss == 0.0:
        return 100.0
    if avg_gain == 0.0:
        return 0.0
    return 100.0 - 100.0 / (1.0 + avg_gain / avg_loss)


def oracle_zscore(adj, window: int, baseline: int) -> float | None:
    if len(adj) < window + baseline + 1:
        return None
    rolled = [adj[i] / adj[i - window] - 1.0 for i in range(window, len(adj))]
    latest = rolled[-1]
    hist = rolled[-(baseline + 1):-1]
    mu = _mean(hist)
    sd = _sample_std(hist)
    if sd == 0.0:
        return None
    return (latest - mu) / sd


def oracle_volume_trend(volumes, window: int) -> float | None:
    if len(volumes) < window:
        return None
    tail = [float(v) for v in volumes[-window:]]
    mean = _mean(tail)
    if mean == 0.0:
        return None
    return _line_slope(tail) / mean


def oracle_price_vs_ma(adj, window: int) -> float | None:
    if len(adj) < window:
        return None
    tail = adj[-window:]
    return tail[-1] / _mean(tail) - 1.0


def oracle_regression_slope(adj, window: int) -> float | None:
    if len(adj) < window:
        return None
    tail = adj[-window:]
    return _line_slope(tail) / tail[0]


def oracle_vector(dates, adj, volumes, bench_dates, bench_adj, *,
                  risk_free_annual: float = 0.0) -> dict:
    """Every metric by name, with None marking unavailable values."""
    beta, alpha = (None, None)
    if bench_adj is not None:
        beta, alpha = oracle_beta_alpha(dates, adj, bench_dates, bench_adj, 63)
    r21 = oracle_horizon_return(adj, 21)
    return {
        "return_21d": r21,
        "return_5d": oracle_horizon_return(adj, 5),
        "momentum_21d": r21,
        "volatility_ann": oracle_volatility(adj, 21),
        "max_drawdown": oracle_max_drawdown(adj, 21),
        "sharpe": oracle_sharpe(adj, 21, risk_free_annual),
        "sortino": oracle_sortino(adj, 21, risk_free_annual),
        "beta": beta,
        "alpha_ann": alpha,
        "rsi_14": oracle_rsi(adj, 14),
        "zscore_5d": oracle_zscore(adj, 5, 21),
        "volume_trend": oracle_volume_trend(volumes, 21),
        "price_vs_ma5": oracle_price_vs_ma(adj, 5),
        "regression_slope": oracle_regression_slope(adj, 21),
    }
