"""Verification gates between stages.

Structured agent output is never trusted: every cited symbol must exist
in the pinned snapshot, every cited metric value must match the engine's
own number, and every candidate list must respect its bounds.  Gates
raise; they never silently repair.
"""
from __future__ import annotations

from collections import Counter
from typing import Iterable, Mapping

from ..errors import (
    CardinalityViolation,
    MetricMismatch,
    UnknownSymbolCited,
)
from ..metrics.types import METRIC_NAMES, CohortBenchmark, MetricVector, Unavailable
from .types import (
    AllocationCaps,
    AnalysisShortlist,
    CAP_TOL,
    DELTA_TOL,
    METRIC_TOL,
    PortfolioAllocation,
    Position,
    ScreeningShortlist,
    StageBounds,
    TimingDecision,
    TimingSlate,
    WEIGHT_SUM_TOL,
)


def _require_snapshot_symbols(symbols: Iterable[str], universe: frozenset, where: str) -> None:
    unknown = sorted({s for s in symbols if s not in universe})
    if unknown:
        raise UnknownSymbolCited(
            f"{where} cites symbols outside the pinned snapshot: {', '.join(unknown)}"
        )


def _require_unique(symbols: list[str], where: str) -> None:
    dupes = sorted(s for s, n in Counter(symbols).items() if n > 1)
    if dupes:
        raise CardinalityViolation(f"{where} lists duplicate symbols: {', '.join(dupes)}")


def _check_cited_metrics(
    symbol: str, cited: Mapping[str, float], vectors: Mapping[str, MetricVector], where: str
) -> None:
    vector = vectors.get(symbol)
    if vector is None:
        raise UnknownSymbolCited(f"{where}: no metrics exist for {symbol}")
    for name, claimed in cited.items():
        if name not in METRIC_NAMES:
            raise MetricMismatch(f"{where}: {symbol} cites unknown metric {name!r}")
        actual = vector.value(name)
        if isinstance(actual, Unavailable):
            raise MetricMismatch(
                f"{where}: {symbol} cites {name} which is unavailable ({actual.reason})"
            )
        if abs(claimed - actual) > METRIC_TOL:
            raise MetricMismatch(
                f"{where}: {symbol} cites {name}={claimed!r} but the engine "
                f"computed {actual!r} (tolerance {METRIC_TOL})"
            )


def validate_screening(
    report_candidates: list[Mapping],
    *,
    as_of: str,
    universe: frozenset,
    vectors: Mapping[str, MetricVector],
    bounds: StageBounds,
) -> ScreeningShortlist:
    n = len(report_candidates)
    if not (bounds.screen_min <= n <= bounds.screen_max):
        raise CardinalityViolation(
            f"screening kept {n} tickers, requires {bounds.screen_min} "
            f"to {bounds.screen_max}"
        )
    symbols = [c["symbol"] for c in report_candidates]
    _require_unique(symbols, "screening shortlist")
    _require_snapshot_symbols(symbols, universe, "screening shortlist")
    for c in report_candidates:
        _check_cited_metrics(c["symbol"], c.get("cited_metrics", {}), vectors, "screening")
    return ScreeningShortlist(as_of=as_of, symbols=tuple(symbols))


def validate_analysis(
    report_candidates: list[Mapping],
    *,
    as_of: str,
    universe: frozenset,
    allowed: frozenset,
    vectors: Mapping[str, MetricVector],
    benchmark: CohortBenchmark,
    bounds: StageBounds,
) -> AnalysisShortlist:
    n = len(report_candidates)
    if not (bounds.analysis_min <= n <= bounds.analysis_max):
        raise CardinalityViolation(
            f"analysis kept {n} entries, requires {bounds.analysis_min} "
            f"to {bounds.analysis_max}"
        )
    symbols = [c["symbol"] for c in report_candidates]
    _require_unique(symbols, "analysis shortlist")
    _require_snapshot_symbols(symbols, universe, "analysis shortlist")
    outside = sorted({s for s in symbols if s not in allowed})
    if outside:
        raise UnknownSymbolCited(
            "analysis shortlist cites symbols outside the screening shortlist "
            f"and prior holdings: {', '.join(outside)}"
        )
    for c in report_candidates:
        _check_cited_metrics(c["symbol"], c.get("cited_metrics", {}), vectors, "analysis")
        for name, delta in c.get("cohort_delta", {}).items():
            cited = c.get("cited_metrics", {}).get(name)
            if cited is None:
                raise MetricMismatch(
                    f"analysis: {c['symbol']} reports a cohort delta for "
                    f"{name} without citing the metric itself"
                )
            mean = benchmark.means.get(name)
            if isinstance(mean, Unavailable) or mean is None:
                raise MetricMismatch(
                    f"analysis: {c['symbol']} reports a cohort delta for "
                    f"{name} but the cohort mean is unavailable"
                )
            expected = cited - mean
            if abs(delta - expected) > DELTA_TOL:
                raise MetricMismatch(
                    f"analysis: {c['symbol']} cohort delta for {name} is "
                    f"{delta!r}, expected {expected!r} (tolerance {DELTA_TOL})"
                )
    return AnalysisShortlist(as_of=as_of, entries=tuple(dict(c) for c in report_candidates))


def validate_timing(
    report_candidates: list[Mapping],
    *,
    as_of: str,
    universe: frozenset,
    allowed: frozenset,
    vectors: Mapping[str, MetricVector],
    bounds: StageBounds,
) -> TimingSlate:
    symbols = [c["symbol"] for c in report_candidates]
    _require_unique(symbols, "timing slate")
    _require_snapshot_symbols(symbols, universe, "timing slate")
    outside = sorted({s for s in symbols if s not in allowed})
    if outside:
        raise UnknownSymbolCited(
            f"timing slate cites symbols outside the analysis shortlist: "
            f"{', '.join(outside)}"
        )
    for c in report_candidates:
        _check_cited_metrics(c["symbol"], c.get("cited_metrics", {}), vectors, "timing")
    buys = [c for c in report_candidates if c["action"] == "buy"]
    if not (bounds.buy_min <= len(buys) <= bounds.buy_max):
        histogram = Counter(
            flag for c in report_candidates for flag in c.get("risk_flags", [])
        )
        hist_text = ", ".join(f"{k}={v}" for k, v in sorted(histogram.items())) or "none"
        raise CardinalityViolation(
            f"timing issued {len(buys)} buys, requires {bounds.buy_min} to "
            f"{bounds.buy_max}; risk-flag histogram: {hist_text}"
        )
    decisions = tuple(
        TimingDecision(
            symbol=c["symbol"],
            action=c["action"],
            confidence=float(c["confidence"]),
            risk_flags=tuple(c.get("risk_flags", [])),
        )
        for c in report_candidates
    )
    return TimingSlate(as_of=as_of, decisions=decisions)


def validate_allocation(
    positions: list[Mapping],
    *,
    as_of: str,
    universe: frozenset,
    eligible: frozenset,
    sector_map: Mapping[str, str],
    caps: AllocationCaps,
    bounds: StageBounds,
    diagnostics: Mapping | None = None,
) -> PortfolioAllocation:
    n = len(positions)
    if n > bounds.positions_max:
        raise CardinalityViolation(
            f"portfolio holds {n} positions, allows at most {bounds.positions_max}"
        )
    if n < bounds.positions_min:
        raise CardinalityViolation(
            f"portfolio holds {n} positions, requires at least {bounds.positions_min}"
        )
    symbols = [p["symbol"] for p in positions]
    _require_unique(symbols, "portfolio")
    _require_snapshot_symbols(symbols, universe, "portfolio")
    outside = sorted({s for s in symbols if s not in eligible})
    if outside:
        raise UnknownSymbolCited(
            f"portfolio holds symbols the timing stage did not mark as buys: "
            f"{', '.join(outside)}"
        )
    total = 0.0
    for p in positions:
        weight = float(p["weight"])
        if weight <= 0.0:
            raise CardinalityViolation(
                f"portfolio weight for {p['symbol']} is {weight!r}, must be positive"
            )
        if weight > caps.max_weight + CAP_TOL:
            raise CardinalityViolation(
                f"portfolio weight for {p['symbol']} is {weight!r}, cap is "
                f"{caps.max_weight}"
            )
        expected_sector = sector_map.get(p["symbol"])
        if expected_sector is not None and p["sector"] != expected_sector:
            raise MetricMismatch(
                f"portfolio labels {p['symbol']} as {p['sector']!r} but the "
                f"sector map says {expected_sector!r}"
            )
        total += weight
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise CardinalityViolation(
            f"portfolio weights sum to {total!r}, must be 1.0 within {WEIGHT_SUM_TOL}"
        )
    shares: dict[str, float] = {}
    for p in positions:
        shares[p["sector"]] = shares.get(p["sector"], 0.0) + float(p["weight"])
    for sector in sorted(shares):
        if shares[sector] > caps.max_sector_share + CAP_TOL:
            raise CardinalityViolation(
                f"sector {sector} holds {shares[sector]!r} of the book, cap is "
                f"{caps.max_sector_share}"
            )
    return PortfolioAllocation(
        as_of=as_of,
        positions=tuple(
            Position(
                symbol=p["symbol"],
                weight=float(p["weight"]),
                sector=p["sector"],
                rationale=p.get("rationale", ""),
            )
            for p in positions
        ),
        diagnostics=dict(diagnostics or {}),
    )
