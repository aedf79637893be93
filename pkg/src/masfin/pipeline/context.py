"""Context assembly for each pipeline stage.

Context is plain JSON-ready data: agents see exactly what lands in their
prompt, and the scripted rules see exactly the same object.  Metric
values come straight from the engine so that honest agents can cite them
byte for byte.
"""
from __future__ import annotations

from typing import Mapping

from ..marketdata.types import DelistedCorpusEntry, Snapshot
from ..metrics.types import CohortBenchmark, MetricVector
from .types import AllocationCaps, StageBounds, TimingSlate

ROW_HEADLINE_LIMIT = 5


def _metric_fields(vector: MetricVector) -> dict:
    fields = vector.to_dict()
    fields.pop("ticker")
    fields.pop("as_of")
    return fields


def ticker_rows(
    symbols: list[str],
    snapshot: Snapshot,
    vectors: Mapping[str, MetricVector],
    sector_map: Mapping[str, str],
    held: frozenset = frozenset(),
) -> list[dict]:
    rows = []
    for symbol in sorted(symbols):
        heads = sorted(
            snapshot.headlines.get(symbol, ()),
            key=lambda h: (h.published_at, h.headline),
            reverse=True,
        )
        rows.append({
            "symbol": symbol,
            "sector": sector_map.get(symbol, "unknown"),
            "held": symbol in held,
            "metrics": _metric_fields(vectors[symbol]),
            "headlines": [h.headline for h in heads[:ROW_HEADLINE_LIMIT]],
        })
    return rows


def global_headlines(snapshot: Snapshot, symbols: list[str]) -> list[dict]:
    items = []
    for symbol in symbols:
        for h in snapshot.headlines.get(symbol, ()):
            items.append({
                "ticker": h.ticker,
                "published_at": h.published_at.isoformat().replace("+00:00", "Z"),
                "headline": h.headline,
                "source": h.source,
            })
    return sorted(items, key=lambda d: (d["published_at"], d["headline"]), reverse=True)


def postmortem_context(as_of: str, corpus: list[DelistedCorpusEntry]) -> dict:
    return {
        "stage": 1,
        "as_of": as_of,
        "corpus": [
            {
                "ticker": e.ticker,
                "sector": e.sector,
                "reason": e.reason,
                "date_range": e.date_range,
                "headlines": [h.headline for h in e.headlines],
            }
            for e in sorted(corpus, key=lambda e: e.ticker)
        ],
    }


def screening_context(
    snapshot: Snapshot,
    vectors: Mapping[str, MetricVector],
    sector_map: Mapping[str, str],
    risk_themes: list,
    bounds: StageBounds,
) -> dict:
    universe = sorted(snapshot.universe)
    return {
        "stage": 2,
        "as_of": snapshot.as_of.isoformat(),
        "universe": universe,
        "tickers": ticker_rows(universe, snapshot, vectors, sector_map),
        "headlines": global_headlines(snapshot, universe),
        "risk_themes": risk_themes,
        "bounds": {"min": bounds.screen_min, "max": bounds.screen_max},
    }


def analysis_context(
    snapshot: Snapshot,
    vectors: Mapping[str, MetricVector],
    sector_map: Mapping[str, str],
    benchmark: CohortBenchmark,
    screening_symbols: list[str],
    held: frozenset,
    bounds: StageBounds,
) -> dict:
    symbols = sorted(set(screening_symbols) | held)
    return {
        "stage": 3,
        "as_of": snapshot.as_of.isoformat(),
        "tickers": ticker_rows(symbols, snapshot, vectors, sector_map, held),
        "benchmark": benchmark.to_dict()["means"],
        "benchmark_counts": benchmark.to_dict()["counts"],
        "headlines": global_headlines(snapshot, symbols),
        "bounds": {"min": bounds.analysis_min, "max": bounds.analysis_max},
    }


def timing_context(
    snapshot: Snapshot,
    vectors: Mapping[str, MetricVector],
    sector_map: Mapping[str, str],
    analysis_entries: list[Mapping],
    held: frozenset,
    bounds: StageBounds,
) -> dict:
    symbols = sorted({e["symbol"] for e in analysis_entries})
    return {
        "stage": 4,
        "as_of": snapshot.as_of.isoformat(),
        "tickers": ticker_rows(symbols, snapshot, vectors, sector_map, held),
        "analysis": [dict(e) for e in analysis_entries],
        "headlines": global_headlines(snapshot, symbols),
        "bounds": {"buy_min": bounds.buy_min, "buy_max": bounds.buy_max},
    }


def portfolio_context(
    snapshot: Snapshot,
    vectors: Mapping[str, MetricVector],
    sector_map: Mapping[str, str],
    slate: TimingSlate,
    held: frozenset,
    bounds: StageBounds,
    caps: AllocationCaps,
) -> dict:
    confidence = {d.symbol: d.confidence for d in slate.decisions}
    eligible = sorted(slate.buys)
    rows = ticker_rows(eligible, snapshot, vectors, sector_map, held)
    for row in rows:
        row["confidence"] = confidence[row["symbol"]]
    return {
        "stage": 5,
        "as_of": snapshot.as_of.isoformat(),
        "tickers": rows,
        "caps": {
            "max_weight": caps.max_weight,
            "max_sector_share": caps.max_sector_share,
        },
        "bounds": {"min": bounds.positions_min, "max": bounds.positions_max},
    }
