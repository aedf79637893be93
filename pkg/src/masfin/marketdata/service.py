"""Fetch, cache, and snapshot-pin market data.

The look-ahead gate is enforced here, in one place: whatever a provider
returns, nothing dated after the request's as-of date ever leaves this
module. Fetches are cached on disk so a later run with the network down
reproduces the same data, and snapshots are immutable directories with a
content digest.
"""

from __future__ import annotations

import logging
import shutil
import tempfile
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path

from ..errors import (
    InsufficientHistory,
    PartialFetchFailure,
    ProviderUnavailable,
    SnapshotIntegrityError,
)
from ..util import (
    atomic_write_text,
    canonical_json,
    end_of_day_utc,
    iso_ts,
    parse_ts,
    read_json,
    sha256_hex,
    start_of_day_utc,
    utcnow,
    write_json,
)
from .providers import DataProvider
from .types import NewsHeadline, PriceSeries, Snapshot, headlines_to_json

log = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


@dataclass
class SnapshotSpec:
    """What to pin: candidate universe plus benchmark tracking series."""

    universe: list[str]
    as_of: date
    window_days: int
    headline_lookback_days: int = 7
    benchmarks: tuple[str, ...] = ("SPY", "QQQ", "DIA")


class MarketDataService:
    """Provider + on-disk cache, exposing gated fetch and snapshot pinning."""

    def __init__(self, provider: DataProvider, cache_dir: Path | None, *, max_workers: int = 8):
        self.provider = provider
        self.cache_dir = Path(cache_dir) if cache_dir is not None else None
        self.max_workers = max_workers
        self._write_lock = threading.Lock()

    # -- price history -----------------------------------------------------

    def fetch_price_history(
        self, ticker: str, as_of: date, window_days: int, *, min_sessions: int = 1
    ) -> PriceSeries:
        """Bars with date <= as_of, at most the last window_days sessions.

        "Days" means trading sessions present in the provider data; absent
        weekends/holidays are simply not counted.
        """
        if window_days < 1:
            raise ValueError("window_days must be >= 1")
        cached = self._cache_read_series(ticker, as_of, window_days)
        if cached is not None:
            series = cached
        else:
            try:
                bars = self.provider.fetch_bars(ticker)
            except ProviderUnavailable:
                raise
            visible = [b for b in bars if b.date <= as_of]
            visible.sort(key=lambda b: b.date)
            series = PriceSeries(ticker, tuple(visible[-window_days:]), as_of)
            self._cache_write_series(series, window_days)
        if len(series) < min_sessions:
            raise InsufficientHistory(
                f"{ticker}: {len(series)} session(s) <= {as_of}, need {min_sessions}"
            )
        return series

    # -- headlines ---------------------------------------------------------

    def fetch_headlines(self, ticker: str, as_of: date, lookback_days: int) -> list[NewsHeadline]:
        """Headlines published in [as_of - lookback_days, end of as_of day UTC],
        newest first. A boundary headline at 23:59 UTC on as_of is included."""
        if lookback_days < 1:
            raise ValueError("lookback_days must be >= 1")
        cached = self._cache_read_headlines(ticker, as_of, lookback_days)
        if cached is not None:
            return cached
        raw = self.provider.fetch_news(ticker)
        start = start_of_day_utc(as_of - timedelta(days=lookback_days))
        end = end_of_day_utc(as_of)
        kept = [h for h in raw if start <= h.published_at <= end]
        kept.sort(key=lambda h: (h.published_at, h.headline), reverse=True)
        self._cache_write_headlines(ticker, as_of, lookback_days, kept)
        return kept

    # -- snapshots ---------------------------------------------------------

    def pin_snapshot(self, spec: SnapshotSpec, dest_dir: Path) -> Snapshot:
        """Fetch and freeze series + headlines for a whole universe.

        Fetches fan out across a thread pool; if any ticker fails the
        snapshot is not written and PartialFetchFailure lists the failures.
        """
        universe = list(spec.universe)
        if not universe:
            raise ValueError("universe must be non-empty")
        if len(set(universe)) != len(universe):
            dupes = sorted({t for t in universe if universe.count(t) > 1})
            raise ValueError(f"universe contains duplicates: {', '.join(dupes)}")
        universe = sorted(universe)
        bench = [b for b in spec.benchmarks if b not in set(universe)]

        series: dict[str, PriceSeries] = {}
        headlines: dict[str, tuple[NewsHeadline, ...]] = {}
        failures: dict[str, str] = {}

        def fetch_one(ticker: str, with_news: bool) -> None:
            try:
                series[ticker] = self.fetch_price_history(ticker, spec.as_of, spec.window_days)
                if with_news:
                    headlines[ticker] = tuple(
                        self.fetch_headlines(ticker, spec.as_of, spec.headline_lookback_days)
                    )
            except Exception as exc:  # collected, reported together
                failures[ticker] = f"{type(exc).__name__}: {exc}"

        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            for t in universe:
                pool.submit(fetch_one, t, True)
            for t in bench:
                pool.submit(fetch_one, t, False)

        if failures:
            raise PartialFetchFailure(failures)

        return write_snapshot(dest_dir, spec.as_of, universe, series, headlines)

    # -- cache internals ---------------------------------------------------

    def _series_cache_path(self, ticker: str, as_of: date, window_days: int) -> Path | None:
        if self.cache_dir is None:
            return None
        return self.cache_dir / "prices" / ticker / f"{as_of.isoformat()}_w{window_days}.csv"

    def _headline_cache_path(self, ticker: str, as_of: date, lookback: int) -> Path | None:
        if self.cache_dir is None:
            return None
        return self.cache_dir / "headlines" / ticker / f"{as_of.isoformat()}_l{lookback}.json"

    def _cache_read_series(self, ticker: str, as_of: date, window_days: int) -> PriceSeries | None:
        path = self._series_cache_path(ticker, as_of, window_days)
        if path is None or not path.is_file():
            return None
        return PriceSeries.from_csv(ticker, path.read_text(encoding="utf-8"), as_of)

    def _cache_write_series(self, series: PriceSeries, window_days: int) -> None:
        path = self._series_cache_path(series.ticker, series.as_of, window_days)
        if path is None:
            return
        with self._write_lock:
            atomic_write_text(path, series.to_csv())

    def _cache_read_headlines(self, ticker: str, as_of: date, lookback: int) -> list[NewsHeadline] | None:
        path = self._headline_cache_path(ticker, as_of, lookback)
        if path is None or not path.is_file():
            return None
        return [NewsHeadline.from_dict(d) for d in read_json(path)]

    def _cache_write_headlines(
        self, ticker: str, as_of: date, lookback: int, items: list[NewsHeadline]
    ) -> None:
        path = self._headline_cache_path(ticker, as_of, lookback)
        if path is None:
            return
        with self._write_lock:
            atomic_write_text(path, headlines_to_json(items) + "\n")


# -- snapshot persistence ----------------------------------------------------

def _snapshot_digest(as_of: date, universe: list[str], files: dict[str, str]) -> str:
    return sha256_hex(canonical_json({
        "as_of": as_of.isoformat(),
        "universe": sorted(universe),
        "files": files,
    }))


def write_snapshot(
    dest_dir: Path,
    as_of: date,
    universe: list[str],
    series: dict[str, PriceSeries],
    headlines: dict[str, tuple[NewsHeadline, ...]],
) -> Snapshot:
    """Persist a snapshot directory atomically (staged then renamed)."""
    dest_dir = Path(dest_dir)
    file_digests: dict[str, str] = {}
    payloads: dict[str, str] = {}
    for ticker in sorted(series):
        rel = f"series/{ticker}.csv"
        text = series[ticker].to_csv()
        payloads[rel] = text
        file_digests[rel] = sha256_hex(text)
    for ticker in sorted(universe):
        rel = f"headlines/{ticker}.json"
        text = headlines_to_json(list(headlines.get(ticker, ()))) + "\n"
        payloads[rel] = text
        file_digests[rel] = sha256_hex(text)

    digest = _snapshot_digest(as_of, universe, file_digests)
    snapshot_id = f"snap-{digest[:12]}"
    created_at = utcnow()

    if dest_dir.exists() and (dest_dir / MANIFEST_NAME).is_file():
        existing = read_json(dest_dir / MANIFEST_NAME)
        if existing.get("digest") == digest:
            return load_snapshot(dest_dir)
        raise SnapshotIntegrityError(f"{dest_dir} already holds a different snapshot")

    staging = Path(tempfile.mkdtemp(prefix=".snap-", dir=dest_dir.parent if dest_dir.parent.exists() else None))
    try:
        for rel, text in payloads.items():
            atomic_write_text(staging / rel, text)
        write_json(staging / MANIFEST_NAME, {
            "snapshot_id": snapshot_id,
            "as_of": as_of.isoformat(),
            "universe": sorted(universe),
            "digest": digest,
            "created_at": iso_ts(created_at),
        }, pretty=True)
        dest_dir.parent.mkdir(parents=True, exist_ok=True)
        if dest_dir.exists():
            shutil.rmtree(staging)
            return load_snapshot(dest_dir)
        staging.replace(dest_dir)
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise

    return Snapshot(
        snapshot_id=snapshot_id,
        as_of=as_of,
        universe=tuple(sorted(universe)),
        series=dict(series),
        headlines={t: tuple(headlines.get(t, ())) for t in universe},
        created_at=created_at,
        digest=digest,
    )


def load_snapshot(snap_dir: Path) -> Snapshot:
    """Reload a pinned snapshot, verifying the content digest."""
    snap_dir = Path(snap_dir)
    manifest = read_json(snap_dir / MANIFEST_NAME)
    as_of = date.fromisoformat(manifest["as_of"])
    universe = list(manifest["universe"])

    series: dict[str, PriceSeries] = {}
    file_digests: dict[str, str] = {}
    for path in sorted((snap_dir / "series").glob("*.csv")):
        ticker = path.stem
        text = path.read_text(encoding="utf-8")
        file_digests[f"series/{ticker}.csv"] = sha256_hex(text)
        series[ticker] = PriceSeries.from_csv(ticker, text, as_of)
    headlines: dict[str, tuple[NewsHeadline, ...]] = {}
    for ticker in sorted(universe):
        path = snap_dir / "headlines" / f"{ticker}.json"
        text = path.read_text(encoding="utf-8")
        file_digests[f"headlines/{ticker}.json"] = sha256_hex(text)
        headlines[ticker] = tuple(NewsHeadline.from_dict(d) for d in read_json(path))

    digest = _snapshot_digest(as_of, universe, file_digests)
    if digest != manifest["digest"]:
        raise SnapshotIntegrityError(
            f"{snap_dir}: digest mismatch (manifest {manifest['digest'][:12]}, computed {digest[:12]})"
        )
    return Snapshot(
        snapshot_id=manifest["snapshot_id"],
        as_of=as_of,
        universe=tuple(universe),
        series=series,
        headlines=headlines,
        created_at=parse_ts(manifest["created_at"]),
        digest=digest,
    )
