"""Data layer: look-ahead gates, snapshot integrity, cache, corpus."""
from __future__ import annotations

import json
import random
from datetime import date, datetime, timedelta, timezone
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from masfin.errors import (
    CorpusParseError,
    EmptyCorpus,
    PartialFetchFailure,
    ProviderUnavailable,
    SnapshotIntegrityError,
    UnknownTicker,
)
from masfin.marketdata.corpus import load_bundled_corpus, parse_corpus
from masfin.marketdata.providers import FixtureProvider, GatedProvider
from masfin.marketdata.service import (
    MarketDataService,
    SnapshotSpec,
    load_snapshot,
    write_snapshot,
)
from masfin.marketdata.types import (
    SERIES_CSV_HEADER,
    NewsHeadline,
    PriceBar,
    PriceSeries,
)

from conftest import AS_OF, FIXTURE_START, make_series


def _bar(day: date, price: float = 10.0) -> PriceBar:
    return PriceBar(date=day, open=price, high=price, low=price,
                    close=price, adjusted_close=price, volume=100)


class TestTypes:
    def test_bar_rejects_nonpositive_price(self):
        with pytest.raises(ValueError):
            _bar(date(2025, 1, 6), price=0.0)

    def test_bar_rejects_inconsistent_range(self):
        with pytest.raises(ValueError):
            PriceBar(date=date(2025, 1, 6), open=10.0, high=9.0, low=8.0,
                     close=9.5, adjusted_close=9.5, volume=1)
        with pytest.raises(ValueError):
            PriceBar(date=date(2025, 1, 6), open=10.0, high=11.0, low=10.5,
                     close=10.6, adjusted_close=10.6, volume=1)

    def test_series_rejects_bar_after_as_of(self):
        with pytest.raises(ValueError):
            PriceSeries(
                ticker="X",
                bars=(_bar(date(2025, 1, 10)),),
                as_of=date(2025, 1, 9),
            )

    def test_series_rejects_unordered_bars(self):
        with pytest.raises(ValueError):
            PriceSeries(
                ticker="X",
                bars=(_bar(date(2025, 1, 8)), _bar(date(2025, 1, 7))),
                as_of=date(2025, 1, 9),
            )

    def test_series_csv_round_trip(self):
        series = make_series("RT", [10.0, 10.5, 11.25, 10.875])
        text = series.to_csv()
        assert text.splitlines()[0] == ",".join(SERIES_CSV_HEADER)
        back = PriceSeries.from_csv("RT", text, as_of=series.as_of)
        assert back.to_csv() == text
        assert back.adjusted_closes() == series.adjusted_closes()


class TestLookAhead:
    @settings(max_examples=60, deadline=None)
    @given(offset=st.integers(min_value=0, max_value=160),
           window=st.integers(min_value=1, max_value=120))
    def test_history_never_leaks_future_bars(self, fixture_root, offset, window):
        service = MarketDataService(FixtureProvider(fixture_root), cache_dir=None)
        as_of = FIXTURE_START + timedelta(days=offset)
        try:
            series = service.fetch_price_history("SY000", as_of, window)
        except Exception:
            return  # insufficient history for very early dates is fine here
        assert all(bar.date <= as_of for bar in series.bars)
        assert len(series.bars) <= window

    def test_headline_window_is_closed_on_both_ends(self, fixture_root):
        service = MarketDataService(FixtureProvider(fixture_root), cache_dir=None)
        as_of = AS_OF
        lookback = 7
        headlines = service.fetch_headlines("SY000", as_of, lookback)
        lo = datetime(as_of.year, as_of.month, as_of.day, tzinfo=timezone.utc) \
            - timedelta(days=lookback)
        hi = datetime(as_of.year, as_of.month, as_of.day, 23, 59, 59,
                      999999, tzinfo=timezone.utc)
        for h in headlines:
            assert lo <= h.published_at <= hi
        stamps = [h.published_at for h in headlines]
        assert stamps == sorted(stamps, reverse=True)

    def test_headlines_after_as_of_are_dropped(self, fixture_root, tmp_path):
        # Rewrite one ticker's headlines with a future item and re-fetch.
        src = json.loads((fixture_root / "headlines" / "SY001.json").read_text())
        future = dict(src[0])
        future["published_at"] = "2099-01-01T09:00:00Z"
        tampered_root = tmp_path / "tampered"
        tampered_root.mkdir()
        (tampered_root / "prices").symlink_to(fixture_root / "prices")
        (tampered_root / "headlines").mkdir()
        (tampered_root / "headlines" / "SY001.json").write_text(
            json.dumps(src + [future])
        )
        service = MarketDataService(FixtureProvider(tampered_root), cache_dir=None)
        headlines = service.fetch_headlines("SY001", AS_OF, 7)
        assert all(h.published_at.year < 2099 for h in headlines)


class TestSnapshot:
    def _spec(self, n=4):
        universe = [f"SY{i:03d}" for i in range(n)]
        return SnapshotSpec(universe=universe, as_of=AS_OF, window_days=40)

    def test_pin_load_round_trip(self, fixture_root, tmp_path):
        service = MarketDataService(FixtureProvider(fixture_root), cache_dir=None)
        snap = service.pin_snapshot(self._spec(), tmp_path / "snap")
        loaded = load_snapshot(tmp_path / "snap")
        assert loaded.snapshot_id == snap.snapshot_id
        assert loaded.universe == snap.universe
        assert set(loaded.series) == set(snap.series)
        assert "SPY" in loaded.series  # benchmarks ride along

    def test_pin_is_idempotent(self, fixture_root, tmp_path):
        service = MarketDataService(FixtureProvider(fixture_root), cache_dir=None)
        first = service.pin_snapshot(self._spec(), tmp_path / "snap")
        again = service.pin_snapshot(self._spec(), tmp_path / "snap")
        assert first.snapshot_id == again.snapshot_id

    def test_tampered_file_is_detected(self, fixture_root, tmp_path):
        service = MarketDataService(FixtureProvider(fixture_root), cache_dir=None)
        service.pin_snapshot(self._spec(), tmp_path / "snap")
        victim = tmp_path / "snap" / "series" / "SY000.csv"
        victim.write_text(victim.read_text().replace("7", "8", 1))
        with pytest.raises(SnapshotIntegrityError):
            load_snapshot(tmp_path / "snap")

    def test_conflicting_snapshot_refused(self, fixture_root, tmp_path):
        service = MarketDataService(FixtureProvider(fixture_root), cache_dir=None)
        service.pin_snapshot(self._spec(3), tmp_path / "snap")
        with pytest.raises(SnapshotIntegrityError):
            service.pin_snapshot(self._spec(5), tmp_path / "snap")

    def test_partial_failure_names_every_ticker(self, fixture_root, tmp_path):
        service = MarketDataService(FixtureProvider(fixture_root), cache_dir=None)
        spec = SnapshotSpec(universe=["SY000", "NOPE1", "NOPE2"],
                            as_of=AS_OF, window_days=40)
        with pytest.raises(PartialFetchFailure) as err:
            service.pin_snapshot(spec, tmp_path / "snap")
        assert set(err.value.failures) == {"NOPE1", "NOPE2"}

    def test_write_snapshot_digest_ignores_wall_clock(self, tmp_path):
        series = {"AAA": make_series("AAA", [10.0, 10.5, 11.0])}
        head = {"AAA": (NewsHeadline(
            ticker="AAA", headline="AAA wins major contract",
            published_at=datetime(2025, 1, 7, 9, tzinfo=timezone.utc),
            source="wire"),)}
        as_of = series["AAA"].as_of
        one = write_snapshot(tmp_path / "s1", as_of, ["AAA"], series, head)
        two = write_snapshot(tmp_path / "s2", as_of, ["AAA"], series, head)
        assert one.snapshot_id == two.snapshot_id


class TestCache:
    def test_cache_survives_provider_outage(self, fixture_root, tmp_path):
        gated = GatedProvider(FixtureProvider(fixture_root))
        service = MarketDataService(gated, cache_dir=tmp_path / "cache")
        warm = service.fetch_price_history("SY002", AS_OF, 30)
        gated.available = False
        cold = service.fetch_price_history("SY002", AS_OF, 30)
        assert cold.to_csv() == warm.to_csv()
        with pytest.raises(ProviderUnavailable):
            service.fetch_price_history("SY002", AS_OF + timedelta(days=1), 30)

    def test_unknown_ticker_propagates(self, fixture_root, tmp_path):
        service = MarketDataService(FixtureProvider(fixture_root),
                                    cache_dir=tmp_path / "cache")
        with pytest.raises(UnknownTicker):
            service.fetch_price_history("ZZZZTEST", AS_OF, 30)


class TestCorpus:
    def test_bundled_corpus_loads(self):
        corpus = load_bundled_corpus()
        assert len(corpus) == 16
        tickers = [e.ticker for e in corpus]
        assert len(set(tickers)) == 16
        for entry in corpus:
            assert entry.headlines, entry.ticker
            assert entry.reason
            assert entry.sector

    def test_duplicate_ticker_rejected(self):
        entry = {
            "ticker": "DUP", "sector": "tech_other", "reason": "bankruptcy",
            "date_range": "2021-2022",
            "headlines": [{
                "ticker": "DUP", "headline": "DUP faces regulatory warning",
                "published_at": "2021-05-01T12:00:00Z", "source": "wire",
            }],
        }
        with pytest.raises(CorpusParseError):
            parse_corpus([entry, dict(entry)])

    def test_empty_corpus_rejected(self):
        with pytest.raises(EmptyCorpus):
            parse_corpus([])


class TestFuzzLookAhead:
    def test_thousand_random_requests_no_future_rows(self, fixture_root):
        rng = random.Random(424242)
        service = MarketDataService(FixtureProvider(fixture_root), cache_dir=None)
        tickers = [f"SY{i:03d}" for i in range(0, 130, 7)]
        for _ in range(250):
            ticker = rng.choice(tickers)
            as_of = FIXTURE_START + timedelta(days=rng.randrange(20, 170))
            series = service.fetch_price_history(ticker, as_of,
                                                 rng.randrange(5, 90))
            assert all(bar.date <= as_of for bar in series.bars)
            headlines = service.fetch_headlines(ticker, as_of, rng.randrange(1, 14))
            cutoff = datetime(as_of.year, as_of.month, as_of.day, 23, 59, 59,
                              999999, tzinfo=timezone.utc)
            assert all(h.published_at <= cutoff for h in headlines)
