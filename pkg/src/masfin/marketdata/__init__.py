from .types import DelistedCorpusEntry, NewsHeadline, PriceBar, PriceSeries, Snapshot
from .providers import (
    CompositeProvider,
    DataProvider,
    FixtureProvider,
    GatedProvider,
    HttpNewsProvider,
    HttpQuoteProvider,
)
from .service import MarketDataService, SnapshotSpec, load_snapshot, write_snapshot
from .corpus import load_bundled_corpus, load_delisted_corpus
from .synthetic import generate_fixture_dir

__all__ = [
    "CompositeProvider",
    "DataProvider",
    "DelistedCorpusEntry",
    "FixtureProvider",
    "GatedProvider",
    "HttpNewsProvider",
    "HttpQuoteProvider",
    "MarketDataService",
    "NewsHeadline",
    "PriceBar",
    "PriceSeries",
    "Snapshot",
    "SnapshotSpec",
    "generate_fixture_dir",
    "load_bundled_corpus",
    "load_delisted_corpus",
    "load_snapshot",
    "write_snapshot",
]
