"""Shared fixtures: synthetic market data and run configuration."""
from __future__ import annotations

from datetime import date
from pathlib import Path

import pytest

from masfin.config import ProviderConfig, RunConfig
from masfin.marketdata.synthetic import generate_fixture_dir, weekday_sessions
from masfin.marketdata.types import PriceBar, PriceSeries

FIXTURE_SEED = 11
FIXTURE_TICKERS = 130
FIXTURE_SESSIONS = 110
FIXTURE_START = date(2025, 1, 6)
AS_OF = date(2025, 6, 2)


@pytest.fixture(scope="session")
def fixture_root(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("fixtures")
    return generate_fixture_dir(
        root / "market",
        n_tickers=FIXTURE_TICKERS,
        sessions=FIXTURE_SESSIONS,
        start=FIXTURE_START,
        seed=FIXTURE_SEED,
    )


@pytest.fixture(scope="session")
def universe_file(fixture_root: Path) -> Path:
    return fixture_root / "universe.csv"


@pytest.fixture
def run_config(fixture_root: Path, universe_file: Path, tmp_path: Path) -> RunConfig:
    return RunConfig(
        universe_file=str(universe_file),
        as_of=AS_OF,
        backend="scripted",
        seed=7,
        auto_approve=False,
        out_dir=str(tmp_path / "data"),
        provider=ProviderConfig(kind="fixture", fixture_dir=str(fixture_root)),
    )


def make_series(
    ticker: str,
    closes,
    *,
    volumes=None,
    start: date = date(2025, 1, 6),
    as_of: date | None = None,
) -> PriceSeries:
    """Flat-bar series where every OHLC field equals the close."""
    sessions = weekday_sessions(start, len(closes))
    if volumes is None:
        volumes = [10_000 + 13 * i for i in range(len(closes))]
    bars = tuple(
        PriceBar(
            date=sessions[i],
            open=closes[i],
            high=closes[i],
            low=closes[i],
            close=closes[i],
            adjusted_close=closes[i],
            volume=int(volumes[i]),
        )
        for i in range(len(closes))
    )
    return PriceSeries(ticker=ticker, bars=bars, as_of=as_of or sessions[-1])
