"""Data providers: a common interface, a deterministic fixture provider for
tests and offline runs, and thin HTTP clients for live quote/news services.

All tests run against fixtures; the live clients share the same throttled,
retrying request path but are exercised only against local mock servers.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from datetime import date
from pathlib import Path
from typing import Protocol

import httpx

from ..errors import MissingEnvironment, ProviderUnavailable, UnknownTicker
from .types import NewsHeadline, PriceBar, PriceSeries
from ..util import parse_date, parse_ts

log = logging.getLogger(__name__)


class DataProvider(Protocol):
    """Raw access to everything a provider knows about a ticker.

    Filtering to an as-of date and windowing happen one layer up, in
    MarketDataService, so the look-ahead gate lives in exactly one place.
    """

    def fetch_bars(self, ticker: str) -> list[PriceBar]: ...

    def fetch_news(self, ticker: str) -> list[NewsHeadline]: ...


class Throttle:
    """Minimum inter-request spacing, shared across threads."""

    def __init__(self, min_interval: float):
        self.min_interval = min_interval
        self._lock = threading.Lock()
        self._last = 0.0

    def wait(self) -> None:
        if self.min_interval <= 0:
            return
        with self._lock:
            now = time.monotonic()
            delay = self._last + self.min_interval - now
            if delay > 0:
                time.sleep(delay)
            self._last = time.monotonic()


def request_with_retry(
    client: httpx.Client,
    method: str,
    url: str,
    *,
    throttle: Throttle | None = None,
    attempts: int = 3,
    backoff_base: float = 0.5,
    **kwargs,
) -> httpx.Response:
    """Bounded retry with exponential backoff; raises ProviderUnavailable after
    the final attempt."""
    last: Exception | None = None
    for attempt in range(attempts):
        if throttle is not None:
            throttle.wait()
        try:
            resp = client.request(method, url, **kwargs)
            if resp.status_code >= 500:
                raise ProviderUnavailable(f"{url}: HTTP {resp.status_code}")
            return resp
        except (httpx.HTTPError, ProviderUnavailable) as exc:
            last = exc
            if attempt + 1 < attempts:
                time.sleep(backoff_base * (2 ** attempt))
    raise ProviderUnavailable(f"{url}: {last}") from last


class FixtureProvider:
    """Reads versioned fixture files from a directory:

        <root>/prices/<TICKER>.csv      (full history, may extend past any as_of)
        <root>/headlines/<TICKER>.json  (list of headline objects)

    Deterministic and offline; the reference provider for every test.
    """

    def __init__(self, root: Path):
        self.root = Path(root)
        if not self.root.is_dir():
            raise ProviderUnavailable(f"fixture directory missing: {self.root}")

    def fetch_bars(self, ticker: str) -> list[PriceBar]:
        path = self.root / "prices" / f"{ticker}.csv"
        if not path.is_file():
            raise UnknownTicker(ticker)
        # Reuse the series CSV format but without an as-of gate: parse rows raw.
        text = path.read_text(encoding="utf-8")
        lines = text.splitlines()
        if not lines or lines[0].split(",") != ["date", "open", "high", "low", "close", "adjusted_close", "volume"]:
            raise ProviderUnavailable(f"bad fixture header in {path}")
        bars = []
        for line in lines[1:]:
            if not line.strip():
                continue
            f = line.split(",")
            bars.append(PriceBar(
                date=parse_date(f[0]),
                open=float(f[1]), high=float(f[2]), low=float(f[3]),
                close=float(f[4]), adjusted_close=float(f[5]), volume=int(f[6]),
            ))
        return bars

    def fetch_news(self, ticker: str) -> list[NewsHeadline]:
        path = self.root / "headlines" / f"{ticker}.json"
        if not path.is_file():
            # A priced ticker with no headline file simply has no news.
            if (self.root / "prices" / f"{ticker}.csv").is_file():
                return []
            raise UnknownTicker(ticker)
        items = json.loads(path.read_text(encoding="utf-8"))
        return [NewsHeadline.from_dict(d) for d in items]


class GatedProvider:
    """Wraps a provider with an on/off switch; used to prove cache coherence
    (fetch once live, flip off, fetch again from cache)."""

    def __init__(self, inner: DataProvider):
        self.inner = inner
        self.available = True

    def fetch_bars(self, ticker: str) -> list[PriceBar]:
        if not self.available:
            raise ProviderUnavailable("provider disabled")
        return self.inner.fetch_bars(ticker)

    def fetch_news(self, ticker: str) -> list[NewsHeadline]:
        if not self.available:
            raise ProviderUnavailable("provider disabled")
        return self.inner.fetch_news(ticker)


class HttpQuoteProvider:
    """Live daily-bar client. The endpoint is a URL template with a {ticker}
    placeholder returning the series CSV format."""

    def __init__(self, url_template: str, *, min_interval: float = 0.0,
                 attempts: int = 3, backoff_base: float = 0.5, timeout: float = 10.0):
        self.url_template = url_template
        self.throttle = Throttle(min_interval)
        self.attempts = attempts
        self.backoff_base = backoff_base
        self.client = httpx.Client(timeout=timeout)

    def fetch_bars(self, ticker: str) -> list[PriceBar]:
        url = self.url_template.format(ticker=ticker)
        resp = request_with_retry(
            self.client, "GET", url,
            throttle=self.throttle, attempts=self.attempts, backoff_base=self.backoff_base,
        )
        if resp.status_code == 404:
            raise UnknownTicker(ticker)
        if resp.status_code != 200:
            raise ProviderUnavailable(f"{url}: HTTP {resp.status_code}")
        lines = resp.text.splitlines()
        bars = []
        for line in lines[1:]:
            if not line.strip():
                continue
            f = line.split(",")
            bars.append(PriceBar(
                date=parse_date(f[0]),
                open=float(f[1]), high=float(f[2]), low=float(f[3]),
                close=float(f[4]), adjusted_close=float(f[5]), volume=int(f[6]),
            ))
        return bars

    def fetch_news(self, ticker: str) -> list[NewsHeadline]:
        return []


class HttpNewsProvider:
    """Live headline client. URL template with {ticker}; JSON response is a
    list of {datetime|published_at, headline, source, url} objects. The API
    key comes from an environment variable, never from config files."""

    def __init__(self, url_template: str, *, api_key_env: str = "NEWS_API_KEY",
                 min_interval: float = 0.0, attempts: int = 3,
                 backoff_base: float = 0.5, timeout: float = 10.0):
        self.url_template = url_template
        self.api_key_env = api_key_env
        self.throttle = Throttle(min_interval)
        self.attempts = attempts
        self.backoff_base = backoff_base
        self.client = httpx.Client(timeout=timeout)

    def _key(self) -> str:
        key = os.environ.get(self.api_key_env)
        if not key:
            raise MissingEnvironment(f"{self.api_key_env} is not set")
        return key

    def fetch_bars(self, ticker: str) -> list[PriceBar]:
        return []

    def fetch_news(self, ticker: str) -> list[NewsHeadline]:
        url = self.url_template.format(ticker=ticker)
        resp = request_with_retry(
            self.client, "GET", url,
            throttle=self.throttle, attempts=self.attempts, backoff_base=self.backoff_base,
            headers={"X-Api-Key": self._key()},
        )
        if resp.status_code == 404:
            raise UnknownTicker(ticker)
        if resp.status_code != 200:
            raise ProviderUnavailable(f"{url}: HTTP {resp.status_code}")
        out = []
        for d in resp.json():
            ts = d.get("published_at") or d.get("datetime")
            out.append(NewsHeadline(
                ticker=ticker,
                published_at=parse_ts(ts) if isinstance(ts, str) else parse_ts(str(ts)),
                headline=d["headline"],
                source=d.get("source", "unknown"),
                url=d.get("url"),
            ))
        return out


class CompositeProvider:
    """Quotes from one provider, news from another (the live pairing)."""

    def __init__(self, quotes: DataProvider, news: DataProvider):
        self.quotes = quotes
        self.news = news

    def fetch_bars(self, ticker: str) -> list[PriceBar]:
        return self.quotes.fetch_bars(ticker)

    def fetch_news(self, ticker: str) -> list[NewsHeadline]:
        return self.news.fetch_news(ticker)
