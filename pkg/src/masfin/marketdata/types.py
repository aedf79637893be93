"""Domain types for pinned market data: bars, series, headlines, snapshots."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import date, datetime

from ..errors import CorpusParseError
from ..util import canonical_json, end_of_day_utc, iso_ts, parse_date, parse_ts

SERIES_CSV_HEADER = ["date", "open", "high", "low", "close", "adjusted_close", "volume"]


@dataclass(frozen=True)
class PriceBar:
    """One daily OHLCV bar. Prices are per-share; volume is whole shares."""

    date: date
    open: float
    high: float
    low: float
    close: float
    adjusted_close: float
    volume: int

    def __post_init__(self) -> None:
        for name in ("open", "high", "low", "close", "adjusted_close"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{self.date}: {name} must be > 0")
        if self.low > min(self.open, self.close):
            raise ValueError(f"{self.date}: low above open/close")
        if self.high < max(self.open, self.close):
            raise ValueError(f"{self.date}: high below open/close")
        if self.volume < 0:
            raise ValueError(f"{self.date}: negative volume")


@dataclass(frozen=True)
class PriceSeries:
    """Time-ordered bars for one ticker, pinned to an as-of date.

    Construction enforces the look-ahead gate: no bar may postdate as_of.
    """

    ticker: str
    bars: tuple[PriceBar, ...]
    as_of: date

    def __post_init__(self) -> None:
        object.__setattr__(self, "bars", tuple(self.bars))
        prev = None
        for bar in self.bars:
            if prev is not None and bar.date <= prev:
                raise ValueError(f"{self.ticker}: bars not strictly increasing at {bar.date}")
            if bar.date > self.as_of:
                raise ValueError(f"{self.ticker}: bar {bar.date} after as_of {self.as_of}")
            prev = bar.date

    def __len__(self) -> int:
        return len(self.bars)

    def adjusted_closes(self) -> list[float]:
        return [b.adjusted_close for b in self.bars]

    def volumes(self) -> list[int]:
        return [b.volume for b in self.bars]

    def dates(self) -> list[date]:
        return [b.date for b in self.bars]

    def tail(self, n: int) -> "PriceSeries":
        return PriceSeries(self.ticker, self.bars[-n:], self.as_of)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(SERIES_CSV_HEADER)
        for b in self.bars:
            writer.writerow([
                b.date.isoformat(),
                repr(b.open), repr(b.high), repr(b.low), repr(b.close),
                repr(b.adjusted_close), b.volume,
            ])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, ticker: str, text: str, as_of: date) -> "PriceSeries":
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header != SERIES_CSV_HEADER:
            raise ValueError(f"{ticker}: unexpected series header {header!r}")
        bars = []
        for row in reader:
            if not row:
                continue
            bars.append(PriceBar(
                date=parse_date(row[0]),
                open=float(row[1]), high=float(row[2]), low=float(row[3]),
                close=float(row[4]), adjusted_close=float(row[5]),
                volume=int(row[6]),
            ))
        return cls(ticker, tuple(bars), as_of)


@dataclass(frozen=True)
class NewsHeadline:
    ticker: str
    published_at: datetime
    headline: str
    source: str
    url: str | None = None

    def to_dict(self) -> dict:
        d = {
            "ticker": self.ticker,
            "published_at": iso_ts(self.published_at),
            "headline": self.headline,
            "source": self.source,
        }
        if self.url is not None:
            d["url"] = self.url
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NewsHeadline":
        return cls(
            ticker=d["ticker"],
            published_at=parse_ts(d["published_at"]),
            headline=d["headline"],
            source=d["source"],
            url=d.get("url"),
        )


@dataclass(frozen=True)
class Snapshot:
    """Frozen view of the market at as_of: series + headlines for a universe.

    ``series`` may contain benchmark tickers beyond the candidate universe;
    headlines exist only for universe tickers. Immutable once pinned — the
    digest is a hash over the canonical file contents and stays stable
    across reloads.
    """

    snapshot_id: str
    as_of: date
    universe: tuple[str, ...]
    series: dict[str, PriceSeries]
    headlines: dict[str, tuple[NewsHeadline, ...]]
    created_at: datetime
    digest: str

    def __post_init__(self) -> None:
        for t, s in self.series.items():
            if s.as_of != self.as_of:
                raise ValueError(f"series {t} as_of {s.as_of} != snapshot as_of {self.as_of}")
        eod = end_of_day_utc(self.as_of)
        for t, hs in self.headlines.items():
            for h in hs:
                if h.published_at > eod:
                    raise ValueError(f"headline for {t} published after as_of day end")

    @property
    def benchmark_tickers(self) -> list[str]:
        return sorted(set(self.series) - set(self.universe))


@dataclass(frozen=True)
class DelistedCorpusEntry:
    """One delisted or at-risk firm with the headlines that chronicle it."""

    ticker: str
    sector: str
    reason: str
    date_range: str
    headlines: tuple[NewsHeadline, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "ticker": self.ticker,
            "sector": self.sector,
            "reason": self.reason,
            "date_range": self.date_range,
            "headlines": [h.to_dict() for h in self.headlines],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DelistedCorpusEntry":
        try:
            return cls(
                ticker=d["ticker"],
                sector=d["sector"],
                reason=d["reason"],
                date_range=d["date_range"],
                headlines=tuple(NewsHeadline.from_dict(h) for h in d.get("headlines", [])),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CorpusParseError(f"bad corpus entry: {exc}") from exc


def headlines_to_json(headlines: list[NewsHeadline] | tuple[NewsHeadline, ...]) -> str:
    return canonical_json([h.to_dict() for h in headlines])
