"""Value types for the metrics engine.

A metric either resolves to a float or is explicitly unavailable with a
reason.  Unavailability is a first-class value, never NaN and never a
silent zero, so downstream consumers must confront missing data.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Iterator, Mapping

from ..errors import EmptyCohort

# Field order is the canonical presentation order.
METRIC_NAMES: tuple[str, ...] = (
    "return_21d",
    "return_5d",
    "momentum_21d",
    "volatility_ann",
    "max_drawdown",
    "sharpe",
    "sortino",
    "beta",
    "alpha_ann",
    "rsi_14",
    "zscore_5d",
    "volume_trend",
    "price_vs_ma5",
    "regression_slope",
)


@dataclass(frozen=True)
class Unavailable:
    """Marker for a metric that could not be computed, with the reason."""

    reason: str

    def __bool__(self) -> bool:
        return False


MetricValue = float | Unavailable


def metric_to_json(value: MetricValue) -> float | dict:
    if isinstance(value, Unavailable):
        return {"unavailable": value.reason}
    return value


def metric_from_json(raw: object) -> MetricValue:
    if isinstance(raw, dict):
        return Unavailable(reason=str(raw["unavailable"]))
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ValueError(f"not a metric value: {raw!r}")
    return float(raw)


@dataclass(frozen=True)
class MetricVector:
    """Per-ticker metric set for one as-of date."""

    ticker: str
    as_of: str  # ISO date
    return_21d: MetricValue
    return_5d: MetricValue
    momentum_21d: MetricValue
    volatility_ann: MetricValue
    max_drawdown: MetricValue
    sharpe: MetricValue
    sortino: MetricValue
    beta: MetricValue
    alpha_ann: MetricValue
    rsi_14: MetricValue
    zscore_5d: MetricValue
    volume_trend: MetricValue
    price_vs_ma5: MetricValue
    regression_slope: MetricValue

    def value(self, name: str) -> MetricValue:
        if name not in METRIC_NAMES:
            raise KeyError(name)
        return getattr(self, name)

    def items(self) -> Iterator[tuple[str, MetricValue]]:
        for name in METRIC_NAMES:
            yield name, getattr(self, name)

    def available(self) -> dict[str, float]:
        return {n: v for n, v in self.items() if isinstance(v, float)}

    def to_dict(self) -> dict:
        """Flat JSON form: numbers, or {"unavailable": reason} markers."""
        out: dict = {"ticker": self.ticker, "as_of": self.as_of}
        for name, value in self.items():
            out[name] = metric_to_json(value)
        return out

    @classmethod
    def from_dict(cls, raw: Mapping) -> "MetricVector":
        kwargs = {name: metric_from_json(raw[name]) for name in METRIC_NAMES}
        return cls(ticker=str(raw["ticker"]), as_of=str(raw["as_of"]), **kwargs)


@dataclass(frozen=True)
class CohortBenchmark:
    """Cross-sectional means over a cohort of metric vectors.

    Each mean is taken over the tickers for which that metric resolved;
    `counts` records how many contributed per metric.  A metric that
    resolved for no ticker is itself unavailable.
    """

    as_of: str
    cohort_size: int
    means: Mapping[str, MetricValue] = field(default_factory=dict)
    counts: Mapping[str, int] = field(default_factory=dict)

    def mean(self, name: str) -> MetricValue:
        if name not in METRIC_NAMES:
            raise KeyError(name)
        return self.means[name]

    def to_dict(self) -> dict:
        return {
            "as_of": self.as_of,
            "cohort_size": self.cohort_size,
            "means": {n: metric_to_json(self.means[n]) for n in METRIC_NAMES},
            "counts": {n: self.counts[n] for n in METRIC_NAMES},
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "CohortBenchmark":
        return cls(
            as_of=str(raw["as_of"]),
            cohort_size=int(raw["cohort_size"]),
            means={n: metric_from_json(raw["means"][n]) for n in METRIC_NAMES},
            counts={n: int(raw["counts"][n]) for n in METRIC_NAMES},
        )


def benchmark_of(vectors: list[MetricVector], as_of: str) -> CohortBenchmark:
    """Equal-weighted per-metric means with availability counts."""
    if not vectors:
        raise EmptyCohort("cohort is empty")
    means: dict[str, MetricValue] = {}
    counts: dict[str, int] = {}
    for name in METRIC_NAMES:
        values = [v for vec in vectors if isinstance(v := vec.value(name), float)]
        counts[name] = len(values)
        if values:
            means[name] = sum(values) / len(values)
        else:
            means[name] = Unavailable(reason="no ticker resolved this metric")
    return CohortBenchmark(as_of=as_of, cohort_size=len(vectors), means=means, counts=counts)


# Sanity: dataclass fields and the canonical name list must agree.
_vector_fields = tuple(f.name for f in fields(MetricVector))[2:]
assert _vector_fields == METRIC_NAMES, _vector_fields
