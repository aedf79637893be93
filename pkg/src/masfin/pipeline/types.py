"""Typed stage artifacts and the bounds the pipeline enforces on them."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Mapping

SCREEN_MIN = 50
SCREEN_MAX = 100
ANALYSIS_MIN = 35
ANALYSIS_MAX = 50
BUY_MIN = 20
BUY_MAX = 30
POSITIONS_MIN = 15
POSITIONS_MAX = 30

DEFAULT_MAX_WEIGHT = 0.10
DEFAULT_MAX_SECTOR_SHARE = 0.30

WEIGHT_SUM_TOL = 1e-9
CAP_TOL = 1e-9
METRIC_TOL = 1e-6
DELTA_TOL = 1e-9

ALLOCATION_CSV_HEADER = ["symbol", "weight", "sector", "rationale"]

STAGE_NAMES = {
    1: "postmortem",
    2: "screening",
    3: "analysis",
    4: "timing",
    5: "portfolio",
}


@dataclass(frozen=True)
class StageBounds:
    """Candidate-count bounds, overridable through run configuration."""

    screen_min: int = SCREEN_MIN
    screen_max: int = SCREEN_MAX
    analysis_min: int = ANALYSIS_MIN
    analysis_max: int = ANALYSIS_MAX
    buy_min: int = BUY_MIN
    buy_max: int = BUY_MAX
    positions_min: int = POSITIONS_MIN
    positions_max: int = POSITIONS_MAX


@dataclass(frozen=True)
class AllocationCaps:
    max_weight: float = DEFAULT_MAX_WEIGHT
    max_sector_share: float = DEFAULT_MAX_SECTOR_SHARE


@dataclass(frozen=True)
class ScreeningShortlist:
    as_of: str
    symbols: tuple[str, ...]

    def to_dict(self) -> dict:
        return {"as_of": self.as_of, "symbols": list(self.symbols)}


@dataclass(frozen=True)
class AnalysisShortlist:
    as_of: str
    entries: tuple[Mapping, ...]

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(e["symbol"] for e in self.entries)

    def to_dict(self) -> dict:
        return {"as_of": self.as_of, "entries": [dict(e) for e in self.entries]}


@dataclass(frozen=True)
class TimingDecision:
    symbol: str
    action: str
    confidence: float
    risk_flags: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "symbol": self.symbol,
            "action": self.action,
            "confidence": self.confidence,
            "risk_flags": list(self.risk_flags),
        }


@dataclass(frozen=True)
class TimingSlate:
    as_of: str
    decisions: tuple[TimingDecision, ...]

    def _by_action(self, action: str) -> tuple[str, ...]:
        return tuple(d.symbol for d in self.decisions if d.action == action)

    @property
    def buys(self) -> tuple[str, ...]:
        return self._by_action("buy")

    @property
    def sells(self) -> tuple[str, ...]:
        return self._by_action("sell")

    @property
    def holds(self) -> tuple[str, ...]:
        return self._by_action("hold")

    def to_dict(self) -> dict:
        return {
            "as_of": self.as_of,
            "decisions": [d.to_dict() for d in self.decisions],
        }


@dataclass(frozen=True)
class Position:
    symbol: str
    weight: float
    sector: str
    rationale: str

    def to_dict(self) -> dict:
        return {
            "symbol": self.symbol,
            "weight": self.weight,
            "sector": self.sector,
            "rationale": self.rationale,
        }


@dataclass(frozen=True)
class PortfolioAllocation:
    as_of: str
    positions: tuple[Position, ...]
    diagnostics: Mapping = field(default_factory=dict)

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(p.symbol for p in self.positions)

    def weight_sum(self) -> float:
        return sum(p.weight for p in self.positions)

    def sector_shares(self) -> dict[str, float]:
        shares: dict[str, float] = {}
        for p in self.positions:
            shares[p.sector] = shares.get(p.sector, 0.0) + p.weight
        return shares

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(ALLOCATION_CSV_HEADER)
        for p in self.positions:
            writer.writerow([p.symbol, repr(p.weight), p.sector, p.rationale])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "as_of": self.as_of,
            "positions": [p.to_dict() for p in self.positions],
            "weight_sum": self.weight_sum(),
            "sector_shares": self.sector_shares(),
            "diagnostics": dict(self.diagnostics),
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "PortfolioAllocation":
        return cls(
            as_of=str(raw["as_of"]),
            positions=tuple(
                Position(
                    symbol=p["symbol"],
                    weight=float(p["weight"]),
                    sector=p["sector"],
                    rationale=p.get("rationale", ""),
                )
                for p in raw["positions"]
            ),
            diagnostics=dict(raw.get("diagnostics", {})),
        )
