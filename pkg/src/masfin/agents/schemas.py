"""Structured-output schemas for agent responses.

Every agent must answer with one fenced JSON block; the block is validated
against the agent's declared schema from this registry.  Range and
membership rules that belong to pipeline gates are deliberately NOT
duplicated here: schemas reject malformed shapes, gates reject bad content.
"""
from __future__ import annotations

import enum
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator

SYMBOL_PATTERN = r"^[A-Z][A-Z0-9.\-]{0,9}$"

# Metrics a timing agent may cite; anything else is refused at parse time.
TIMING_CITABLE_METRICS = frozenset(
    {"sortino", "zscore_5d", "momentum_21d", "regression_slope", "volume_trend"}
)


class RiskFlag(str, enum.Enum):
    OVERBOUGHT = "overbought"
    HIGH_VOLATILITY = "high_volatility"
    DEEP_DRAWDOWN = "deep_drawdown"
    NEGATIVE_MOMENTUM = "negative_momentum"
    FADING_VOLUME = "fading_volume"
    HEADLINE_RISK = "headline_risk"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


# ---------------------------------------------------------------- intermediates


class FailurePattern(_Strict):
    name: str = Field(min_length=1)
    tickers: list[str] = Field(min_length=1)
    signals: list[str] = Field(default_factory=list)


class FailurePatterns(_Strict):
    patterns: list[FailurePattern] = Field(min_length=1)


class ToneFlag(_Strict):
    ticker: str = Field(pattern=SYMBOL_PATTERN)
    tone: Literal["negative", "neutral", "positive"]
    phrases: list[str] = Field(default_factory=list)


class ToneFlags(_Strict):
    flags: list[ToneFlag]


class SentimentScore(_Strict):
    symbol: str = Field(pattern=SYMBOL_PATTERN)
    sentiment: float = Field(ge=-1.0, le=1.0)


class SentimentScores(_Strict):
    scored: list[SentimentScore]


class TrendScore(_Strict):
    symbol: str = Field(pattern=SYMBOL_PATTERN)
    trend_score: float


class TrendScores(_Strict):
    scored: list[TrendScore]


class QuantEntry(_Strict):
    symbol: str = Field(pattern=SYMBOL_PATTERN)
    cited_metrics: dict[str, float]
    cohort_delta: dict[str, float] = Field(default_factory=dict)


class QuantEntries(_Strict):
    entries: list[QuantEntry]


class ContextNote(_Strict):
    symbol: str = Field(pattern=SYMBOL_PATTERN)
    headline_tone: Literal["negative", "neutral", "positive"]
    cited_headlines: list[str] = Field(default_factory=list)


class ContextNotes(_Strict):
    notes: list[ContextNote]


class TimingSignal(_Strict):
    symbol: str = Field(pattern=SYMBOL_PATTERN)
    action: Literal["buy", "hold", "sell"]
    confidence: float = Field(ge=0.0, le=1.0)
    cited_metrics: dict[str, float] = Field(default_factory=dict)


class TimingSignals(_Strict):
    signals: list[TimingSignal]


class RiskFlagNote(_Strict):
    symbol: str = Field(pattern=SYMBOL_PATTERN)
    risk_flags: list[RiskFlag] = Field(default_factory=list)


class RiskFlagNotes(_Strict):
    flags: list[RiskFlagNote]


class DraftPosition(_Strict):
    symbol: str = Field(pattern=SYMBOL_PATTERN)
    weight: float = Field(gt=0.0)
    sector: str = Field(min_length=1)


class DraftPositions(_Strict):
    positions: list[DraftPosition] = Field(min_length=1)


class DiversificationNotes(_Strict):
    sector_view: dict[str, float] = Field(default_factory=dict)
    adjustments: list[str] = Field(default_factory=list)


# ---------------------------------------------------------------- crew reports


class RiskTheme(_Strict):
    name: str = Field(min_length=1)
    evidence_tickers: list[str] = Field(min_length=1)
    warning_signs: list[str] = Field(min_length=1)

    @field_validator("evidence_tickers")
    @classmethod
    def _upper(cls, v: list[str]) -> list[str]:
        for t in v:
            if t != t.upper():
                raise ValueError(f"ticker not upper-case: {t}")
        return v


class PostmortemReport(_Strict):
    sections: dict[str, str]
    candidates: list[RiskTheme] = Field(min_length=1, max_length=20)
    rationale: str = Field(min_length=1)
    references: list[str] = Field(default_factory=list)


class ScreeningCandidate(_Strict):
    symbol: str = Field(pattern=SYMBOL_PATTERN)
    composite_score: float
    cited_metrics: dict[str, float] = Field(default_factory=dict)
    cited_headlines: list[str] = Field(default_factory=list)


class ScreeningReport(_Strict):
    sections: dict[str, str]
    candidates: list[ScreeningCandidate] = Field(min_length=1, max_length=150)
    rationale: str = Field(min_length=1)
    references: list[str] = Field(default_factory=list)


class AnalysisEntry(_Strict):
    symbol: str = Field(pattern=SYMBOL_PATTERN)
    thesis: str = Field(min_length=1)
    cited_metrics: dict[str, float]
    cohort_delta: dict[str, float]
    cited_headlines: list[str] = Field(default_factory=list)


class AnalysisReport(_Strict):
    sections: dict[str, str]
    # Hard ceiling: an analysis deeper than 50 names is rejected as malformed.
    candidates: list[AnalysisEntry] = Field(min_length=1, max_length=50)
    rationale: str = Field(min_length=1)
    references: list[str] = Field(default_factory=list)


class TimingEntry(_Strict):
    symbol: str = Field(pattern=SYMBOL_PATTERN)
    action: Literal["buy", "hold", "sell"]
    confidence: float = Field(ge=0.0, le=1.0)
    risk_flags: list[RiskFlag] = Field(default_factory=list)
    cited_metrics: dict[str, float] = Field(default_factory=dict)

    @field_validator("cited_metrics")
    @classmethod
    def _citable(cls, v: dict[str, float]) -> dict[str, float]:
        bad = sorted(set(v) - TIMING_CITABLE_METRICS)
        if bad:
            allowed = ", ".join(sorted(TIMING_CITABLE_METRICS))
            raise ValueError(f"uncitable metrics {bad}; timing may cite only: {allowed}")
        return v


class TimingReport(_Strict):
    sections: dict[str, str]
    candidates: list[TimingEntry] = Field(min_length=1, max_length=150)
    rationale: str = Field(min_length=1)
    references: list[str] = Field(default_factory=list)


class PositionEntry(_Strict):
    symbol: str = Field(pattern=SYMBOL_PATTERN)
    weight: float = Field(gt=0.0, le=1.0)
    sector: str = Field(min_length=1)
    rationale: str = Field(min_length=1)


class PortfolioReport(_Strict):
    sections: dict[str, str]
    candidates: list[PositionEntry] = Field(min_length=1, max_length=60)
    rationale: str = Field(min_length=1)
    references: list[str] = Field(default_factory=list)


SCHEMAS: dict[str, type[BaseModel]] = {
    "failure_patterns": FailurePatterns,
    "tone_flags": ToneFlags,
    "postmortem_report": PostmortemReport,
    "sentiment_scores": SentimentScores,
    "trend_scores": TrendScores,
    "screening_report": ScreeningReport,
    "quant_entries": QuantEntries,
    "context_notes": ContextNotes,
    "analysis_report": AnalysisReport,
    "timing_signals": TimingSignals,
    "risk_flags": RiskFlagNotes,
    "timing_report": TimingReport,
    "draft_positions": DraftPositions,
    "diversification_notes": DiversificationNotes,
    "portfolio_report": PortfolioReport,
}

REPORT_SCHEMAS: dict[int, str] = {
    1: "postmortem_report",
    2: "screening_report",
    3: "analysis_report",
    4: "timing_report",
    5: "portfolio_report",
}
