"""Staged decision pipeline: contexts, gates, allocation, orchestration."""
from .context import (
    analysis_context,
    global_headlines,
    portfolio_context,
    postmortem_context,
    screening_context,
    ticker_rows,
    timing_context,
)
from .gates import (
    validate_allocation,
    validate_analysis,
    validate_screening,
    validate_timing,
)
from .normalizer import normalize_weights, select_positions
from .stages import StageEnv, StageResult, artifact_to_dict, logical_timestamp, run_stage
from .types import (
    ALLOCATION_CSV_HEADER,
    AllocationCaps,
    AnalysisShortlist,
    PortfolioAllocation,
    Position,
    STAGE_NAMES,
    ScreeningShortlist,
    StageBounds,
    TimingDecision,
    TimingSlate,
    WEIGHT_SUM_TOL,
)

# Resolved lazily: runner pulls in the config module, which itself needs
# .types from this package, so a top-level import here would be circular.
_RUNNER_NAMES = frozenset({
    "AWAITING_PUBLISH", "AWAITING_REVIEW", "FAILED", "PUBLISHED", "RUNNING",
    "RunDirector", "RunState", "derive_seed", "stage_dir_name",
})


def __getattr__(name: str):
    if name in _RUNNER_NAMES:
        from . import runner
        return getattr(runner, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


__all__ = [
    "ALLOCATION_CSV_HEADER",
    "AWAITING_PUBLISH",
    "AWAITING_REVIEW",
    "AllocationCaps",
    "AnalysisShortlist",
    "FAILED",
    "PUBLISHED",
    "PortfolioAllocation",
    "Position",
    "RUNNING",
    "RunDirector",
    "RunState",
    "STAGE_NAMES",
    "ScreeningShortlist",
    "StageBounds",
    "StageEnv",
    "StageResult",
    "TimingDecision",
    "TimingSlate",
    "WEIGHT_SUM_TOL",
    "analysis_context",
    "artifact_to_dict",
    "derive_seed",
    "global_headlines",
    "logical_timestamp",
    "normalize_weights",
    "portfolio_context",
    "postmortem_context",
    "run_stage",
    "screening_context",
    "select_positions",
    "stage_dir_name",
    "ticker_rows",
    "timing_context",
    "validate_allocation",
    "validate_analysis",
    "validate_screening",
    "validate_timing",
]
