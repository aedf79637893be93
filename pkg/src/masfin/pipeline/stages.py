"""Stage execution: crew run, verification gate, one repair, then fail.

A gate violation triggers a single re-run with the violation text added
to the crew's context; a second violation fails the stage.  Every stage
returns both the crew report (for review) and the typed artifact the
next stage consumes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from ..agents.backends import AgentBackend, TokenLedger
from ..agents.crew import CrewReport, run_crew
from ..agents.prompts import DEFAULT_MAX_CONTEXT_ITEMS, DEFAULT_TOKEN_BUDGET
from ..agents.spec import CrewBook
from ..errors import CrewAborted, PipelineError, StageFailed
from ..marketdata.types import DelistedCorpusEntry, Snapshot
from ..metrics.types import CohortBenchmark, MetricVector, Unavailable
from . import context as ctx
from .gates import (
    validate_allocation,
    validate_analysis,
    validate_screening,
    validate_timing,
)
from .normalizer import normalize_weights, select_positions
from .types import (
    AllocationCaps,
    AnalysisShortlist,
    PortfolioAllocation,
    ScreeningShortlist,
    StageBounds,
    TimingSlate,
    STAGE_NAMES,
)


@dataclass
class StageEnv:
    """Everything a stage needs beyond its predecessor's artifact."""

    snapshot: Snapshot
    vectors: dict[str, MetricVector]
    benchmark: CohortBenchmark
    sector_map: dict[str, str]
    corpus: list[DelistedCorpusEntry]
    crew_book: CrewBook
    backend: AgentBackend
    ledger: TokenLedger
    bounds: StageBounds = field(default_factory=StageBounds)
    caps: AllocationCaps = field(default_factory=AllocationCaps)
    held: frozenset = frozenset()
    repair_attempts: int = 1
    max_context_items: int = DEFAULT_MAX_CONTEXT_ITEMS
    token_budget: int = DEFAULT_TOKEN_BUDGET

    @property
    def universe(self) -> frozenset:
        return frozenset(self.snapshot.universe)


@dataclass(frozen=True)
class StageResult:
    stage: int
    report: CrewReport
    artifact: object

    @property
    def name(self) -> str:
        return STAGE_NAMES[self.stage]


def logical_timestamp(as_of: str, stage: int, attempt: int) -> str:
    """Wall-clock-free timestamp: replayable runs yield identical bytes."""
    return f"{as_of}T{12 + stage:02d}:{attempt:02d}:00Z"


def _build_context(stage: int, env: StageEnv, inputs: Mapping) -> dict:
    as_of = env.snapshot.as_of.isoformat()
    if stage == 1:
        return ctx.postmortem_context(as_of, env.corpus)
    if stage == 2:
        return ctx.screening_context(
            env.snapshot, env.vectors, env.sector_map,
            inputs["postmortem"].candidates, env.bounds,
        )
    if stage == 3:
        return ctx.analysis_context(
            env.snapshot, env.vectors, env.sector_map, env.benchmark,
            list(inputs["screening"].symbols), env.held, env.bounds,
        )
    if stage == 4:
        return ctx.timing_context(
            env.snapshot, env.vectors, env.sector_map,
            list(inputs["analysis"].entries), env.held, env.bounds,
        )
    if stage == 5:
        return ctx.portfolio_context(
            env.snapshot, env.vectors, env.sector_map,
            inputs["timing"], env.held, env.bounds, env.caps,
        )
    raise ValueError(f"no such stage: {stage}")


def _gate(stage: int, env: StageEnv, inputs: Mapping, report: CrewReport):
    as_of = env.snapshot.as_of.isoformat()
    if stage == 1:
        return report  # narrative output; schema validation already ran
    if stage == 2:
        return validate_screening(
            report.candidates,
            as_of=as_of,
            universe=env.universe,
            vectors=env.vectors,
            bounds=env.bounds,
        )
    if stage == 3:
        allowed = frozenset(inputs["screening"].symbols) | env.held
        return validate_analysis(
            report.candidates,
            as_of=as_of,
            universe=env.universe,
            allowed=allowed,
            vectors=env.vectors,
            benchmark=env.benchmark,
            bounds=env.bounds,
        )
    if stage == 4:
        allowed = frozenset(s for s in inputs["analysis"].symbols)
        return validate_timing(
            report.candidates,
            as_of=as_of,
            universe=env.universe,
            allowed=allowed,
            vectors=env.vectors,
            bounds=env.bounds,
        )
    if stage == 5:
        return _finalize_allocation(env, inputs, report)
    raise ValueError(f"no such stage: {stage}")


def _expected_volatility(env: StageEnv, weights: Mapping[str, float]) -> float:
    # Correlation-free estimate: sqrt of the weighted variance sum. It
    # ignores cross-terms on purpose; treat it as a floor, not a forecast.
    acc = 0.0
    for symbol, weight in weights.items():
        vol = env.vectors[symbol].value("volatility_ann")
        if isinstance(vol, Unavailable):
            vol = 0.40
        acc += (weight * vol) ** 2
    return math.sqrt(acc)


def _finalize_allocation(
    env: StageEnv, inputs: Mapping, report: CrewReport
) -> PortfolioAllocation:
    slate: TimingSlate = inputs["timing"]
    eligible = frozenset(slate.buys)
    candidates = select_positions(list(report.candidates), bounds=env.bounds)
    raw = {c["symbol"]: float(c["weight"]) for c in candidates}
    sectors = {c["symbol"]: env.sector_map.get(c["symbol"], "unknown") for c in candidates}
    weights = normalize_weights(raw, sectors, env.caps)
    ordered = sorted(weights, key=lambda s: (-weights[s], s))
    rationales = {c["symbol"]: c.get("rationale", "") for c in candidates}
    positions = [
        {
            "symbol": symbol,
            "weight": weights[symbol],
            "sector": sectors[symbol],
            "rationale": rationales[symbol],
        }
        for symbol in ordered
    ]
    diagnostics = {
        "expected_volatility": _expected_volatility(env, weights),
        "herfindahl": sum(w * w for w in weights.values()),
        "positions": len(positions),
        "max_weight": max(weights.values()),
    }
    return validate_allocation(
        positions,
        as_of=env.snapshot.as_of.isoformat(),
        universe=env.universe,
        eligible=eligible,
        sector_map=env.sector_map,
        caps=env.caps,
        bounds=env.bounds,
        diagnostics=diagnostics,
    )


def run_stage(
    stage: int,
    env: StageEnv,
    inputs: Mapping,
    *,
    seed: int,
    attempt: int,
    transcript_path: str | Path | None = None,
) -> StageResult:
    """Run one stage with the repair-then-fail policy applied to gates."""
    crew = env.crew_book.by_stage(stage)
    base_context = _build_context(stage, env, inputs)
    produced_at = logical_timestamp(env.snapshot.as_of.isoformat(), stage, attempt)
    last_error: PipelineError | CrewAborted | None = None
    for pass_no in range(1 + env.repair_attempts):
        context = dict(base_context)
        if pass_no and last_error is not None:
            context["repair_note"] = str(last_error)
        try:
            report = run_crew(
                crew,
                context,
                env.backend,
                seed=seed + 7919 * pass_no,
                produced_at=produced_at,
                ledger=env.ledger,
                transcript_path=transcript_path,
                repair_attempts=env.repair_attempts,
                max_context_items=env.max_context_items,
                token_budget=env.token_budget,
            )
            artifact = _gate(stage, env, inputs, report)
        except (PipelineError, CrewAborted) as exc:
            last_error = exc
            continue
        return StageResult(stage=stage, report=report, artifact=artifact)
    raise StageFailed(f"{stage} ({STAGE_NAMES[stage]})", last_error) from last_error


def artifact_to_dict(stage: int, artifact) -> dict:
    if stage == 1:
        return {"kind": "postmortem", "themes": len(artifact.candidates)}
    if isinstance(artifact, (ScreeningShortlist, AnalysisShortlist, TimingSlate, PortfolioAllocation)):
        return artifact.to_dict()
    raise ValueError(f"unknown artifact for stage {stage}")
