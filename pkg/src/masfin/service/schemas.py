"""Request and response bodies for the review gateway."""
from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict


class RunSummary(BaseModel):
    run_id: str
    status: str
    as_of: str
    current_stage: int
    backend: str
    auto_approve: bool
    created_at: str
    updated_at: str


class RunDetail(RunSummary):
    seed: int
    attempts: dict[str, int]
    stages_done: dict[str, dict]
    prior_run: str | None = None
    error: str | None = None


class CheckpointSummary(BaseModel):
    checkpoint_id: str
    run_id: str
    stage: int
    stage_name: str
    attempt: int
    state: str
    reviewer: str | None = None
    note: str = ""
    created_at: str
    decided_at: str | None = None


class CheckpointDetail(CheckpointSummary):
    report: dict
    edited_report: dict | None = None


class DecisionRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    verdict: Literal["approve", "edit", "reject"]
    reviewer: str = "console"
    note: str = ""
    edited_report: dict | None = None


class DecisionResponse(BaseModel):
    checkpoint: CheckpointDetail
    run: RunSummary


class PositionBody(BaseModel):
    symbol: str
    weight: float
    sector: str
    rationale: str


class AllocationResponse(BaseModel):
    run_id: str
    as_of: str
    positions: list[PositionBody]
    weight_sum: float
    sector_shares: dict[str, float]
    diagnostics: dict


class HealthResponse(BaseModel):
    status: str
    pending_checkpoints: int
