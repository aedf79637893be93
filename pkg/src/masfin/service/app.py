"""HTTP gateway: review checkpoints, publish runs, serve the console.

Every /api route except /api/health requires `Authorization: Bearer
<token>`. The token is handed in by the caller; resolving it from the
environment is the CLI's job, so tests can inject any value.
"""
from __future__ import annotations

from pathlib import Path

from fastapi import Depends, FastAPI, Header, HTTPException, Query
from fastapi.responses import HTMLResponse, JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from ..errors import (
    CheckpointNotFound,
    CheckpointNotPending,
    DuplicatePendingCheckpoint,
    EditValidationFailed,
    MasfinError,
    RunNotFound,
    RunNotPublishable,
)
from ..hitl.store import PENDING, CheckpointRecord
from ..pipeline.runner import RunDirector, RunState
from .schemas import (
    AllocationResponse,
    CheckpointDetail,
    CheckpointSummary,
    DecisionRequest,
    DecisionResponse,
    HealthResponse,
    RunDetail,
    RunSummary,
)

_PLACEHOLDER = """<!doctype html>
<html><head><title>masfin gateway</title></head>
<body style="font-family: system-ui; margin: 3rem auto; max-width: 38rem">
<h1>masfin gateway</h1>
<p>The API is up. No review console build was found; point the server at
one with <code>--console &lt;dir&gt;</code> or use the HTTP API directly
under <code>/api</code>.</p>
</body></html>
"""


def _status_of(exc: MasfinError) -> int:
    if isinstance(exc, (RunNotFound, CheckpointNotFound)):
        return 404
    if isinstance(exc, (CheckpointNotPending, DuplicatePendingCheckpoint, RunNotPublishable)):
        return 409
    if isinstance(exc, EditValidationFailed):
        return 422
    return 400


def _run_summary(state: RunState) -> RunSummary:
    return RunSummary(
        run_id=state.run_id,
        status=state.status,
        as_of=state.as_of,
        current_stage=state.current_stage,
        backend=state.backend,
        auto_approve=state.auto_approve,
        created_at=state.created_at,
        updated_at=state.updated_at,
    )


def _run_detail(state: RunState) -> RunDetail:
    return RunDetail(
        **_run_summary(state).model_dump(),
        seed=state.seed,
        attempts=state.attempts,
        stages_done=state.stages_done,
        prior_run=state.prior_run,
        error=state.error,
    )


def _cp_summary(record: CheckpointRecord) -> CheckpointSummary:
    return CheckpointSummary(
        checkpoint_id=record.checkpoint_id,
        run_id=record.run_id,
        stage=record.stage,
        stage_name=record.stage_name,
        attempt=record.attempt,
        state=record.state,
        reviewer=record.reviewer or None,
        note=record.note,
        created_at=record.created_at,
        decided_at=record.decided_at,
    )


def _cp_detail(record: CheckpointRecord) -> CheckpointDetail:
    return CheckpointDetail(
        **_cp_summary(record).model_dump(),
        report=dict(record.report),
        edited_report=dict(record.edited_report) if record.edited_report else None,
    )


def create_app(
    director: RunDirector,
    *,
    token: str,
    console_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="masfin gateway", docs_url=None, redoc_url=None)

    def require_token(authorization: str = Header(default="")) -> None:
        expected = f"Bearer {token}"
        if not authorization:
            raise HTTPException(status_code=401, detail="missing bearer token")
        if authorization != expected:
            raise HTTPException(status_code=401, detail="invalid token")

    auth = [Depends(require_token)]

    @app.exception_handler(MasfinError)
    async def masfin_error(request, exc: MasfinError):
        return JSONResponse(status_code=_status_of(exc), content={"detail": str(exc)})

    @app.get("/api/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        pending = director.store.list_all(PENDING)
        return HealthResponse(status="ok", pending_checkpoints=len(pending))

    @app.get("/api/runs", response_model=list[RunSummary], dependencies=auth)
    def runs() -> list[RunSummary]:
        return [_run_summary(s) for s in director.list_runs()]

    @app.get("/api/runs/{run_id}", response_model=RunDetail, dependencies=auth)
    def run_detail(run_id: str) -> RunDetail:
        return _run_detail(director.read_state(run_id))

    @app.post("/api/runs/{run_id}/publish", response_model=RunSummary, dependencies=auth)
    def publish(run_id: str) -> RunSummary:
        state = director.publish(run_id, reviewer="console")
        return _run_summary(state)

    @app.get("/api/runs/{run_id}/allocation", response_model=AllocationResponse,
             dependencies=auth)
    def allocation(run_id: str) -> AllocationResponse:
        state = director.read_state(run_id)
        result = director.allocation(run_id)
        if result is None:
            raise HTTPException(
                status_code=404,
                detail=f"run {run_id} has no published allocation (status {state.status})",
            )
        payload = result.to_dict()
        return AllocationResponse(
            run_id=run_id,
            as_of=payload["as_of"],
            positions=payload["positions"],
            weight_sum=payload["weight_sum"],
            sector_shares=payload["sector_shares"],
            diagnostics=payload.get("diagnostics", {}),
        )

    @app.get("/api/runs/{run_id}/allocation.csv", dependencies=auth)
    def allocation_csv(run_id: str) -> PlainTextResponse:
        text = director.allocation_csv(run_id)
        if text is None:
            raise HTTPException(status_code=404, detail=f"run {run_id} is not published")
        return PlainTextResponse(text, media_type="text/csv")

    @app.get("/api/checkpoints", response_model=list[CheckpointSummary],
             dependencies=auth)
    def checkpoints(state: str | None = Query(default=None)) -> list[CheckpointSummary]:
        return [_cp_summary(r) for r in director.store.list_all(state)]

    @app.get("/api/checkpoints/{cp_id}", response_model=CheckpointDetail,
             dependencies=auth)
    def checkpoint(cp_id: str) -> CheckpointDetail:
        return _cp_detail(director.store.get(cp_id))

    @app.post("/api/checkpoints/{cp_id}/decision", response_model=DecisionResponse,
              dependencies=auth)
    def decide(cp_id: str, body: DecisionRequest) -> DecisionResponse:
        record = director.submit_decision(
            cp_id,
            body.verdict,
            reviewer=body.reviewer,
            note=body.note,
            edited_report=body.edited_report,
        )
        state = director.read_state(record.run_id)
        return DecisionResponse(checkpoint=_cp_detail(record), run=_run_summary(state))

    index = Path(console_dir) / "index.html" if console_dir else None
    if index is not None and index.is_file():
        app.mount("/", StaticFiles(directory=str(index.parent), html=True), name="console")
    else:
        @app.get("/", response_class=HTMLResponse)
        def placeholder() -> str:
            return _PLACEHOLDER

    return app
