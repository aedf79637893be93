"""Run orchestration: state machine, persistence, and HITL wiring.

A run lives entirely in its directory; any process holding the data dir
can resume it.  The director executes stages only while the run is in
the `running` state; checkpoints written after stages one through four
block it in `awaiting-review` until a decision arrives, and the final
allocation blocks in `awaiting-publish` until explicitly published.

Stage artifacts carry no wall-clock timestamps and no run id, so two
runs from the same configuration and seed produce byte-identical stage
output.  Wall clock appears only in run.json, checkpoints, and the
audit log.
"""
from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from ..agents.backends import TokenLedger
from ..agents.crew import CrewReport
from ..agents.schemas import REPORT_SCHEMAS
from ..agents.structured import validate_payload
from ..config import (
    RunConfig,
    build_backend,
    build_crew_book,
    build_provider,
    load_universe_file,
)
from ..errors import (
    CardinalityViolation,
    MasfinError,
    RunNotFound,
    RunNotPublishable,
    StageFailed,
    UnknownSymbolCited,
)
from ..hitl.store import (
    APPROVED,
    EDITED,
    PENDING,
    REJECTED,
    CheckpointRecord,
    CheckpointStore,
    run_lock,
)
from ..marketdata.corpus import load_bundled_corpus, load_delisted_corpus
from ..marketdata.service import MarketDataService, SnapshotSpec, load_snapshot
from ..metrics.engine import MetricConfig, compute_cohort
from ..util import atomic_write_text, canonical_json, digest_of, iso_ts, read_json, utcnow, write_json
from .stages import StageEnv, artifact_to_dict, run_stage
from .types import (
    AnalysisShortlist,
    PortfolioAllocation,
    ScreeningShortlist,
    STAGE_NAMES,
    TimingDecision,
    TimingSlate,
)

RUNNING = "running"
AWAITING_REVIEW = "awaiting-review"
AWAITING_PUBLISH = "awaiting-publish"
PUBLISHED = "published"
FAILED = "failed"

RUN_FILE = "run.json"
CONFIG_FILE = "config.json"
SECTORS_FILE = "sectors.json"
PRIOR_FILE = "prior_holdings.json"
COST_FILE = "cost.json"
AUDIT_FILE = "audit.jsonl"
ALLOCATION_CSV = "allocation.csv"
ALLOCATION_JSON = "allocation.json"


def stage_dir_name(stage: int) -> str:
    return f"stage-{stage}-{STAGE_NAMES[stage]}"


def derive_seed(base: int, stage: int, attempt: int) -> int:
    raw = hashlib.sha256(f"{base}:{stage}:{attempt}".encode()).digest()
    return int.from_bytes(raw[:4], "big")


@dataclass
class RunState:
    run_id: str
    status: str
    as_of: str
    seed: int
    backend: str
    auto_approve: bool
    current_stage: int
    attempts: dict[str, int]
    stages_done: dict[str, dict]
    prior_run: str | None
    error: str | None
    created_at: str
    updated_at: str

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "status": self.status,
            "as_of": self.as_of,
            "seed": self.seed,
            "backend": self.backend,
            "auto_approve": self.auto_approve,
            "current_stage": self.current_stage,
            "attempts": dict(self.attempts),
            "stages_done": dict(self.stages_done),
            "prior_run": self.prior_run,
            "error": self.error,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "RunState":
        return cls(
            run_id=raw["run_id"],
            status=raw["status"],
            as_of=raw["as_of"],
            seed=int(raw["seed"]),
            backend=raw["backend"],
            auto_approve=bool(raw["auto_approve"]),
            current_stage=int(raw["current_stage"]),
            attempts=dict(raw["attempts"]),
            stages_done=dict(raw["stages_done"]),
            prior_run=raw.get("prior_run"),
            error=raw.get("error"),
            created_at=raw["created_at"],
            updated_at=raw["updated_at"],
        )


class RunDirector:
    """Creates, advances, reviews, and publishes runs under one data dir."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.runs_root = self.data_dir / "runs"
        self.cache_dir = self.data_dir / "cache"
        self.store = CheckpointStore(self.runs_root)
        self._envs: dict[str, StageEnv] = {}

    # ------------------------------------------------------------- helpers

    def run_dir(self, run_id: str) -> Path:
        return self.runs_root / run_id

    def _audit(self, run_id: str, event: str, **fields) -> None:
        entry = {"event": event, "at": iso_ts(utcnow()), **fields}
        path = self.run_dir(run_id) / AUDIT_FILE
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(canonical_json(entry) + "\n")

    def read_state(self, run_id: str) -> RunState:
        path = self.run_dir(run_id) / RUN_FILE
        if not path.exists():
            raise RunNotFound(f"no such run: {run_id}")
        return RunState.from_dict(read_json(path))

    def _write_state(self, state: RunState) -> None:
        state.updated_at = iso_ts(utcnow())
        write_json(self.run_dir(state.run_id) / RUN_FILE, state.to_dict(), pretty=True)

    def list_runs(self) -> list[RunState]:
        if not self.runs_root.is_dir():
            return []
        states = []
        for entry in sorted(self.runs_root.iterdir()):
            if (entry / RUN_FILE).exists():
                states.append(self.read_state(entry.name))
        return sorted(states, key=lambda s: s.created_at, reverse=True)

    # ------------------------------------------------------------- creation

    def start_run(self, config: RunConfig) -> RunState:
        symbols, sectors = load_universe_file(config.universe_file)
        run_id = (
            f"run-{utcnow():%Y%m%d%H%M%S}-{os.urandom(3).hex()}"
        )
        run_dir = self.run_dir(run_id)
        run_dir.mkdir(parents=True)

        provider = build_provider(config.provider)
        service = MarketDataService(provider, cache_dir=self.cache_dir)
        spec = SnapshotSpec(
            universe=symbols,
            as_of=config.as_of,
            window_days=config.snapshot.window_days,
            headline_lookback_days=config.snapshot.headline_lookback_days,
            benchmarks=tuple(config.snapshot.benchmarks),
        )
        service.pin_snapshot(spec, run_dir / "snapshot")

        write_json(run_dir / CONFIG_FILE, config.to_dict(), pretty=True)
        write_json(run_dir / SECTORS_FILE, sectors, pretty=True)

        held: list[str] = []
        if config.pipeline.prior_run:
            held = self._load_prior_holdings(Path(config.pipeline.prior_run))
            write_json(run_dir / PRIOR_FILE, {
                "source": str(config.pipeline.prior_run),
                "symbols": held,
            }, pretty=True)

        (run_dir / "transcript").mkdir()
        now = iso_ts(utcnow())
        state = RunState(
            run_id=run_id,
            status=RUNNING,
            as_of=config.as_of.isoformat(),
            seed=config.seed,
            backend=config.backend,
            auto_approve=config.auto_approve,
            current_stage=1,
            attempts={str(n): 0 for n in range(1, 6)},
            stages_done={},
            prior_run=config.pipeline.prior_run,
            error=None,
            created_at=now,
            updated_at=now,
        )
        self._write_state(state)
        self._audit(run_id, "run_created", as_of=state.as_of, seed=state.seed,
                    backend=state.backend, auto_approve=state.auto_approve)
        return state

    def _load_prior_holdings(self, prior_run_dir: Path) -> list[str]:
        alloc_path = prior_run_dir / stage_dir_name(5) / ALLOCATION_JSON
        state_path = prior_run_dir / RUN_FILE
        if not alloc_path.exists() or not state_path.exists():
            raise RunNotFound(f"prior run has no published allocation: {prior_run_dir}")
        prior_state = RunState.from_dict(read_json(state_path))
        if prior_state.status != PUBLISHED:
            raise RunNotPublishable(
                f"prior run {prior_state.run_id} is {prior_state.status}, not published"
            )
        allocation = PortfolioAllocation.from_dict(read_json(alloc_path))
        return sorted(allocation.symbols)

    # ------------------------------------------------------------- env

    def _env(self, run_id: str, config: RunConfig) -> StageEnv:
        cached = self._envs.get(run_id)
        if cached is not None:
            return cached
        run_dir = self.run_dir(run_id)
        snapshot = load_snapshot(run_dir / "snapshot")
        sectors = {k: str(v) for k, v in read_json(run_dir / SECTORS_FILE).items()}
        metric_config = MetricConfig(
            risk_free_annual=config.pipeline.risk_free_annual,
        )
        benchmark_series = snapshot.series.get(metric_config.benchmark_ticker)
        universe_series = {t: snapshot.series[t] for t in snapshot.universe}
        vectors, benchmark = compute_cohort(universe_series, benchmark_series, metric_config)
        if config.corpus_file:
            corpus = load_delisted_corpus(config.corpus_file)
        else:
            corpus = load_bundled_corpus()
        held: frozenset = frozenset()
        prior_path = run_dir / PRIOR_FILE
        if prior_path.exists():
            held = frozenset(read_json(prior_path)["symbols"])
        env = StageEnv(
            snapshot=snapshot,
            vectors=vectors,
            benchmark=benchmark,
            sector_map=sectors,
            corpus=list(corpus),
            crew_book=build_crew_book(config),
            backend=build_backend(config),
            ledger=TokenLedger(),
            bounds=config.bounds.to_bounds(),
            caps=config.caps.to_caps(),
            held=held,
            repair_attempts=config.pipeline.repair_attempts,
            max_context_items=config.pipeline.max_context_items,
            token_budget=config.pipeline.token_budget,
        )
        self._envs[run_id] = env
        return env

    def load_config(self, run_id: str) -> RunConfig:
        return RunConfig.from_dict(read_json(self.run_dir(run_id) / CONFIG_FILE))

    # ------------------------------------------------------------- inputs

    def _effective_report(self, run_id: str, stage: int) -> dict:
        done = self.read_state(run_id).stages_done.get(str(stage))
        if not done:
            raise StageFailed(str(stage), RunNotFound(
                f"stage {stage} of {run_id} has no decided checkpoint"
            ))
        if "checkpoint_id" in done:
            record = self.store.get(done["checkpoint_id"])
            return dict(record.effective_report)
        report_path = self.run_dir(run_id) / stage_dir_name(stage) / "report.json"
        return read_json(report_path)

    def _inputs(self, run_id: str, upto_stage: int) -> dict:
        """Artifacts of every decided stage before `upto_stage`.

        Artifacts are rebuilt from the effective (possibly edited) reports,
        so reviewer edits flow into downstream stages.
        """
        inputs: dict[str, object] = {}
        state = self.read_state(run_id)
        as_of = state.as_of
        if upto_stage > 1:
            report = self._effective_report(run_id, 1)
            inputs["postmortem"] = CrewReport.from_dict(report)
        if upto_stage > 2:
            report = self._effective_report(run_id, 2)
            inputs["screening"] = ScreeningShortlist(
                as_of=as_of,
                symbols=tuple(c["symbol"] for c in report["candidates"]),
            )
        if upto_stage > 3:
            report = self._effective_report(run_id, 3)
            inputs["analysis"] = AnalysisShortlist(
                as_of=as_of,
                entries=tuple(dict(c) for c in report["candidates"]),
            )
        if upto_stage > 4:
            report = self._effective_report(run_id, 4)
            inputs["timing"] = TimingSlate(
                as_of=as_of,
                decisions=tuple(
                    TimingDecision(
                        symbol=c["symbol"],
                        action=c["action"],
                        confidence=float(c["confidence"]),
                        risk_flags=tuple(c.get("risk_flags", [])),
                    )
                    for c in report["candidates"]
                ),
            )
        return inputs

    # ------------------------------------------------------------- advance

    def advance(self, run_id: str) -> RunState:
        """Drive the run until it blocks, publishes, or fails."""
        while True:
            with run_lock(self.run_dir(run_id)):
                state = self.read_state(run_id)
                if state.status != RUNNING:
                    return state
                state = self._execute_current_stage(state)
                if state.status == FAILED:
                    return state
                if state.status == AWAITING_REVIEW and state.auto_approve:
                    done = state.stages_done[str(state.current_stage)]
                    self.submit_decision(
                        done["checkpoint_id"], "approve",
                        reviewer="auto", note="auto-approved",
                    )
                    continue
                if state.status == AWAITING_PUBLISH and state.auto_approve:
                    return self.publish(run_id, reviewer="auto")
                return state

    def _execute_current_stage(self, state: RunState) -> RunState:
        run_id = state.run_id
        stage = state.current_stage
        attempt = state.attempts[str(stage)]
        config = self.load_config(run_id)
        env = self._env(run_id, config)
        inputs = self._inputs(run_id, stage)
        seed = derive_seed(state.seed, stage, attempt)
        transcript_path = (
            self.run_dir(run_id) / "transcript"
            / f"stage-{stage}-{STAGE_NAMES[stage]}-a{attempt}.jsonl"
        )
        self._audit(run_id, "stage_started", stage=stage, attempt=attempt, seed=seed)
        ledger_before = env.ledger.to_dict()
        try:
            result = run_stage(
                stage, env, inputs,
                seed=seed, attempt=attempt, transcript_path=transcript_path,
            )
        except StageFailed as exc:
            state.status = FAILED
            state.error = str(exc)
            self._write_state(state)
            self._audit(run_id, "stage_failed", stage=stage, attempt=attempt,
                        error=str(exc))
            return state
        self._persist_stage(state, stage, attempt, result, ledger_before)
        if stage <= 4:
            record = self.store.create(
                run_id, stage, STAGE_NAMES[stage], attempt, result.report.to_dict()
            )
            state.stages_done[str(stage)] = {"checkpoint_id": record.checkpoint_id}
            state.status = AWAITING_REVIEW
            self._write_state(state)
            self._audit(run_id, "checkpoint_created", stage=stage,
                        checkpoint_id=record.checkpoint_id)
        else:
            state.stages_done[str(stage)] = {"artifact": "allocation"}
            state.status = AWAITING_PUBLISH
            self._write_state(state)
            self._audit(run_id, "allocation_ready", stage=stage)
        return state

    def _persist_stage(self, state, stage, attempt, result, ledger_before) -> None:
        run_dir = self.run_dir(state.run_id)
        stage_dir = run_dir / stage_dir_name(stage)
        stage_dir.mkdir(exist_ok=True)
        atomic_write_text(
            stage_dir / "report.json",
            canonical_json(result.report.to_dict()) + "\n",
        )
        atomic_write_text(
            stage_dir / "artifact.json",
            canonical_json(artifact_to_dict(stage, result.artifact)) + "\n",
        )
        if stage == 5:
            allocation: PortfolioAllocation = result.artifact
            atomic_write_text(stage_dir / ALLOCATION_CSV, allocation.to_csv())
            atomic_write_text(
                stage_dir / ALLOCATION_JSON,
                canonical_json(allocation.to_dict()) + "\n",
            )
        env = self._envs[state.run_id]
        after = env.ledger.to_dict()
        cost_path = run_dir / COST_FILE
        cost = read_json(cost_path) if cost_path.exists() else {
            "prompt_tokens": 0, "completion_tokens": 0, "total_tokens": 0,
            "calls": 0, "stages": {},
        }
        delta = {
            key: after[key] - ledger_before[key]
            for key in ("prompt_tokens", "completion_tokens", "total_tokens", "calls")
        }
        for key, value in delta.items():
            cost[key] += value
        cost["stages"][f"{stage}-a{attempt}"] = delta
        write_json(cost_path, cost, pretty=True)

    # ------------------------------------------------------------- decisions

    def _edit_validator(self, run_id: str):
        def validate(stage: int, edited: Mapping) -> None:
            payload = {
                "sections": edited.get("sections", {}),
                "candidates": edited.get("candidates", []),
                "rationale": edited.get("rationale", ""),
                "references": edited.get("references", []),
            }
            validate_payload(payload, REPORT_SCHEMAS[stage])
            self._check_edit_bounds(run_id, stage, payload["candidates"])
        return validate

    def _check_edit_bounds(self, run_id: str, stage: int, candidates: list) -> None:
        config = self.load_config(run_id)
        bounds = config.bounds.to_bounds()
        snapshot_universe = frozenset(
            read_json(self.run_dir(run_id) / "snapshot" / "manifest.json")["universe"]
        )
        symbols = [c["symbol"] for c in candidates] if stage != 1 else []
        if len(set(symbols)) != len(symbols):
            raise CardinalityViolation("edited report lists duplicate symbols")
        if stage == 2:
            n = len(candidates)
            if not (bounds.screen_min <= n <= bounds.screen_max):
                raise CardinalityViolation(
                    f"screening requires {bounds.screen_min} to "
                    f"{bounds.screen_max} tickers, edit has {n}"
                )
            unknown = sorted(set(symbols) - snapshot_universe)
            if unknown:
                raise UnknownSymbolCited(
                    f"edit cites symbols outside the snapshot: {', '.join(unknown)}"
                )
        elif stage == 3:
            n = len(candidates)
            if not (bounds.analysis_min <= n <= bounds.analysis_max):
                raise CardinalityViolation(
                    f"analysis requires {bounds.analysis_min} to "
                    f"{bounds.analysis_max} entries, edit has {n}"
                )
            screening = self._effective_report(run_id, 2)
            held = frozenset()
            prior_path = self.run_dir(run_id) / PRIOR_FILE
            if prior_path.exists():
                held = frozenset(read_json(prior_path)["symbols"])
            allowed = {c["symbol"] for c in screening["candidates"]} | held
            outside = sorted(set(symbols) - allowed)
            if outside:
                raise UnknownSymbolCited(
                    f"edit cites symbols outside the screening shortlist and "
                    f"prior holdings: {', '.join(outside)}"
                )
        elif stage == 4:
            buys = [c for c in candidates if c.get("action") == "buy"]
            if not (bounds.buy_min <= len(buys) <= bounds.buy_max):
                raise CardinalityViolation(
                    f"timing requires {bounds.buy_min} to {bounds.buy_max} "
                    f"buys, edit has {len(buys)}"
                )
            analysis = self._effective_report(run_id, 3)
            allowed = {c["symbol"] for c in analysis["candidates"]}
            outside = sorted(set(symbols) - allowed)
            if outside:
                raise UnknownSymbolCited(
                    f"edit cites symbols outside the analysis shortlist: "
                    f"{', '.join(outside)}"
                )

    def submit_decision(
        self,
        cp_id: str,
        verdict: str,
        *,
        reviewer: str,
        note: str = "",
        edited_report: Mapping | None = None,
    ) -> CheckpointRecord:
        record = self.store.get(cp_id)
        run_id = record.run_id
        with run_lock(self.run_dir(run_id)):
            state = self.read_state(run_id)
            decided = self.store.decide(
                cp_id, verdict,
                reviewer=reviewer, note=note, edited_report=edited_report,
                edit_validator=self._edit_validator(run_id),
            )
            if decided.state in (APPROVED, EDITED):
                state.current_stage = record.stage + 1
                state.status = RUNNING
            elif decided.state == REJECTED:
                state.attempts[str(record.stage)] += 1
                state.status = RUNNING
            self._write_state(state)
            self._audit(run_id, "decision_submitted", checkpoint_id=cp_id,
                        verdict=decided.state, reviewer=reviewer, note=note)
            return decided

    # ------------------------------------------------------------- publish

    def publish(self, run_id: str, *, reviewer: str) -> RunState:
        with run_lock(self.run_dir(run_id)):
            state = self.read_state(run_id)
            if state.status != AWAITING_PUBLISH:
                raise RunNotPublishable(
                    f"run {run_id} is {state.status}; only a run awaiting "
                    f"publication can be published"
                )
            state.status = PUBLISHED
            self._write_state(state)
            self._audit(run_id, "published", reviewer=reviewer)
            return state

    def allocation(self, run_id: str) -> PortfolioAllocation | None:
        """The published allocation, or None while unpublished."""
        state = self.read_state(run_id)
        if state.status != PUBLISHED:
            return None
        path = self.run_dir(run_id) / stage_dir_name(5) / ALLOCATION_JSON
        return PortfolioAllocation.from_dict(read_json(path))

    def allocation_csv(self, run_id: str) -> str | None:
        state = self.read_state(run_id)
        if state.status != PUBLISHED:
            return None
        path = self.run_dir(run_id) / stage_dir_name(5) / ALLOCATION_CSV
        return path.read_text("utf-8")
