"""Append-only checkpoint records with a strict decision state machine.

A checkpoint is pending until exactly one decision lands on it: approve,
edit, or reject.  Decisions are terminal; the record file is rewritten
once and every transition is also appended to a per-run log so history
survives any later inspection.  Locking is per run directory and shared
process-wide, so the API, the worker, and a CLI driver can all touch the
same run safely.
"""
from __future__ import annotations

import re
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping

from filelock import FileLock

from ..errors import (
    CheckpointNotFound,
    CheckpointNotPending,
    DuplicatePendingCheckpoint,
    EditValidationFailed,
    MasfinError,
)
from ..util import atomic_write_text, canonical_json, iso_ts, read_json, utcnow

PENDING = "pending"
APPROVED = "approved"
EDITED = "edited"
REJECTED = "rejected"
TERMINAL_STATES = frozenset({APPROVED, EDITED, REJECTED})
VERDICTS = frozenset({"approve", "edit", "reject"})

_CP_ID = re.compile(r"^cp-(?P<run>.+)-s(?P<stage>\d+)-a(?P<attempt>\d+)$")

_locks: dict[str, FileLock] = {}
_locks_guard = threading.Lock()


def run_lock(run_dir: Path) -> FileLock:
    """One shared, re-entrant lock object per run directory."""
    key = str(Path(run_dir).resolve())
    with _locks_guard:
        lock = _locks.get(key)
        if lock is None:
            Path(run_dir).mkdir(parents=True, exist_ok=True)
            lock = FileLock(Path(run_dir) / ".lock")
            _locks[key] = lock
        return lock


def checkpoint_id(run_id: str, stage: int, attempt: int) -> str:
    return f"cp-{run_id}-s{stage}-a{attempt}"


def parse_checkpoint_id(cp_id: str) -> tuple[str, int, int]:
    found = _CP_ID.match(cp_id)
    if not found:
        raise CheckpointNotFound(f"malformed checkpoint id: {cp_id}")
    return found["run"], int(found["stage"]), int(found["attempt"])


@dataclass(frozen=True)
class CheckpointRecord:
    checkpoint_id: str
    run_id: str
    stage: int
    stage_name: str
    attempt: int
    state: str
    report: Mapping
    edited_report: Mapping | None
    note: str
    reviewer: str
    created_at: str
    decided_at: str | None

    @property
    def effective_report(self) -> Mapping:
        """What downstream stages consume: the edit when there is one."""
        return self.edited_report if self.edited_report is not None else self.report

    def to_dict(self) -> dict:
        return {
            "checkpoint_id": self.checkpoint_id,
            "run_id": self.run_id,
            "stage": self.stage,
            "stage_name": self.stage_name,
            "attempt": self.attempt,
            "state": self.state,
            "report": dict(self.report),
            "edited_report": dict(self.edited_report) if self.edited_report else None,
            "note": self.note,
            "reviewer": self.reviewer,
            "created_at": self.created_at,
            "decided_at": self.decided_at,
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "CheckpointRecord":
        return cls(
            checkpoint_id=raw["checkpoint_id"],
            run_id=raw["run_id"],
            stage=int(raw["stage"]),
            stage_name=raw["stage_name"],
            attempt=int(raw["attempt"]),
            state=raw["state"],
            report=raw["report"],
            edited_report=raw.get("edited_report"),
            note=raw.get("note", ""),
            reviewer=raw.get("reviewer", ""),
            created_at=raw["created_at"],
            decided_at=raw.get("decided_at"),
        )


class CheckpointStore:
    """Checkpoint persistence under `<runs_root>/<run_id>/checkpoints/`."""

    def __init__(self, runs_root: str | Path):
        self.runs_root = Path(runs_root)

    def _dir(self, run_id: str) -> Path:
        return self.runs_root / run_id / "checkpoints"

    def _path(self, record_or_id) -> Path:
        cp_id = record_or_id if isinstance(record_or_id, str) else record_or_id.checkpoint_id
        run_id, _, _ = parse_checkpoint_id(cp_id)
        return self._dir(run_id) / f"{cp_id}.json"

    def _append_log(self, run_id: str, event: dict) -> None:
        log = self._dir(run_id) / "log.jsonl"
        log.parent.mkdir(parents=True, exist_ok=True)
        with open(log, "a", encoding="utf-8") as fh:
            fh.write(canonical_json(event) + "\n")

    def _write(self, record: CheckpointRecord) -> None:
        path = self._path(record)
        path.parent.mkdir(parents=True, exist_ok=True)
        atomic_write_text(path, canonical_json(record.to_dict()) + "\n")

    def create(
        self, run_id: str, stage: int, stage_name: str, attempt: int, report: Mapping
    ) -> CheckpointRecord:
        with run_lock(self.runs_root / run_id):
            pending = [r for r in self.for_run(run_id) if r.state == PENDING]
            if pending:
                raise DuplicatePendingCheckpoint(
                    f"run {run_id} already has pending checkpoint "
                    f"{pending[0].checkpoint_id}"
                )
            record = CheckpointRecord(
                checkpoint_id=checkpoint_id(run_id, stage, attempt),
                run_id=run_id,
                stage=stage,
                stage_name=stage_name,
                attempt=attempt,
                state=PENDING,
                report=dict(report),
                edited_report=None,
                note="",
                reviewer="",
                created_at=iso_ts(utcnow()),
                decided_at=None,
            )
            if self._path(record).exists():
                raise DuplicatePendingCheckpoint(
                    f"checkpoint {record.checkpoint_id} already exists"
                )
            self._write(record)
            self._append_log(run_id, {
                "event": "created",
                "checkpoint_id": record.checkpoint_id,
                "stage": stage,
                "attempt": attempt,
                "at": record.created_at,
            })
            return record

    def get(self, cp_id: str) -> CheckpointRecord:
        path = self._path(cp_id)
        if not path.exists():
            raise CheckpointNotFound(f"no such checkpoint: {cp_id}")
        return CheckpointRecord.from_dict(read_json(path))

    def for_run(self, run_id: str) -> list[CheckpointRecord]:
        cp_dir = self._dir(run_id)
        if not cp_dir.is_dir():
            return []
        records = [
            CheckpointRecord.from_dict(read_json(p))
            for p in sorted(cp_dir.glob("cp-*.json"))
        ]
        return sorted(records, key=lambda r: (r.stage, r.attempt))

    def list_all(self, state: str | None = None) -> list[CheckpointRecord]:
        records: list[CheckpointRecord] = []
        if self.runs_root.is_dir():
            for run_dir in sorted(self.runs_root.iterdir()):
                if run_dir.is_dir():
                    records.extend(self.for_run(run_dir.name))
        if state is not None:
            records = [r for r in records if r.state == state]
        return sorted(records, key=lambda r: r.created_at, reverse=True)

    def decide(
        self,
        cp_id: str,
        verdict: str,
        *,
        reviewer: str,
        note: str = "",
        edited_report: Mapping | None = None,
        edit_validator: Callable[[int, Mapping], None] | None = None,
    ) -> CheckpointRecord:
        if verdict not in VERDICTS:
            raise CheckpointNotPending(
                f"unknown verdict {verdict!r}; expected approve, edit, or reject"
            )
        run_id, _, _ = parse_checkpoint_id(cp_id)
        with run_lock(self.runs_root / run_id):
            record = self.get(cp_id)
            if record.state != PENDING:
                raise CheckpointNotPending(
                    f"checkpoint {cp_id} is {record.state}; decisions are final"
                )
            edited: Mapping | None = None
            if verdict == "edit":
                if edited_report is None:
                    raise EditValidationFailed("edit verdict requires edited_report")
                if edit_validator is not None:
                    try:
                        edit_validator(record.stage, edited_report)
                    except MasfinError as exc:
                        raise EditValidationFailed(
                            f"edited report rejected: {exc}"
                        ) from exc
                edited = dict(edited_report)
            state = {"approve": APPROVED, "edit": EDITED, "reject": REJECTED}[verdict]
            decided = CheckpointRecord(
                checkpoint_id=record.checkpoint_id,
                run_id=record.run_id,
                stage=record.stage,
                stage_name=record.stage_name,
                attempt=record.attempt,
                state=state,
                report=record.report,
                edited_report=edited,
                note=note,
                reviewer=reviewer,
                created_at=record.created_at,
                decided_at=iso_ts(utcnow()),
            )
            self._write(decided)
            self._append_log(run_id, {
                "event": "decided",
                "checkpoint_id": cp_id,
                "state": state,
                "reviewer": reviewer,
                "note": note,
                "at": decided.decided_at,
            })
            return decided
