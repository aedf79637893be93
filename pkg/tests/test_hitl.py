"""Checkpoint store: decision state machine, persistence, and log."""
from __future__ import annotations

import json

import pytest

from masfin.errors import (
    CheckpointNotFound,
    CheckpointNotPending,
    DuplicatePendingCheckpoint,
    EditValidationFailed,
)
from masfin.hitl.store import (
    APPROVED,
    CheckpointRecord,
    CheckpointStore,
    EDITED,
    PENDING,
    REJECTED,
    checkpoint_id,
    parse_checkpoint_id,
)

RUN = "run-20250602120000-abc123"
REPORT = {"sections": {"overview": "text"}, "candidates": [], "rationale": "r",
          "references": []}


@pytest.fixture
def store(tmp_path):
    return CheckpointStore(tmp_path / "runs")


def test_checkpoint_id_round_trip():
    cp = checkpoint_id(RUN, 3, 1)
    assert cp == f"cp-{RUN}-s3-a1"
    assert parse_checkpoint_id(cp) == (RUN, 3, 1)


def test_malformed_id_rejected():
    with pytest.raises(CheckpointNotFound):
        parse_checkpoint_id("not-a-checkpoint")
    with pytest.raises(CheckpointNotFound):
        parse_checkpoint_id("cp-run-sX-a0")


def test_create_then_get(store):
    created = store.create(RUN, 2, "screening", 0, REPORT)
    assert created.state == PENDING
    assert created.effective_report == REPORT
    loaded = store.get(created.checkpoint_id)
    assert loaded == created


def test_get_missing_raises(store):
    with pytest.raises(CheckpointNotFound):
        store.get(checkpoint_id(RUN, 2, 0))


def test_one_pending_per_run(store):
    store.create(RUN, 2, "screening", 0, REPORT)
    with pytest.raises(DuplicatePendingCheckpoint):
        store.create(RUN, 3, "analysis", 0, REPORT)
    # a different run is unaffected
    store.create("run-20250602130000-def456", 2, "screening", 0, REPORT)


def test_approve(store):
    cp = store.create(RUN, 2, "screening", 0, REPORT)
    decided = store.decide(cp.checkpoint_id, "approve", reviewer="pm", note="ok")
    assert decided.state == APPROVED
    assert decided.reviewer == "pm"
    assert decided.note == "ok"
    assert decided.decided_at is not None
    assert decided.effective_report == REPORT
    assert store.get(cp.checkpoint_id).state == APPROVED


def test_reject(store):
    cp = store.create(RUN, 2, "screening", 0, REPORT)
    decided = store.decide(cp.checkpoint_id, "reject", reviewer="pm")
    assert decided.state == REJECTED
    assert decided.edited_report is None


def test_edit_replaces_effective_report(store):
    cp = store.create(RUN, 2, "screening", 0, REPORT)
    edited = dict(REPORT, rationale="tightened")
    decided = store.decide(
        cp.checkpoint_id, "edit", reviewer="pm", edited_report=edited,
    )
    assert decided.state == EDITED
    assert decided.report == REPORT  # original preserved alongside
    assert decided.effective_report == edited


def test_edit_requires_payload(store):
    cp = store.create(RUN, 2, "screening", 0, REPORT)
    with pytest.raises(EditValidationFailed):
        store.decide(cp.checkpoint_id, "edit", reviewer="pm")
    # the failure leaves the checkpoint pending
    assert store.get(cp.checkpoint_id).state == PENDING


def test_edit_validator_gates_the_payload(store):
    def validator(stage, payload):
        raise CheckpointNotPending("stand-in violation")

    cp = store.create(RUN, 2, "screening", 0, REPORT)
    with pytest.raises(EditValidationFailed) as exc:
        store.decide(
            cp.checkpoint_id, "edit", reviewer="pm",
            edited_report={"bad": 1}, edit_validator=validator,
        )
    assert "edited report rejected" in str(exc.value)
    assert store.get(cp.checkpoint_id).state == PENDING


def test_decisions_are_terminal(store):
    cp = store.create(RUN, 2, "screening", 0, REPORT)
    store.decide(cp.checkpoint_id, "approve", reviewer="pm")
    for verdict in ("approve", "edit", "reject"):
        with pytest.raises(CheckpointNotPending):
            store.decide(cp.checkpoint_id, verdict, reviewer="pm",
                         edited_report=REPORT)


def test_unknown_verdict_rejected(store):
    cp = store.create(RUN, 2, "screening", 0, REPORT)
    with pytest.raises(CheckpointNotPending):
        store.decide(cp.checkpoint_id, "maybe", reviewer="pm")


def test_new_checkpoint_allowed_after_decision(store):
    cp = store.create(RUN, 2, "screening", 0, REPORT)
    store.decide(cp.checkpoint_id, "reject", reviewer="pm")
    retry = store.create(RUN, 2, "screening", 1, REPORT)
    assert retry.checkpoint_id == f"cp-{RUN}-s2-a1"
    records = store.for_run(RUN)
    assert [r.attempt for r in records] == [0, 1]


def test_for_run_orders_by_stage_then_attempt(store):
    a = store.create(RUN, 2, "screening", 0, REPORT)
    store.decide(a.checkpoint_id, "reject", reviewer="pm")
    b = store.create(RUN, 2, "screening", 1, REPORT)
    store.decide(b.checkpoint_id, "approve", reviewer="pm")
    store.create(RUN, 3, "analysis", 0, REPORT)
    assert [(r.stage, r.attempt) for r in store.for_run(RUN)] == [
        (2, 0), (2, 1), (3, 0),
    ]


def test_list_all_filters_by_state(store):
    cp = store.create(RUN, 2, "screening", 0, REPORT)
    store.decide(cp.checkpoint_id, "approve", reviewer="pm")
    other = store.create("run-20250602130000-def456", 2, "screening", 0, REPORT)
    pending = store.list_all(state=PENDING)
    assert [r.checkpoint_id for r in pending] == [other.checkpoint_id]
    assert len(store.list_all()) == 2


def test_log_records_every_transition(store, tmp_path):
    cp = store.create(RUN, 2, "screening", 0, REPORT)
    store.decide(cp.checkpoint_id, "reject", reviewer="pm", note="rerun it")
    log_path = tmp_path / "runs" / RUN / "checkpoints" / "log.jsonl"
    events = [json.loads(line) for line in log_path.read_text().splitlines()]
    assert [e["event"] for e in events] == ["created", "decided"]
    assert events[0]["checkpoint_id"] == cp.checkpoint_id
    assert events[1]["state"] == REJECTED
    assert events[1]["note"] == "rerun it"


def test_record_survives_json_round_trip(store):
    cp = store.create(RUN, 4, "timing", 2, REPORT)
    again = CheckpointRecord.from_dict(cp.to_dict())
    assert again == cp
