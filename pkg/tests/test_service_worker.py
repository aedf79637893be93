"""Gateway routes, auth, error mapping, and the background worker."""
from __future__ import annotations

import time

import pytest
from fastapi.testclient import TestClient

from masfin.pipeline import AWAITING_REVIEW, PUBLISHED, RUNNING, RunDirector
from masfin.service import RunWorker, create_app

TOKEN = "test-token-1"
AUTH = {"Authorization": f"Bearer {TOKEN}"}


@pytest.fixture
def director(run_config):
    return RunDirector(run_config.out_dir)


@pytest.fixture
def client(director):
    app = create_app(director, token=TOKEN)
    with TestClient(app) as c:
        yield c


def wait_for(predicate, timeout=10.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        value = predicate()
        if value:
            return value
        time.sleep(0.02)
    raise AssertionError("condition not reached in time")


class TestAuth:
    def test_health_is_open(self, client):
        body = client.get("/api/health").json()
        assert body == {"status": "ok", "pending_checkpoints": 0}

    def test_missing_token(self, client):
        resp = client.get("/api/runs")
        assert resp.status_code == 401
        assert resp.json()["detail"] == "missing bearer token"

    def test_wrong_token(self, client):
        resp = client.get("/api/runs", headers={"Authorization": "Bearer nope"})
        assert resp.status_code == 401
        assert resp.json()["detail"] == "invalid token"

    def test_placeholder_page_served_without_console(self, client):
        resp = client.get("/")
        assert resp.status_code == 200
        assert "No review console build" in resp.text

    def test_console_dir_mounted_when_present(self, director, tmp_path):
        console = tmp_path / "console"
        console.mkdir()
        (console / "index.html").write_text("<html><body>console build</body></html>")
        app = create_app(director, token=TOKEN, console_dir=console)
        with TestClient(app) as c:
            assert "console build" in c.get("/").text


class TestErrorMapping:
    def test_unknown_run_404(self, client):
        resp = client.get("/api/runs/run-00000000000000-ffffff", headers=AUTH)
        assert resp.status_code == 404

    def test_unknown_checkpoint_404(self, client):
        resp = client.get("/api/checkpoints/cp-run-x-s1-a0", headers=AUTH)
        assert resp.status_code == 404

    def test_publish_before_ready_409(self, client, director, run_config):
        state = director.start_run(run_config)
        resp = client.post(f"/api/runs/{state.run_id}/publish", headers=AUTH)
        assert resp.status_code == 409

    def test_unknown_verdict_rejected_by_schema(self, client, director, run_config):
        state = director.start_run(run_config)
        director.advance(state.run_id)
        state = director.read_state(state.run_id)
        cp = state.stages_done["1"]["checkpoint_id"]
        resp = client.post(
            f"/api/checkpoints/{cp}/decision", headers=AUTH,
            json={"verdict": "maybe"},
        )
        assert resp.status_code == 422  # pydantic enum catches it pre-handler

    def test_extra_body_fields_rejected(self, client, director, run_config):
        state = director.start_run(run_config)
        director.advance(state.run_id)
        state = director.read_state(state.run_id)
        cp = state.stages_done["1"]["checkpoint_id"]
        resp = client.post(
            f"/api/checkpoints/{cp}/decision", headers=AUTH,
            json={"verdict": "approve", "surprise": 1},
        )
        assert resp.status_code == 422

    def test_invalid_edit_422_with_reason(self, client, director, run_config):
        state = director.start_run(run_config)
        run_id = state.run_id
        director.advance(run_id)
        cp1 = director.read_state(run_id).stages_done["1"]["checkpoint_id"]
        director.submit_decision(cp1, "approve", reviewer="t")
        director.advance(run_id)
        cp2 = director.read_state(run_id).stages_done["2"]["checkpoint_id"]
        report = dict(director.store.get(cp2).report)
        report["candidates"] = report["candidates"][:10]  # below the floor
        resp = client.post(
            f"/api/checkpoints/{cp2}/decision", headers=AUTH,
            json={"verdict": "edit", "edited_report": report},
        )
        assert resp.status_code == 422
        assert "edited report rejected" in resp.json()["detail"]
        # the checkpoint is still pending after the failed edit
        assert client.get(
            f"/api/checkpoints/{cp2}", headers=AUTH
        ).json()["state"] == "pending"


class TestReviewFlow:
    def test_full_decide_and_publish_cycle(self, client, director, run_config):
        state = director.start_run(run_config)
        run_id = state.run_id
        director.advance(run_id)

        for stage in (1, 2, 3, 4):
            listed = client.get(
                "/api/checkpoints", params={"state": "pending"}, headers=AUTH,
            ).json()
            assert len(listed) == 1
            cp = listed[0]
            assert cp["stage"] == stage
            assert cp["run_id"] == run_id

            detail = client.get(
                f"/api/checkpoints/{cp['checkpoint_id']}", headers=AUTH
            ).json()
            assert "report" in detail and detail["report"]["sections"]

            resp = client.post(
                f"/api/checkpoints/{cp['checkpoint_id']}/decision", headers=AUTH,
                json={"verdict": "approve", "reviewer": "qa", "note": "ok"},
            )
            assert resp.status_code == 200
            body = resp.json()
            assert body["checkpoint"]["state"] == "approved"
            assert body["run"]["status"] == RUNNING
            director.advance(run_id)

        # allocation is still gated behind the explicit publish
        resp = client.get(f"/api/runs/{run_id}/allocation", headers=AUTH)
        assert resp.status_code == 404
        assert "awaiting-publish" in resp.json()["detail"]

        resp = client.post(f"/api/runs/{run_id}/publish", headers=AUTH)
        assert resp.status_code == 200
        assert resp.json()["status"] == PUBLISHED

        allocation = client.get(f"/api/runs/{run_id}/allocation", headers=AUTH).json()
        assert allocation["run_id"] == run_id
        assert abs(allocation["weight_sum"] - 1.0) < 1e-9
        assert 15 <= len(allocation["positions"]) <= 30
        assert max(allocation["sector_shares"].values()) <= 0.30 + 1e-9

        csv_resp = client.get(f"/api/runs/{run_id}/allocation.csv", headers=AUTH)
        assert csv_resp.status_code == 200
        assert csv_resp.headers["content-type"].startswith("text/csv")
        assert csv_resp.text.splitlines()[0] == "symbol,weight,sector,rationale"

        resp = client.post(f"/api/runs/{run_id}/publish", headers=AUTH)
        assert resp.status_code == 409  # publishing is once only

    def test_run_listing_and_detail(self, client, director, run_config):
        state = director.start_run(run_config)
        listed = client.get("/api/runs", headers=AUTH).json()
        assert [r["run_id"] for r in listed] == [state.run_id]
        assert "seed" not in listed[0]  # summary stays small
        detail = client.get(f"/api/runs/{state.run_id}", headers=AUTH).json()
        assert detail["seed"] == 7
        assert detail["attempts"]["1"] == 0


class TestWorker:
    def test_sweep_advances_running_runs(self, director, run_config):
        state = director.start_run(run_config)
        worker = RunWorker(director)
        assert worker.sweep() == 1
        assert director.read_state(state.run_id).status == AWAITING_REVIEW
        assert worker.sweep() == 0  # nothing runnable while review is pending

    def test_background_loop_picks_up_decisions(self, director, run_config):
        worker = RunWorker(director, poll_interval=0.05)
        worker.start()
        try:
            with pytest.raises(RuntimeError):
                worker.start()  # double start is a bug, not a no-op
            state = director.start_run(run_config)
            run_id = state.run_id
            wait_for(
                lambda: director.read_state(run_id).status == AWAITING_REVIEW
            )
            cp = director.read_state(run_id).stages_done["1"]["checkpoint_id"]
            director.submit_decision(cp, "approve", reviewer="t")
            worker.kick()
            wait_for(
                lambda: director.read_state(run_id).status == AWAITING_REVIEW
                and director.read_state(run_id).current_stage == 2
            )
        finally:
            worker.stop()

    def test_auto_approve_run_published_by_worker(self, director, run_config):
        worker = RunWorker(director, poll_interval=0.05)
        worker.start()
        try:
            config = run_config.model_copy(update={"auto_approve": True})
            state = director.start_run(config)
            wait_for(
                lambda: director.read_state(state.run_id).status == PUBLISHED
            )
        finally:
            worker.stop()

    def test_sweep_survives_a_poisoned_run(self, director, run_config, monkeypatch):
        state = director.start_run(run_config)
        healthy = director.start_run(run_config)
        original = director.advance

        def poisoned(run_id):
            if run_id == state.run_id:
                raise OSError("disk went away")
            return original(run_id)

        monkeypatch.setattr(director, "advance", poisoned)
        worker = RunWorker(director)
        assert worker.sweep() == 1  # healthy run still advanced
        assert director.read_state(healthy.run_id).status == AWAITING_REVIEW
