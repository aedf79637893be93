"""Prompt rendering, structured parsing, crew execution, and backends."""
from __future__ import annotations

import json
import math
import os

import pytest

from masfin.agents.backends import (
    ChatBackend,
    ScriptedBackend,
    TokenLedger,
    extract_agent_mark,
    extract_context_block,
    scripted_response_text,
)
from masfin.agents.crew import crew_inputs_digest, run_crew
from masfin.agents.prompts import estimate_tokens, render_messages, render_prompt
from masfin.agents.rules import RULES, run_agent_rules
from masfin.agents.schemas import REPORT_SCHEMAS, SCHEMAS
from masfin.agents.spec import load_crew_book, parse_crew_documents
from masfin.agents.structured import (
    extract_structured_block,
    parse_structured_output,
    validate_payload,
)
from masfin.errors import (
    ConfigError,
    ContextBudgetExceeded,
    CrewAborted,
    MissingContextKey,
    MissingEnvironment,
    NoStructuredBlock,
    RetriesExhausted,
    SchemaViolation,
)

from mockchat import MockChatServer


def _postmortem_context() -> dict:
    return {
        "stage": 1,
        "as_of": "2025-06-02",
        "corpus": [
            {"ticker": "AAA", "sector": "ev_auto", "reason": "bankruptcy",
             "date_range": "2020-2022",
             "headlines": ["AAA misses earnings forecast", "AAA announces layoffs"]},
            {"ticker": "BBB", "sector": "ev_auto", "reason": "bankruptcy",
             "date_range": "2021-2022",
             "headlines": ["BBB faces regulatory warning"]},
            {"ticker": "CCC", "sector": "cannabis", "reason": "listing_price_failure",
             "date_range": "2019-2023",
             "headlines": ["CCC cuts guidance amid slowdown"]},
        ],
    }


class TestPrompts:
    def test_token_estimate_is_ceil_quarter_chars(self):
        assert estimate_tokens("") == 0
        assert estimate_tokens("abcd") == 1
        assert estimate_tokens("abcde") == 2
        assert estimate_tokens("x" * 403) == math.ceil(403 / 4)

    def test_missing_key_is_named(self):
        with pytest.raises(MissingContextKey) as err:
            render_prompt("Goal: {goal}\n{context_json}", {"context_json_x": 1})
        assert "goal" in str(err.value)

    def test_headlines_trimmed_before_tickers(self):
        context = {
            "headlines": [
                {"published_at": f"2025-06-0{d}T09:00:00Z", "headline": f"h{d}"}
                for d in range(1, 8)
            ],
            "tickers": [
                {"symbol": f"T{i:02d}", "metrics": {"zscore_5d": float(i)}}
                for i in range(40)
            ],
        }
        full = render_prompt("{context_json}", context)
        n = len(full)
        budget = estimate_tokens(full) - 2
        out = render_prompt("{context_json}", context, token_budget=budget)
        got = json.loads(out)
        assert len(got["headlines"]) < 7
        assert len(got["tickers"]) == 40
        kept = [h["headline"] for h in got["headlines"]]
        assert kept == [f"h{d}" for d in range(7, 7 - len(kept), -1)]

    def test_ticker_trim_keeps_extreme_zscores(self):
        context = {
            "headlines": [],
            "tickers": [
                {"symbol": f"T{i:02d}", "metrics": {"zscore_5d": z}}
                for i, z in enumerate([0.1, -4.0, 0.2, 3.5, 0.05, -0.6] * 10)
            ],
        }
        tight = None
        # Walk the budget down until some tickers fall off.
        for budget in range(estimate_tokens(render_prompt("{context_json}", context)), 10, -40):
            out = json.loads(render_prompt("{context_json}", context, token_budget=budget))
            if len(out["tickers"]) < 60:
                tight = out
                break
        assert tight is not None
        zs = {t["symbol"]: abs(t["metrics"]["zscore_5d"]) for t in tight["tickers"]}
        assert any(abs(v - 4.0) < 1e-9 for v in zs.values())
        symbols = [t["symbol"] for t in tight["tickers"]]
        assert symbols == sorted(symbols)

    def test_budget_floor_raises(self):
        context = {"headlines": [], "tickers": [],
                   "note": "y" * 4000}
        with pytest.raises(ContextBudgetExceeded):
            render_prompt("{context_json}", context, token_budget=5)

    def test_messages_share_one_budget(self):
        context = {"goal": "g", "tickers": [], "headlines": []}
        messages = render_messages("sys {goal}", "user {context_json}", context)
        assert [m["role"] for m in messages] == ["system", "user"]
        with pytest.raises(ContextBudgetExceeded):
            render_messages("sys " + "q" * 400, "user {context_json}", context,
                            token_budget=100)


class TestStructured:
    def test_fenced_block_wins(self):
        text = "Header\n```json\n{\"a\": 1}\n```\ntrailing"
        assert extract_structured_block(text) == {"a": 1}

    def test_first_parsable_dict_fence_wins(self):
        text = "```json\nnot json\n```\n```json\n{\"b\": 2}\n```"
        assert extract_structured_block(text) == {"b": 2}

    def test_bare_object_accepted(self):
        assert extract_structured_block('  {"c": 3}  ') == {"c": 3}

    def test_prose_rejected(self):
        with pytest.raises(NoStructuredBlock):
            extract_structured_block("I will buy some stocks.")

    def test_schema_violation_names_location(self):
        payload = {"sections": {}, "candidates": [], "rationale": "", "references": []}
        with pytest.raises(SchemaViolation) as err:
            validate_payload(payload, "screening_report")
        message = str(err.value)
        assert "screening_report" in message

    def test_timing_action_enum_enforced(self):
        candidate = {"symbol": "AAA", "action": "accumulate", "confidence": 0.5,
                     "risk_flags": [], "cited_metrics": {}}
        payload = {"sections": {}, "candidates": [candidate],
                   "rationale": "r", "references": []}
        with pytest.raises(SchemaViolation) as err:
            validate_payload(payload, "timing_report")
        assert "action" in str(err.value)

    def test_timing_cited_metric_keys_restricted(self):
        candidate = {"symbol": "AAA", "action": "buy", "confidence": 0.5,
                     "risk_flags": [], "cited_metrics": {"rsi_14": 55.0}}
        payload = {"sections": {}, "candidates": [candidate],
                   "rationale": "r", "references": []}
        with pytest.raises(SchemaViolation):
            validate_payload(payload, "timing_report")

    def test_analysis_schema_hard_cap(self):
        entries = [
            {"symbol": f"S{i:03d}", "thesis": "t", "cited_metrics": {},
             "cohort_delta": {}, "cited_headlines": []}
            for i in range(51)
        ]
        payload = {"sections": {}, "candidates": entries,
                   "rationale": "r", "references": []}
        with pytest.raises(SchemaViolation):
            validate_payload(payload, "analysis_report")

    def test_parse_round_trip_through_scripted_text(self):
        context = _postmortem_context()
        result = run_agent_rules("failure_pattern_analyst", context, seed=0)
        text = scripted_response_text("failure_pattern_analyst", result)
        parsed = extract_structured_block(text)
        assert parsed == result


class TestCrewBook:
    def test_bundle_has_five_staged_crews(self):
        book = load_crew_book()
        stages = sorted(crew.stage for crew in book.crews)
        assert stages == [1, 2, 3, 4, 5]
        for crew in book.crews:
            assert 3 <= len(crew.agents) <= 5
            for agent in crew.agents:
                assert agent.system_template.startswith("[agent:{agent_id}]")
                assert agent.output_schema in SCHEMAS
                assert agent.agent_id in RULES

    def test_final_agent_schema_matches_stage_report(self):
        book = load_crew_book()
        for crew in book.crews:
            assert crew.final_agent.output_schema == REPORT_SCHEMAS[crew.stage]

    def test_duplicate_stage_rejected(self):
        book = load_crew_book()
        docs = "\n---\n".join(
            open_text for open_text in [_crew_yaml(1, "one"), _crew_yaml(1, "two")]
        )
        with pytest.raises(ConfigError):
            parse_crew_documents(docs, origin="inline")


def _crew_yaml(stage: int, name: str) -> str:
    return f"""
version: "1.0"
crew_name: {name}
stage: {stage}
description: d
agents:
  - agent_id: failure_pattern_analyst
    role: r
    goal: g
    output_schema: failure_patterns
    system_template: "[agent:{{agent_id}}] r"
    user_template: "Goal: {{goal}}\\n```json\\n{{context_json}}\\n```"
  - agent_id: sentiment_forensics
    role: r
    goal: g
    output_schema: tone_flags
    system_template: "[agent:{{agent_id}}] r"
    user_template: "Goal: {{goal}}\\n```json\\n{{context_json}}\\n```"
  - agent_id: postmortem_summary
    role: r
    goal: g
    output_schema: postmortem_report
    system_template: "[agent:{{agent_id}}] r"
    user_template: "Goal: {{goal}}\\n```json\\n{{context_json}}\\n```"
"""


class _GarblingBackend:
    """Scripted backend that answers in prose for chosen agents, always."""

    name = "garbling"

    def __init__(self, garbled: set[str]):
        self.garbled = garbled
        self.inner = ScriptedBackend()

    def supports_reprompt(self) -> bool:
        return False

    def complete(self, agent, messages, *, seed):
        if agent.agent_id in self.garbled:
            from masfin.agents.backends import Completion
            return Completion(text="prose only, no block",
                              prompt_tokens=1, completion_tokens=1)
        return self.inner.complete(agent, messages, seed=seed)


class TestCrewRun:
    def test_postmortem_crew_end_to_end(self, tmp_path):
        book = load_crew_book()
        crew = book.by_stage(1)
        ledger = TokenLedger()
        transcript = tmp_path / "t.jsonl"
        report = run_crew(
            crew, _postmortem_context(), ScriptedBackend(),
            seed=3, produced_at="2025-06-02T13:00:00Z", ledger=ledger,
            transcript_path=transcript,
        )
        assert report.crew_name == "postmortem"
        assert report.candidates, "summary must produce themes"
        assert report.rationale
        assert ledger.calls == 3
        assert ledger.total_tokens > 0
        lines = [json.loads(l) for l in transcript.read_text().splitlines()]
        assert len(lines) == 3
        assert all(line["parsed"] for line in lines)

    def test_inputs_digest_is_context_sensitive(self):
        book = load_crew_book()
        crew = book.by_stage(1)
        base = _postmortem_context()
        changed = _postmortem_context()
        changed["as_of"] = "2025-06-09"
        assert crew_inputs_digest(crew, base, 3) == crew_inputs_digest(crew, base, 3)
        assert crew_inputs_digest(crew, base, 3) != crew_inputs_digest(crew, changed, 3)
        assert crew_inputs_digest(crew, base, 3) != crew_inputs_digest(crew, base, 4)

    def test_unparseable_agent_aborts_crew_with_agent_name(self, tmp_path):
        book = load_crew_book()
        crew = book.by_stage(1)
        backend = _GarblingBackend(garbled={"postmortem_summary"})
        with pytest.raises(CrewAborted) as err:
            run_crew(
                crew, _postmortem_context(), backend,
                seed=3, produced_at="2025-06-02T13:00:00Z", ledger=TokenLedger(),
                transcript_path=tmp_path / "t.jsonl",
            )
        assert "postmortem_summary" in str(err.value)
        lines = [json.loads(l) for l in (tmp_path / "t.jsonl").read_text().splitlines()]
        assert any(not line["parsed"] for line in lines)
        assert sum(1 for line in lines if not line["parsed"]) == 2  # repair also failed


class TestScriptedBackend:
    def test_tokens_are_size_estimates(self):
        backend = ScriptedBackend()
        book = load_crew_book()
        agent = book.by_stage(1).agents[0]
        context = dict(_postmortem_context(), agent_id=agent.agent_id, goal=agent.goal,
                       prior_outputs={})
        messages = render_messages(agent.system_template, agent.user_template, context)
        completion = backend.complete(agent, messages, seed=1)
        assert completion.prompt_tokens == sum(
            estimate_tokens(m["content"]) for m in messages
        )
        assert completion.completion_tokens == estimate_tokens(completion.text)

    def test_same_inputs_same_output(self):
        backend = ScriptedBackend()
        book = load_crew_book()
        agent = book.by_stage(1).agents[0]
        context = dict(_postmortem_context(), agent_id=agent.agent_id, goal=agent.goal,
                       prior_outputs={})
        messages = render_messages(agent.system_template, agent.user_template, context)
        a = backend.complete(agent, messages, seed=5)
        b = backend.complete(agent, messages, seed=5)
        assert a.text == b.text


class TestChatBackend:
    def _backend(self, endpoint: str, **kw) -> ChatBackend:
        return ChatBackend(endpoint=endpoint, backoff_base=0.01, **kw)

    def _messages(self):
        book = load_crew_book()
        agent = book.by_stage(1).agents[0]
        context = dict(_postmortem_context(), agent_id=agent.agent_id,
                       goal=agent.goal, prior_outputs={})
        return agent, render_messages(agent.system_template, agent.user_template, context)

    def test_requires_api_key(self, monkeypatch):
        monkeypatch.delenv("CHAT_API_KEY", raising=False)
        agent, messages = self._messages()
        with pytest.raises(MissingEnvironment):
            self._backend("http://127.0.0.1:1/v1/chat/completions").complete(
                agent, messages, seed=0)

    def test_retries_through_two_failures(self, monkeypatch):
        monkeypatch.setenv("CHAT_API_KEY", "k")
        with MockChatServer(api_key="k") as server:
            server.fail_next = 2
            agent, messages = self._messages()
            completion = self._backend(server.endpoint).complete(agent, messages, seed=0)
            assert "```json" in completion.text
            assert server.calls == 1
            assert len(server.requests) == 3

    def test_exhausted_retries_raise(self, monkeypatch):
        monkeypatch.setenv("CHAT_API_KEY", "k")
        with MockChatServer(api_key="k") as server:
            server.fail_next = 99
            agent, messages = self._messages()
            with pytest.raises(RetriesExhausted):
                self._backend(server.endpoint, retries=3).complete(agent, messages, seed=0)
            assert len(server.requests) == 3

    def test_usage_numbers_come_from_server(self, monkeypatch):
        monkeypatch.setenv("CHAT_API_KEY", "k")
        with MockChatServer(api_key="k") as server:
            agent, messages = self._messages()
            completion = self._backend(server.endpoint).complete(agent, messages, seed=0)
            assert completion.prompt_tokens == server.prompt_tokens
            assert completion.completion_tokens == server.completion_tokens

    def test_wire_format_and_auth_header(self, monkeypatch):
        monkeypatch.setenv("CHAT_API_KEY", "secret")
        with MockChatServer(api_key="secret") as server:
            agent, messages = self._messages()
            backend = self._backend(server.endpoint, model="gpt-4.1-nano",
                                    temperature=0.0, max_tokens=2048)
            backend.complete(agent, messages, seed=0)
            request = server.requests[0]
            assert request["model"] == "gpt-4.1-nano"
            assert request["temperature"] == 0.0
            assert request["max_tokens"] == 2048


class TestContextRecovery:
    def test_mark_and_context_round_trip(self):
        book = load_crew_book()
        agent = book.by_stage(1).agents[0]
        context = dict(_postmortem_context(), agent_id=agent.agent_id, goal=agent.goal,
                       prior_outputs={})
        messages = render_messages(agent.system_template, agent.user_template, context)
        assert extract_agent_mark(messages) == agent.agent_id
        recovered = extract_context_block(messages)
        assert recovered["as_of"] == context["as_of"]
        assert [c["ticker"] for c in recovered["corpus"]] == ["AAA", "BBB", "CCC"]

    def test_repair_suffix_does_not_hide_context(self):
        book = load_crew_book()
        agent = book.by_stage(1).agents[0]
        context = dict(_postmortem_context(), agent_id=agent.agent_id, goal=agent.goal,
                       prior_outputs={})
        messages = render_messages(agent.system_template, agent.user_template, context)
        messages = messages + [
            {"role": "assistant", "content": "prose答案"},
            {"role": "user", "content": "Reply with the fenced json block only."},
        ]
        recovered = extract_context_block(messages)
        assert recovered["stage"] == 1
