"""Strictly sequential crew execution with transcripts and repair.

Agents run in declaration order; each sees the inbound context plus the
parsed outputs of every agent before it.  A response that fails schema
validation earns one repair pass (a corrective re-prompt on backends
that support it, a plain re-run otherwise); a second failure aborts the
crew with the underlying cause preserved.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from ..errors import CrewAborted, MasfinError, NoStructuredBlock, SchemaViolation
from ..util import atomic_write_text, canonical_json, digest_of
from .backends import AgentBackend, TokenLedger
from .prompts import DEFAULT_MAX_CONTEXT_ITEMS, DEFAULT_TOKEN_BUDGET, render_messages
from .spec import AgentSpec, CrewSpec
from .structured import parse_structured_output

REPAIR_INSTRUCTION = (
    "Your previous reply was rejected: {error}. Respond again with exactly "
    "one fenced ```json block that satisfies the {schema} schema, and "
    "nothing else."
)


@dataclass(frozen=True)
class CrewReport:
    """Validated end product of one crew run."""

    crew_name: str
    produced_at: str
    inputs_digest: str
    sections: dict
    candidates: list
    rationale: str
    references: list

    def to_dict(self) -> dict:
        return {
            "crew_name": self.crew_name,
            "produced_at": self.produced_at,
            "inputs_digest": self.inputs_digest,
            "sections": dict(self.sections),
            "candidates": list(self.candidates),
            "rationale": self.rationale,
            "references": list(self.references),
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "CrewReport":
        return cls(
            crew_name=str(raw["crew_name"]),
            produced_at=str(raw["produced_at"]),
            inputs_digest=str(raw["inputs_digest"]),
            sections=dict(raw["sections"]),
            candidates=list(raw["candidates"]),
            rationale=str(raw["rationale"]),
            references=list(raw["references"]),
        )


def crew_inputs_digest(crew: CrewSpec, context: Mapping, seed: int) -> str:
    return digest_of({
        "crew": crew.crew_name,
        "version": crew.version,
        "context": context,
        "seed": seed,
    })


def _invoke_with_repair(
    agent: AgentSpec,
    backend: AgentBackend,
    messages: list[dict[str, str]],
    *,
    seed: int,
    repair_attempts: int,
    ledger: TokenLedger,
    transcript: list[dict],
):
    attempt = 0
    while True:
        completion = backend.complete(agent, messages, seed=seed + attempt)
        ledger.add(completion.prompt_tokens, completion.completion_tokens)
        try:
            payload = parse_structured_output(completion.text, agent.output_schema)
        except (SchemaViolation, NoStructuredBlock) as exc:
            transcript.append({
                "agent_id": agent.agent_id,
                "attempt": attempt,
                "messages": messages,
                "response": completion.text,
                "prompt_tokens": completion.prompt_tokens,
                "completion_tokens": completion.completion_tokens,
                "parsed": False,
                "error": str(exc),
            })
            if attempt >= repair_attempts:
                raise
            attempt += 1
            if backend.supports_reprompt():
                messages = messages + [
                    {"role": "assistant", "content": completion.text},
                    {
                        "role": "user",
                        "content": REPAIR_INSTRUCTION.format(
                            error=exc, schema=agent.output_schema
                        ),
                    },
                ]
            continue
        transcript.append({
            "agent_id": agent.agent_id,
            "attempt": attempt,
            "messages": messages,
            "response": completion.text,
            "prompt_tokens": completion.prompt_tokens,
            "completion_tokens": completion.completion_tokens,
            "parsed": True,
        })
        return payload


def run_crew(
    crew: CrewSpec,
    context: Mapping,
    backend: AgentBackend,
    *,
    seed: int,
    produced_at: str,
    ledger: TokenLedger,
    transcript_path: str | Path | None = None,
    repair_attempts: int = 1,
    max_context_items: int = DEFAULT_MAX_CONTEXT_ITEMS,
    token_budget: int = DEFAULT_TOKEN_BUDGET,
) -> CrewReport:
    """Run every agent in order and assemble the crew's report.

    Any agent failure, after its repair pass, raises CrewAborted with the
    original error chained as the cause.
    """
    inputs_digest = crew_inputs_digest(crew, context, seed)
    transcript: list[dict] = []
    outputs: dict[str, dict] = {}
    final_payload: dict | None = None
    at_agent = "?"
    try:
        for agent in crew.agents:
            at_agent = agent.agent_id
            agent_context = dict(context)
            agent_context["agent_id"] = agent.agent_id
            agent_context["goal"] = agent.goal
            agent_context["prior_outputs"] = dict(outputs)
            messages = render_messages(
                agent.system_template,
                agent.user_template,
                agent_context,
                max_context_items=max_context_items,
                token_budget=token_budget,
            )
            payload = _invoke_with_repair(
                agent,
                backend,
                messages,
                seed=seed,
                repair_attempts=repair_attempts,
                ledger=ledger,
                transcript=transcript,
            )
            payload_dict = payload.model_dump(mode="json")
            outputs[agent.agent_id] = payload_dict
            if agent.agent_id == crew.final_agent.agent_id:
                final_payload = payload_dict
    except MasfinError as exc:
        if transcript_path is not None:
            _write_transcript(transcript_path, transcript)
        raise CrewAborted(
            f"crew {crew.crew_name} aborted at agent {at_agent}: {exc}"
        ) from exc
    if transcript_path is not None:
        _write_transcript(transcript_path, transcript)
    if final_payload is None:
        raise CrewAborted(f"crew {crew.crew_name} produced no final report")
    return CrewReport(
        crew_name=crew.crew_name,
        produced_at=produced_at,
        inputs_digest=inputs_digest,
        sections=final_payload.get("sections", {}),
        candidates=final_payload.get("candidates", []),
        rationale=final_payload.get("rationale", ""),
        references=final_payload.get("references", []),
    )


def _write_transcript(path: str | Path, entries: list[dict]) -> None:
    lines = "".join(canonical_json(entry) + "\n" for entry in entries)
    atomic_write_text(Path(path), lines)
