"""Agent specs, prompt rendering, backends, and crew execution."""
from .backends import (
    CHAT_API_KEY_ENV,
    DEFAULT_CHAT_MODEL,
    AgentBackend,
    ChatBackend,
    Completion,
    ScriptedBackend,
    TokenLedger,
    extract_agent_mark,
    extract_context_block,
    scripted_response_text,
)
from .crew import CrewReport, crew_inputs_digest, run_crew
from .prompts import (
    DEFAULT_MAX_CONTEXT_ITEMS,
    DEFAULT_TOKEN_BUDGET,
    estimate_tokens,
    render_messages,
    render_prompt,
)
from .rules import run_agent_rules, sentiment_score
from .schemas import REPORT_SCHEMAS, SCHEMAS, TIMING_CITABLE_METRICS, RiskFlag
from .spec import AgentSpec, CrewBook, CrewSpec, load_crew_book, parse_crew_documents
from .structured import extract_structured_block, parse_structured_output, validate_payload

__all__ = [
    "CHAT_API_KEY_ENV",
    "DEFAULT_CHAT_MODEL",
    "DEFAULT_MAX_CONTEXT_ITEMS",
    "DEFAULT_TOKEN_BUDGET",
    "REPORT_SCHEMAS",
    "SCHEMAS",
    "TIMING_CITABLE_METRICS",
    "AgentBackend",
    "AgentSpec",
    "ChatBackend",
    "Completion",
    "CrewBook",
    "CrewReport",
    "CrewSpec",
    "RiskFlag",
    "ScriptedBackend",
    "TokenLedger",
    "crew_inputs_digest",
    "estimate_tokens",
    "extract_agent_mark",
    "extract_context_block",
    "extract_structured_block",
    "load_crew_book",
    "parse_crew_documents",
    "parse_structured_output",
    "render_messages",
    "render_prompt",
    "run_agent_rules",
    "run_crew",
    "scripted_response_text",
    "sentiment_score",
    "validate_payload",
]
