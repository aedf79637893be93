"""Extraction and validation of structured agent output.

Agents answer in prose plus fenced JSON.  The first fenced block that
parses as a JSON object is the structured payload; it must validate
against the agent's declared schema.
"""
from __future__ import annotations

import json
import re

from pydantic import BaseModel, ValidationError

from ..errors import NoStructuredBlock, SchemaViolation
from .schemas import SCHEMAS

_FENCE = re.compile(r"```(?:json)?\s*\n(.*?)```", re.DOTALL)


def extract_structured_block(text: str) -> dict:
    """First fenced JSON object in `text`; bare-JSON replies also count."""
    for match in _FENCE.finditer(text):
        try:
            parsed = json.loads(match.group(1))
        except json.JSONDecodeError:
            continue
        if isinstance(parsed, dict):
            return parsed
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            parsed = json.loads(stripped)
        except json.JSONDecodeError:
            parsed = None
        if isinstance(parsed, dict):
            return parsed
    raise NoStructuredBlock("response contains no parseable JSON object block")


def _violation_message(schema_name: str, exc: ValidationError) -> str:
    first = exc.errors()[0]
    loc = ".".join(str(p) for p in first["loc"]) or "<root>"
    return f"{schema_name}: {loc}: {first['msg']}"


def validate_payload(raw: dict, schema_name: str) -> BaseModel:
    try:
        model = SCHEMAS[schema_name]
    except KeyError:
        raise SchemaViolation(f"unknown schema {schema_name!r}") from None
    try:
        return model.model_validate(raw)
    except ValidationError as exc:
        raise SchemaViolation(_violation_message(schema_name, exc)) from exc


def parse_structured_output(text: str, schema_name: str) -> BaseModel:
    """Pull the first structured block out of `text` and validate it.

    Raises NoStructuredBlock when nothing parses as a JSON object, and
    SchemaViolation naming the first violated constraint otherwise.
    """
    return validate_payload(extract_structured_block(text), schema_name)
