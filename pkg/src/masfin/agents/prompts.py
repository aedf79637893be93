"""Deterministic prompt rendering with bounded context.

Templates use `{name}` placeholders resolved from a context mapping.  The
special placeholder `{context_json}` expands to the whole context as one
fenced-block-ready JSON object.  When the estimated token count exceeds
the budget, list context is trimmed in a fixed order: headlines keep the
newest entries, tickers keep the largest |zscore_5d|.
"""
from __future__ import annotations

import math
import string
from typing import Mapping

from ..errors import ContextBudgetExceeded, MissingContextKey
from ..util import canonical_json

CHARS_PER_TOKEN = 4
DEFAULT_MAX_CONTEXT_ITEMS = 500
DEFAULT_TOKEN_BUDGET = 60_000

_formatter = string.Formatter()


def estimate_tokens(text: str) -> int:
    """Budget estimate: four characters per token, rounded up."""
    return math.ceil(len(text) / CHARS_PER_TOKEN)


def template_fields(template: str) -> set[str]:
    fields = set()
    for _, name, _, _ in _formatter.parse(template):
        if name:
            fields.add(name.split(".")[0].split("[")[0])
    return fields


def _headline_order(item: Mapping) -> tuple:
    # Newest first; title breaks ties so the order never depends on input order.
    return (item.get("published_at", ""), item.get("headline", ""))


def _zscore_magnitude(item: Mapping) -> float:
    metrics = item.get("metrics", item)
    z = metrics.get("zscore_5d") if isinstance(metrics, Mapping) else None
    if isinstance(z, bool) or not isinstance(z, (int, float)):
        return -1.0
    return abs(float(z))


def _truncated_context(context: Mapping, n_headlines: int, n_tickers: int) -> dict:
    out = dict(context)
    if isinstance(context.get("headlines"), list):
        ordered = sorted(context["headlines"], key=_headline_order, reverse=True)
        out["headlines"] = ordered[:n_headlines]
    if isinstance(context.get("tickers"), list):
        ordered = sorted(
            context["tickers"],
            key=lambda t: (-_zscore_magnitude(t), t.get("symbol", "")),
        )
        out["tickers"] = sorted(
            ordered[:n_tickers], key=lambda t: t.get("symbol", "")
        )
    return out


def _substitute(template: str, context: Mapping, rendered_context: dict) -> str:
    values: dict[str, str] = {}
    for name in template_fields(template):
        if name == "context_json":
            values[name] = canonical_json(rendered_context)
            continue
        if name not in context:
            raise MissingContextKey(f"template references missing context key {name!r}")
        value = context[name]
        values[name] = value if isinstance(value, str) else canonical_json(value)
    return template.format_map(values)


def render_prompt(
    template: str,
    context: Mapping,
    *,
    max_context_items: int = DEFAULT_MAX_CONTEXT_ITEMS,
    token_budget: int = DEFAULT_TOKEN_BUDGET,
) -> str:
    """Render one template, shrinking list context until the budget holds."""
    n_headlines = min(len(context.get("headlines") or []), max_context_items)
    n_tickers = min(len(context.get("tickers") or []), max_context_items)
    while True:
        rendered = _substitute(
            template, context, _truncated_context(context, n_headlines, n_tickers)
        )
        if estimate_tokens(rendered) <= token_budget:
            return rendered
        if n_headlines > 0:
            n_headlines = min(n_headlines - 1, int(n_headlines * 0.8))
        elif n_tickers > 0:
            n_tickers = min(n_tickers - 1, int(n_tickers * 0.8))
        else:
            raise ContextBudgetExceeded(
                f"prompt needs ~{estimate_tokens(rendered)} tokens "
                f"with all list context removed; budget is {token_budget}"
            )


def render_messages(
    system_template: str,
    user_template: str,
    context: Mapping,
    *,
    max_context_items: int = DEFAULT_MAX_CONTEXT_ITEMS,
    token_budget: int = DEFAULT_TOKEN_BUDGET,
) -> list[dict[str, str]]:
    """Render a system+user pair under one shared token budget."""
    system = render_prompt(
        system_template,
        context,
        max_context_items=max_context_items,
        token_budget=token_budget,
    )
    remaining = token_budget - estimate_tokens(system)
    if remaining <= 0:
        raise ContextBudgetExceeded(
            f"system prompt alone consumes the {token_budget}-token budget"
        )
    user = render_prompt(
        user_template,
        context,
        max_context_items=max_context_items,
        token_budget=remaining,
    )
    return [
        {"role": "system", "content": system},
        {"role": "user", "content": user},
    ]
