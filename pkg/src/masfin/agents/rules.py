"""Scripted agent behavior: deterministic heuristics over stage context.

Each agent id maps to a pure function of the context JSON that appears in
its prompt (plus a seed for audit).  The same functions back the offline
backend and the test chat server, so both execution paths produce the
same decisions for the same inputs.

Fault hooks deliberately corrupt output so the pipeline's verification
gates can be exercised end to end.
"""
from __future__ import annotations

import re
from typing import Callable, Mapping

POSITIVE_WORDS = frozenset({
    "beats", "record", "wins", "upgrade", "expands", "strong", "raises",
    "profit", "surges", "growth", "approval", "rally",
})
NEGATIVE_WORDS = frozenset({
    "misses", "warning", "layoffs", "downgrade", "recall", "weak", "cuts",
    "shortfall", "bankruptcy", "delisting", "fraud", "probe", "lawsuit",
    "plunges", "halt", "default", "investigation", "dilution",
})

# Screening conviction blend: recent anomaly plus medium- and short-term return.
SCORE_WEIGHTS = {"zscore_5d": 1.0, "return_21d": 10.0, "return_5d": 5.0}

SCREEN_TAKE = 60
ANALYZE_TAKE = 40
BUY_TAKE = 25
BUY_FLOOR = 20
POSITION_TAKE = 20

RSI_OVERBOUGHT = 75.0
VOL_HIGH = 0.60
DRAWDOWN_DEEP = 0.25
MOMENTUM_NEGATIVE = -0.05
VOLUME_FADING = -0.02

_WORD = re.compile(r"[a-z]+")


def sentiment_score(texts: list[str]) -> float:
    """Keyword polarity in [-1, 1]; zero when nothing matches."""
    hits = 0
    total = 0
    for text in texts:
        for word in _WORD.findall(text.lower()):
            if word in POSITIVE_WORDS:
                hits += 1
                total += 1
            elif word in NEGATIVE_WORDS:
                hits -= 1
                total += 1
    if total == 0:
        return 0.0
    return max(-1.0, min(1.0, hits / total))


def _metric(row: Mapping, name: str) -> float | None:
    value = (row.get("metrics") or {}).get(name)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return None
    return float(value)


def composite_score(row: Mapping) -> float:
    score = 0.0
    for name, weight in SCORE_WEIGHTS.items():
        value = _metric(row, name)
        if value is not None:
            score += weight * value
    return score


def _cited(row: Mapping, names: list[str]) -> dict[str, float]:
    out = {}
    for name in names:
        value = _metric(row, name)
        if value is not None:
            out[name] = value
    return out


def _rows(context: Mapping) -> list[Mapping]:
    return list(context.get("tickers") or [])


def _prior(context: Mapping, agent_id: str) -> Mapping:
    return (context.get("prior_outputs") or {}).get(agent_id) or {}


def _ranked(rows: list[Mapping]) -> list[Mapping]:
    return sorted(rows, key=lambda r: (-composite_score(r), r.get("symbol", "")))


# ------------------------------------------------------------------ stage 1


def failure_pattern_analyst(context: Mapping, seed: int) -> dict:
    groups: dict[str, list[Mapping]] = {}
    for entry in context.get("corpus") or []:
        groups.setdefault(entry["reason"], []).append(entry)
    patterns = []
    for reason in sorted(groups):
        entries = groups[reason]
        signals = sorted({
            w for e in entries for h in e.get("headlines", [])
            for w in _WORD.findall(h.lower()) if w in NEGATIVE_WORDS
        })[:6]
        patterns.append({
            "name": reason,
            "tickers": sorted(e["ticker"] for e in entries),
            "signals": signals,
        })
    return {"patterns": patterns}


def sentiment_forensics(context: Mapping, seed: int) -> dict:
    flags = []
    for entry in sorted(context.get("corpus") or [], key=lambda e: e["ticker"]):
        score = sentiment_score(entry.get("headlines", []))
        tone = "negative" if score < -0.05 else ("positive" if score > 0.05 else "neutral")
        phrases = sorted({
            w for h in entry.get("headlines", [])
            for w in _WORD.findall(h.lower()) if w in NEGATIVE_WORDS
        })[:4]
        flags.append({"ticker": entry["ticker"], "tone": tone, "phrases": phrases})
    return {"flags": flags}


def postmortem_summary(context: Mapping, seed: int) -> dict:
    corpus = context.get("corpus") or []
    by_theme: dict[tuple[str, str], list[Mapping]] = {}
    for entry in corpus:
        by_theme.setdefault((entry["sector"], entry["reason"]), []).append(entry)
    tones = {
        f["ticker"]: f["tone"]
        for f in _prior(context, "sentiment_forensics").get("flags", [])
    }
    candidates = []
    for sector, reason in sorted(by_theme):
        entries = by_theme[(sector, reason)]
        signs = sorted({
            w for e in entries for h in e.get("headlines", [])
            for w in _WORD.findall(h.lower()) if w in NEGATIVE_WORDS
        })[:5]
        candidates.append({
            "name": f"{sector}: {reason}",
            "evidence_tickers": sorted(e["ticker"] for e in entries),
            "warning_signs": signs or ["persistent price decline"],
        })
    negative = sorted(t for t, tone in tones.items() if tone == "negative")
    return {
        "sections": {
            "overview": (
                f"Reviewed {len(corpus)} delisted firms and grouped them into "
                f"{len(candidates)} recurring failure themes."
            ),
            "tone": f"Headline tone ran negative for {len(negative)} of {len(corpus)} firms.",
        },
        "candidates": candidates,
        "rationale": (
            "Shared warning signs across sectors justify screening the live "
            "universe against these themes before any capital is considered."
        ),
        "references": sorted(e["ticker"] for e in corpus),
    }


# ------------------------------------------------------------------ stage 2


def sentiment_screener(context: Mapping, seed: int) -> dict:
    scored = []
    for row in sorted(_rows(context), key=lambda r: r.get("symbol", "")):
        scored.append({
            "symbol": row["symbol"],
            "sentiment": round(sentiment_score(row.get("headlines", [])), 6),
        })
    return {"scored": scored}


def trend_screener(context: Mapping, seed: int) -> dict:
    scored = []
    for row in sorted(_rows(context), key=lambda r: r.get("symbol", "")):
        scored.append({
            "symbol": row["symbol"],
            "trend_score": round(composite_score(row), 9),
        })
    return {"scored": scored}


def screening_summary(context: Mapping, seed: int) -> dict:
    rows = _ranked(_rows(context))
    take = rows[:min(SCREEN_TAKE, len(rows))]
    sentiments = {
        s["symbol"]: s["sentiment"]
        for s in _prior(context, "sentiment_screener").get("scored", [])
    }
    candidates = []
    for row in take:
        candidates.append({
            "symbol": row["symbol"],
            "composite_score": round(composite_score(row), 9),
            "cited_metrics": _cited(row, ["zscore_5d", "return_21d", "return_5d"]),
            "cited_headlines": list(row.get("headlines", []))[:2],
        })
    upbeat = sum(1 for c in candidates if sentiments.get(c["symbol"], 0.0) > 0)
    return {
        "sections": {
            "overview": (
                f"Screened {len(rows)} tickers on the conviction blend and kept "
                f"the top {len(candidates)}."
            ),
            "sentiment": f"{upbeat} of the kept names carry positive headline tone.",
        },
        "candidates": candidates,
        "rationale": (
            "Ranked by blended short-horizon anomaly and trailing returns; "
            "ties broken alphabetically for reproducibility."
        ),
        "references": [],
    }


# ------------------------------------------------------------------ stage 3


def quant_analyst(context: Mapping, seed: int) -> dict:
    benchmark = context.get("benchmark") or {}
    entries = []
    for row in _ranked(_rows(context))[:ANALYZE_TAKE]:
        cited = _cited(row, ["sortino", "zscore_5d", "momentum_21d"])
        delta = {}
        for name, value in cited.items():
            mean = benchmark.get(name)
            if isinstance(mean, (int, float)) and not isinstance(mean, bool):
                delta[name] = value - float(mean)
        entries.append({"symbol": row["symbol"], "cited_metrics": cited, "cohort_delta": delta})
    return {"entries": entries}


def context_analyst(context: Mapping, seed: int) -> dict:
    rows = {r["symbol"]: r for r in _rows(context)}
    notes = []
    for entry in _prior(context, "quant_analyst").get("entries", []):
        row = rows.get(entry["symbol"], {})
        texts = list(row.get("headlines", []))
        score = sentiment_score(texts)
        tone = "negative" if score < -0.05 else ("positive" if score > 0.05 else "neutral")
        notes.append({
            "symbol": entry["symbol"],
            "headline_tone": tone,
            "cited_headlines": texts[:2],
        })
    return {"notes": notes}


def analysis_summary(context: Mapping, seed: int) -> dict:
    notes = {
        n["symbol"]: n for n in _prior(context, "context_analyst").get("notes", [])
    }
    held = {r["symbol"] for r in _rows(context) if r.get("held")}
    candidates = []
    for entry in _prior(context, "quant_analyst").get("entries", []):
        note = notes.get(entry["symbol"], {})
        tone = note.get("headline_tone", "neutral")
        held_part = "existing holding" if entry["symbol"] in held else "new candidate"
        candidates.append({
            "symbol": entry["symbol"],
            "thesis": (
                f"{entry['symbol']} ({held_part}) shows metric strength against "
                f"the cohort with {tone} press tone."
            ),
            "cited_metrics": entry["cited_metrics"],
            "cohort_delta": entry["cohort_delta"],
            "cited_headlines": note.get("cited_headlines", []),
        })
    return {
        "sections": {
            "overview": (
                f"Deep-dived {len(candidates)} names surviving the screen, "
                f"including {len(held & {c['symbol'] for c in candidates})} current holdings."
            ),
        },
        "candidates": candidates,
        "rationale": "Kept the names whose metrics clear the cohort average most decisively.",
        "references": [],
    }


# ------------------------------------------------------------------ stage 4


def _sortino_rank_key(row: Mapping) -> tuple:
    value = _metric(row, "sortino")
    return (-(value if value is not None else float("-inf")), row.get("symbol", ""))


def _risk_flags(row: Mapping) -> list[str]:
    flags = []
    rsi = _metric(row, "rsi_14")
    if rsi is not None and rsi > RSI_OVERBOUGHT:
        flags.append("overbought")
    vol = _metric(row, "volatility_ann")
    if vol is not None and vol > VOL_HIGH:
        flags.append("high_volatility")
    dd = _metric(row, "max_drawdown")
    if dd is not None and dd > DRAWDOWN_DEEP:
        flags.append("deep_drawdown")
    mom = _metric(row, "momentum_21d")
    if mom is not None and mom < MOMENTUM_NEGATIVE:
        flags.append("negative_momentum")
    vt = _metric(row, "volume_trend")
    if vt is not None and vt < VOLUME_FADING:
        flags.append("fading_volume")
    if sentiment_score(row.get("headlines", [])) < -0.2:
        flags.append("headline_risk")
    return flags


def signal_timer(context: Mapping, seed: int) -> dict:
    rows = sorted(_rows(context), key=_sortino_rank_key)
    n = max(len(rows), 1)
    signals = []
    for rank, row in enumerate(rows):
        strength = round(1.0 - rank / n, 6)
        mom = _metric(row, "momentum_21d")
        action = "sell" if (mom is not None and mom < MOMENTUM_NEGATIVE) else (
            "buy" if rank < n / 2 else "hold"
        )
        signals.append({
            "symbol": row["symbol"],
            "action": action,
            "confidence": strength,
            "cited_metrics": _cited(row, ["sortino", "momentum_21d"]),
        })
    return {"signals": sorted(signals, key=lambda s: s["symbol"])}


def risk_flagger(context: Mapping, seed: int) -> dict:
    flags = []
    for row in sorted(_rows(context), key=lambda r: r.get("symbol", "")):
        flags.append({"symbol": row["symbol"], "risk_flags": _risk_flags(row)})
    return {"flags": flags}


def timing_summary(context: Mapping, seed: int) -> dict:
    rows = _rows(context)
    flag_map = {
        f["symbol"]: list(f.get("risk_flags", []))
        for f in _prior(context, "risk_flagger").get("flags", [])
    }
    for row in rows:  # agents may run standalone in tests, without the flagger
        flag_map.setdefault(row["symbol"], _risk_flags(row))
    ordered = sorted(rows, key=_sortino_rank_key)
    unflagged = [r for r in ordered if not flag_map[r["symbol"]]]
    buys = unflagged[:min(BUY_TAKE, len(unflagged))]
    if len(buys) < BUY_FLOOR:
        # Too few clean names: tolerate single mild flags to reach the floor.
        hard = {"deep_drawdown", "negative_momentum"}
        fillers = [
            r for r in ordered
            if r not in buys
            and len(flag_map[r["symbol"]]) == 1
            and not (set(flag_map[r["symbol"]]) & hard)
        ]
        buys = buys + fillers[:BUY_FLOOR - len(buys)]
    buy_symbols = {r["symbol"] for r in buys}
    buy_rank = {r["symbol"]: i for i, r in enumerate(
        sorted(buys, key=_sortino_rank_key))}

    candidates = []
    n_buys = max(len(buys), 1)
    for row in sorted(rows, key=lambda r: r.get("symbol", "")):
        symbol = row["symbol"]
        flags = flag_map[symbol]
        if symbol in buy_symbols:
            action = "buy"
            pct = (n_buys - buy_rank[symbol]) / n_buys
            confidence = round(0.6 + 0.4 * pct, 6)
        elif set(flags) & {"deep_drawdown", "negative_momentum"}:
            action = "sell"
            confidence = 0.3
        else:
            action = "hold"
            confidence = 0.5
        candidates.append({
            "symbol": symbol,
            "action": action,
            "confidence": confidence,
            "risk_flags": sorted(flags),
            "cited_metrics": _cited(
                row, ["sortino", "zscore_5d", "momentum_21d", "volume_trend"]
            ),
        })
    n_sell = sum(1 for c in candidates if c["action"] == "sell")
    return {
        "sections": {
            "overview": (
                f"Issued {len(buy_symbols)} buys, {n_sell} sells and "
                f"{len(candidates) - len(buy_symbols) - n_sell} holds across "
                f"{len(candidates)} analyzed names."
            ),
        },
        "candidates": candidates,
        "rationale": (
            "Buys go to the cleanest downside-adjusted performers; flagged "
            "names are held or exited depending on flag severity."
        ),
        "references": [],
    }


# ------------------------------------------------------------------ stage 5


def _inverse_vol_weight(row: Mapping) -> float:
    vol = _metric(row, "volatility_ann")
    if vol is None:
        vol = 0.40
    return 1.0 / max(vol, 0.05)


def allocator(context: Mapping, seed: int) -> dict:
    rows = sorted(
        _rows(context),
        key=lambda r: (-float(r.get("confidence", 0.0)), r.get("symbol", "")),
    )[:POSITION_TAKE]
    raw = {r["symbol"]: _inverse_vol_weight(r) for r in rows}
    total = sum(raw.values())
    positions = []
    for row in sorted(rows, key=lambda r: r.get("symbol", "")):
        positions.append({
            "symbol": row["symbol"],
            "weight": round(raw[row["symbol"]] / total, 9),
            "sector": row.get("sector", "unknown"),
        })
    return {"positions": positions}


def diversification_review(context: Mapping, seed: int) -> dict:
    positions = _prior(context, "allocator").get("positions", [])
    shares: dict[str, float] = {}
    for p in positions:
        shares[p["sector"]] = shares.get(p["sector"], 0.0) + p["weight"]
    cap = float((context.get("caps") or {}).get("max_sector_share", 0.30))
    heavy = sorted(s for s, share in shares.items() if share > cap)
    return {
        "sector_view": {s: round(shares[s], 6) for s in sorted(shares)},
        "adjustments": [f"trim {s} below {cap:.0%}" for s in heavy],
    }


def portfolio_arbiter(context: Mapping, seed: int) -> dict:
    rows = {r["symbol"]: r for r in _rows(context)}
    positions = _prior(context, "allocator").get("positions", [])
    adjustments = _prior(context, "diversification_review").get("adjustments", [])
    candidates = []
    for p in positions:
        confidence = float(rows.get(p["symbol"], {}).get("confidence", 0.0))
        candidates.append({
            "symbol": p["symbol"],
            "weight": p["weight"],
            "sector": p["sector"],
            "rationale": (
                f"timing confidence {confidence:.2f}; inverse-volatility sizing"
            ),
        })
    sections = {
        "overview": f"Proposed {len(candidates)} positions sized inversely to volatility.",
    }
    if adjustments:
        sections["diversification"] = "; ".join(adjustments)
    return {
        "sections": sections,
        "candidates": candidates,
        "rationale": (
            "Highest-conviction buys sized by inverse volatility; caps are "
            "applied downstream before publication."
        ),
        "references": [],
    }


RULES: dict[str, Callable[[Mapping, int], dict]] = {
    "failure_pattern_analyst": failure_pattern_analyst,
    "sentiment_forensics": sentiment_forensics,
    "postmortem_summary": postmortem_summary,
    "sentiment_screener": sentiment_screener,
    "trend_screener": trend_screener,
    "screening_summary": screening_summary,
    "quant_analyst": quant_analyst,
    "context_analyst": context_analyst,
    "analysis_summary": analysis_summary,
    "signal_timer": signal_timer,
    "risk_flagger": risk_flagger,
    "timing_summary": timing_summary,
    "allocator": allocator,
    "diversification_review": diversification_review,
    "portfolio_arbiter": portfolio_arbiter,
}


# ---------------------------------------------------------------- fault hooks


def apply_fault(agent_id: str, payload: dict, fault: str | None) -> dict:
    """Corrupt a payload in a targeted way for gate verification tests."""
    if not fault:
        return payload
    out = dict(payload)
    if fault == "wrong_metric" and out.get("candidates"):
        first = dict(out["candidates"][0])
        cited = dict(first.get("cited_metrics", {}))
        if cited:
            key = sorted(cited)[0]
            cited[key] = cited[key] + 0.5
            first["cited_metrics"] = cited
            out["candidates"] = [first] + out["candidates"][1:]
    elif fault == "unknown_ticker" and out.get("candidates"):
        first = dict(out["candidates"][0])
        first["symbol"] = "ZZZZTEST"
        out["candidates"] = [first] + out["candidates"][1:]
    elif fault == "bad_action" and out.get("candidates"):
        first = dict(out["candidates"][0])
        if "action" in first:
            first["action"] = "accumulate"
        out["candidates"] = [first] + out["candidates"][1:]
    elif fault == "under_bound" and out.get("candidates"):
        out["candidates"] = out["candidates"][:max(1, len(out["candidates"]) // 3)]
    elif fault == "over_bound" and out.get("candidates"):
        pad = []
        for i in range(len(out["candidates"])):
            clone = dict(out["candidates"][i])
            clone["symbol"] = f"PAD{i:03d}"
            pad.append(clone)
        out["candidates"] = out["candidates"] + pad
    return out


def run_agent_rules(
    agent_id: str, context: Mapping, seed: int, fault: str | None = None
) -> dict:
    try:
        fn = RULES[agent_id]
    except KeyError:
        raise KeyError(f"no scripted rules for agent {agent_id!r}") from None
    return apply_fault(agent_id, fn(context, seed), fault)
