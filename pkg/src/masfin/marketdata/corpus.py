"""Delisted-firm corpus: the input universe of the postmortem stage.

Analyzing firms that failed or were forced off exchanges is what keeps the
pipeline from only ever studying survivors. A bundled corpus of sixteen
delisted or at-risk firms ships with the package; any corpus file with at
least one well-formed entry is accepted.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from ..errors import CorpusParseError, EmptyCorpus
from .types import DelistedCorpusEntry


def parse_corpus(raw: object, origin: str = "<corpus>") -> list[DelistedCorpusEntry]:
    if not isinstance(raw, list):
        raise CorpusParseError(f"{origin}: corpus must be a JSON array")
    entries = [DelistedCorpusEntry.from_dict(d) for d in raw]
    if not entries:
        raise EmptyCorpus(f"{origin}: corpus has no entries")
    seen: set[str] = set()
    for e in entries:
        if e.ticker in seen:
            raise CorpusParseError(f"{origin}: duplicate ticker {e.ticker}")
        seen.add(e.ticker)
    return entries


def load_delisted_corpus(path: Path) -> list[DelistedCorpusEntry]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CorpusParseError(f"{path}: {exc}") from exc
    if not text.strip():
        raise EmptyCorpus(f"{path}: empty file")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorpusParseError(f"{path}: {exc}") from exc
    return parse_corpus(raw, str(path))


def load_bundled_corpus() -> list[DelistedCorpusEntry]:
    """The corpus fixture shipped inside the package."""
    text = resources.files("masfin.resources").joinpath("delisted_corpus.json").read_text("utf-8")
    return parse_corpus(json.loads(text), "bundled corpus")


def bundled_corpus_path() -> Path:
    return Path(str(resources.files("masfin.resources").joinpath("delisted_corpus.json")))
