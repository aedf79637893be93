"""Run configuration: YAML in, validated settings out.

Unknown keys are rejected so typos fail loudly.  Secrets never live in
the file; string values may reference environment variables as `${NAME}`
and the named variable must exist at load time.
"""
from __future__ import annotations

import csv
import os
import re
from datetime import date
from pathlib import Path
from typing import Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .agents.backends import ChatBackend, ScriptedBackend
from .agents.spec import CrewBook, load_crew_book
from .errors import ConfigError, MissingEnvironment, UniverseParseError
from .marketdata.providers import (
    CompositeProvider,
    DataProvider,
    FixtureProvider,
    HttpNewsProvider,
    HttpQuoteProvider,
)
from .pipeline.types import AllocationCaps, StageBounds

CHAT_URL_ENV = "CHAT_API_URL"

_ENV_REF = re.compile(r"\$\{([A-Z][A-Z0-9_]*)\}")


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ProviderConfig(_Section):
    kind: Literal["fixture", "live"] = "fixture"
    fixture_dir: str | None = None
    quote_url: str | None = None
    news_url: str | None = None
    news_api_key_env: str = "NEWS_API_KEY"
    min_request_interval: float = 0.0
    retry_attempts: int = 3
    backoff_base: float = 0.5


class ChatConfig(_Section):
    endpoint: str | None = None
    model: str = "gpt-4.1-nano"
    temperature: float = 0.0
    max_tokens: int = 4096
    api_key_env: str = "CHAT_API_KEY"
    retries: int = 3
    backoff_base: float = 0.5
    timeout: float = 30.0


class SnapshotConfig(_Section):
    window_days: int = Field(default=80, ge=1)
    headline_lookback_days: int = Field(default=7, ge=0)
    benchmarks: list[str] = Field(default_factory=lambda: ["SPY", "QQQ", "DIA"])


class CapsConfig(_Section):
    max_weight: float = Field(default=0.10, gt=0.0, le=1.0)
    max_sector_share: float = Field(default=0.30, gt=0.0, le=1.0)

    def to_caps(self) -> AllocationCaps:
        return AllocationCaps(
            max_weight=self.max_weight, max_sector_share=self.max_sector_share
        )


class BoundsConfig(_Section):
    screen_min: int = 50
    screen_max: int = 100
    analysis_min: int = 35
    analysis_max: int = 50
    buy_min: int = 20
    buy_max: int = 30
    positions_min: int = 15
    positions_max: int = 30

    def to_bounds(self) -> StageBounds:
        return StageBounds(
            screen_min=self.screen_min,
            screen_max=self.screen_max,
            analysis_min=self.analysis_min,
            analysis_max=self.analysis_max,
            buy_min=self.buy_min,
            buy_max=self.buy_max,
            positions_min=self.positions_min,
            positions_max=self.positions_max,
        )


class PipelineConfig(_Section):
    risk_free_annual: float = 0.0
    repair_attempts: int = Field(default=1, ge=0, le=3)
    prior_run: str | None = None
    token_budget: int = Field(default=120_000, ge=100)
    max_context_items: int = Field(default=500, ge=1)


class GatewayConfig(_Section):
    bind: str = "127.0.0.1:8420"
    token_env: str = "GATEWAY_TOKEN"
    poll_interval: float = Field(default=1.0, gt=0.0)
    console_dir: str | None = None


class RunConfig(_Section):
    universe_file: str
    as_of: date
    backend: Literal["scripted", "chat"] = "scripted"
    seed: int = 7
    auto_approve: bool = False
    out_dir: str = "./data"
    corpus_file: str | None = None
    crew_config: str | None = None
    provider: ProviderConfig = Field(default_factory=ProviderConfig)
    chat: ChatConfig = Field(default_factory=ChatConfig)
    snapshot: SnapshotConfig = Field(default_factory=SnapshotConfig)
    caps: CapsConfig = Field(default_factory=CapsConfig)
    bounds: BoundsConfig = Field(default_factory=BoundsConfig)
    pipeline: PipelineConfig = Field(default_factory=PipelineConfig)
    gateway: GatewayConfig = Field(default_factory=GatewayConfig)

    def to_dict(self) -> dict:
        return self.model_dump(mode="json")

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        try:
            return cls.model_validate(raw)
        except ValidationError as exc:
            first = exc.errors()[0]
            loc = ".".join(str(p) for p in first["loc"]) or "<root>"
            raise ConfigError(f"config: {loc}: {first['msg']}") from exc


def _interpolate(value, origin: str):
    if isinstance(value, str):
        def repl(found: re.Match) -> str:
            name = found.group(1)
            resolved = os.environ.get(name)
            if resolved is None:
                raise MissingEnvironment(
                    f"{origin}: ${{{name}}} referenced but {name} is not set"
                )
            return resolved
        return _ENV_REF.sub(repl, value)
    if isinstance(value, dict):
        return {k: _interpolate(v, origin) for k, v in value.items()}
    if isinstance(value, list):
        return [_interpolate(v, origin) for v in value]
    return value


def load_config(path: str | Path) -> RunConfig:
    p = Path(path)
    try:
        raw = yaml.safe_load(p.read_text("utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{p}: invalid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{p}: config must be a mapping")
    return RunConfig.from_dict(_interpolate(raw, str(p)))


def load_universe_file(path: str | Path) -> tuple[list[str], dict[str, str]]:
    """Read the symbol,sector CSV that defines the investable universe."""
    p = Path(path)
    try:
        text = p.read_text("utf-8")
    except OSError as exc:
        raise UniverseParseError(f"cannot read universe file {p}: {exc}") from exc
    rows = list(csv.reader(text.splitlines()))
    if not rows or [c.strip().lower() for c in rows[0]] != ["symbol", "sector"]:
        raise UniverseParseError(f"{p}: expected header 'symbol,sector'")
    symbols: list[str] = []
    sectors: dict[str, str] = {}
    for i, row in enumerate(rows[1:], start=2):
        if not row or not "".join(row).strip():
            continue
        if len(row) != 2:
            raise UniverseParseError(f"{p}: line {i}: expected 2 columns")
        symbol, sector = row[0].strip(), row[1].strip()
        if not symbol or not sector:
            raise UniverseParseError(f"{p}: line {i}: empty symbol or sector")
        if symbol in sectors:
            raise UniverseParseError(f"{p}: duplicate symbol {symbol}")
        symbols.append(symbol)
        sectors[symbol] = sector
    if not symbols:
        raise UniverseParseError(f"{p}: no symbols")
    return symbols, sectors


def build_provider(cfg: ProviderConfig) -> DataProvider:
    if cfg.kind == "fixture":
        if not cfg.fixture_dir:
            raise ConfigError("provider.kind is 'fixture' but fixture_dir is unset")
        return FixtureProvider(Path(cfg.fixture_dir))
    if not cfg.quote_url or not cfg.news_url:
        raise ConfigError("provider.kind is 'live' but quote_url or news_url is unset")
    quotes = HttpQuoteProvider(
        cfg.quote_url,
        min_interval=cfg.min_request_interval,
        attempts=cfg.retry_attempts,
        backoff_base=cfg.backoff_base,
    )
    news = HttpNewsProvider(
        cfg.news_url,
        api_key_env=cfg.news_api_key_env,
        min_interval=cfg.min_request_interval,
        attempts=cfg.retry_attempts,
        backoff_base=cfg.backoff_base,
    )
    return CompositeProvider(quotes, news)


def require_chat_environment(config: RunConfig) -> None:
    """Fail fast, before any stage runs, when the chat backend lacks its key."""
    if config.backend != "chat":
        return
    if not os.environ.get(config.chat.api_key_env):
        raise MissingEnvironment(
            f"backend 'chat' requires {config.chat.api_key_env} in the environment"
        )
    if not (config.chat.endpoint or os.environ.get(CHAT_URL_ENV)):
        raise ConfigError(
            f"backend 'chat' requires chat.endpoint in the config or "
            f"{CHAT_URL_ENV} in the environment"
        )


def build_backend(config: RunConfig):
    if config.backend == "scripted":
        return ScriptedBackend()
    require_chat_environment(config)
    endpoint = config.chat.endpoint or os.environ[CHAT_URL_ENV]
    return ChatBackend(
        endpoint=endpoint,
        model=config.chat.model,
        temperature=config.chat.temperature,
        max_tokens=config.chat.max_tokens,
        api_key_env=config.chat.api_key_env,
        retries=config.chat.retries,
        backoff_base=config.chat.backoff_base,
        timeout=config.chat.timeout,
    )


def build_crew_book(config: RunConfig) -> CrewBook:
    return load_crew_book(config.crew_config)
