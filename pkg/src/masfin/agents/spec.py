"""Crew and agent declarations, loaded from a versioned YAML document stream.

The config file holds one document per crew.  Crews carry between three
and five agents; the designated summary agent, when present, must be one
of them and is responsible for the crew's final report.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from ..errors import ConfigError
from .schemas import SCHEMAS

MIN_AGENTS = 3
MAX_AGENTS = 5


@dataclass(frozen=True)
class AgentSpec:
    agent_id: str
    role: str
    goal: str
    output_schema: str
    system_template: str
    user_template: str

    def __post_init__(self) -> None:
        if not self.agent_id or not self.agent_id.replace("_", "").isalnum():
            raise ConfigError(f"bad agent_id: {self.agent_id!r}")
        if self.output_schema not in SCHEMAS:
            raise ConfigError(f"{self.agent_id}: unknown output schema {self.output_schema!r}")


@dataclass(frozen=True)
class CrewSpec:
    crew_name: str
    version: str
    stage: int
    agents: tuple[AgentSpec, ...]
    summary_agent: str | None = None
    description: str = ""

    def __post_init__(self) -> None:
        if not (MIN_AGENTS <= len(self.agents) <= MAX_AGENTS):
            raise ConfigError(
                f"crew {self.crew_name}: {len(self.agents)} agents, "
                f"must have {MIN_AGENTS} to {MAX_AGENTS}"
            )
        ids = [a.agent_id for a in self.agents]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"crew {self.crew_name}: duplicate agent ids")
        if self.summary_agent is not None and self.summary_agent not in ids:
            raise ConfigError(
                f"crew {self.crew_name}: summary agent {self.summary_agent!r} not in crew"
            )

    @property
    def final_agent(self) -> AgentSpec:
        """The agent whose parsed output becomes the crew report."""
        if self.summary_agent is None:
            return self.agents[-1]
        return next(a for a in self.agents if a.agent_id == self.summary_agent)

    def agent(self, agent_id: str) -> AgentSpec:
        for a in self.agents:
            if a.agent_id == agent_id:
                return a
        raise KeyError(agent_id)


@dataclass(frozen=True)
class CrewBook:
    """All five crews, keyed by pipeline stage."""

    version: str
    crews: tuple[CrewSpec, ...] = field(default_factory=tuple)

    def by_stage(self, stage: int) -> CrewSpec:
        for crew in self.crews:
            if crew.stage == stage:
                return crew
        raise KeyError(stage)

    def agent_index(self) -> dict[str, AgentSpec]:
        return {a.agent_id: a for crew in self.crews for a in crew.agents}


def _parse_agent(raw: dict, crew_name: str) -> AgentSpec:
    try:
        return AgentSpec(
            agent_id=raw["agent_id"],
            role=raw["role"],
            goal=raw["goal"],
            output_schema=raw["output_schema"],
            system_template=raw["system_template"],
            user_template=raw["user_template"],
        )
    except KeyError as exc:
        raise ConfigError(f"crew {crew_name}: agent missing field {exc}") from exc


def parse_crew_documents(text: str, origin: str = "<config>") -> CrewBook:
    try:
        docs = [d for d in yaml.safe_load_all(text) if d is not None]
    except yaml.YAMLError as exc:
        raise ConfigError(f"{origin}: invalid YAML: {exc}") from exc
    if not docs:
        raise ConfigError(f"{origin}: no crew documents")
    crews: list[CrewSpec] = []
    versions: set[str] = set()
    for doc in docs:
        if not isinstance(doc, dict):
            raise ConfigError(f"{origin}: crew document must be a mapping")
        try:
            crew = CrewSpec(
                crew_name=doc["crew_name"],
                version=str(doc["version"]),
                stage=int(doc["stage"]),
                agents=tuple(_parse_agent(a, doc.get("crew_name", "?")) for a in doc["agents"]),
                summary_agent=doc.get("summary_agent"),
                description=doc.get("description", ""),
            )
        except KeyError as exc:
            raise ConfigError(f"{origin}: crew document missing field {exc}") from exc
        crews.append(crew)
        versions.add(crew.version)
    stages = [c.stage for c in crews]
    if len(set(stages)) != len(stages):
        raise ConfigError(f"{origin}: duplicate stage assignment across crews")
    if len(versions) > 1:
        raise ConfigError(f"{origin}: mixed crew versions {sorted(versions)}")
    return CrewBook(version=versions.pop(), crews=tuple(crews))


def load_crew_book(path: str | Path | None = None) -> CrewBook:
    """Load crews from `path`, or the bundled defaults when omitted."""
    if path is None:
        text = resources.files("masfin.resources").joinpath("crews.yaml").read_text("utf-8")
        return parse_crew_documents(text, origin="bundled crews.yaml")
    p = Path(path)
    try:
        text = p.read_text("utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read crew config {p}: {exc}") from exc
    return parse_crew_documents(text, origin=str(p))
