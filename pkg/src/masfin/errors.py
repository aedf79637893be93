"""Exception taxonomy and CLI exit-code mapping.

Every error the package raises deliberately derives from MasfinError; the
four mid-level families map onto the CLI exit-code contract (1 config/env,
2 data, 3 pipeline, 4 evaluation).
"""

from __future__ import annotations

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_PIPELINE = 3
EXIT_EVALUATION = 4
EXIT_USAGE = 64


class MasfinError(Exception):
    """Base class for all deliberate errors."""

    exit_code = EXIT_PIPELINE


# --- configuration / environment (exit 1) ---------------------------------

class ConfigError(MasfinError):
    exit_code = EXIT_CONFIG


class MissingEnvironment(ConfigError):
    """A required environment variable (secret) is not set."""


# --- data layer (exit 2) ---------------------------------------------------

class DataError(MasfinError):
    exit_code = EXIT_DATA


class ProviderUnavailable(DataError):
    """Provider unreachable or failing, and no cache entry to fall back on."""


class UnknownTicker(DataError):
    pass


class InsufficientHistory(DataError):
    """Fewer sessions/observations than the requested computation needs."""


class PartialFetchFailure(DataError):
    """Some tickers of a snapshot universe failed to fetch; nothing written."""

    def __init__(self, failures: dict[str, str]):
        self.failures = dict(failures)
        detail = "; ".join(f"{t}: {msg}" for t, msg in sorted(self.failures.items()))
        super().__init__(f"snapshot aborted, {len(self.failures)} ticker(s) failed: {detail}")


class SnapshotIntegrityError(DataError):
    """Persisted snapshot does not match its recorded digest."""


class CorpusParseError(DataError):
    pass


class UniverseParseError(DataError):
    pass


class EmptyCorpus(DataError):
    pass


# --- metrics engine (exit 2: these are data-shape problems) ----------------

class ZeroVolatility(DataError):
    pass


class NoDownside(DataError):
    """Sortino undefined: no negative excess-return observation."""


class DegenerateBenchmark(DataError):
    pass


class InsufficientOverlap(DataError):
    pass


class ZeroVolume(DataError):
    pass


class EmptyCohort(DataError):
    pass


# --- agent core / backends (pipeline family, exit 3) -----------------------

class AgentError(MasfinError):
    pass


class MissingContextKey(AgentError):
    pass


class ContextBudgetExceeded(AgentError):
    pass


class BackendUnavailable(AgentError):
    pass


class BackendTimeout(AgentError):
    pass


class RetriesExhausted(AgentError):
    pass


class NoStructuredBlock(AgentError):
    pass


class SchemaViolation(AgentError):
    pass


class CrewAborted(AgentError):
    pass


# --- pipeline stage gates (exit 3) -----------------------------------------

class PipelineError(MasfinError):
    pass


class CardinalityViolation(PipelineError):
    pass


class UnknownSymbolCited(PipelineError):
    pass


class MetricMismatch(PipelineError):
    """An agent-quoted metric deviates from the engine value beyond tolerance."""


class InfeasibleAllocation(PipelineError):
    pass


class StageFailed(PipelineError):
    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage} failed: {cause}")


class RunNotFound(PipelineError):
    pass


# --- HITL gateway (exit 3) -------------------------------------------------

class HitlError(MasfinError):
    pass


class DuplicatePendingCheckpoint(HitlError):
    pass


class CheckpointNotPending(HitlError):
    pass


class CheckpointNotFound(HitlError):
    pass


class EditValidationFailed(HitlError):
    pass


class RunNotPublishable(HitlError):
    pass


# --- evaluation (exit 4) ---------------------------------------------------

class EvaluationError(MasfinError):
    exit_code = EXIT_EVALUATION


class MissingPrice(EvaluationError):
    def __init__(self, symbols: list[str]):
        self.symbols = sorted(symbols)
        super().__init__(f"no price for: {', '.join(self.symbols)}")


class EmptySeries(EvaluationError):
    pass


class DegenerateSeries(EvaluationError):
    pass


class LengthMismatch(EvaluationError):
    pass
