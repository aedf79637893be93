"""Human-in-the-loop checkpoint records and decision handling."""
from .store import (
    APPROVED,
    EDITED,
    PENDING,
    REJECTED,
    TERMINAL_STATES,
    VERDICTS,
    CheckpointRecord,
    CheckpointStore,
    checkpoint_id,
    parse_checkpoint_id,
    run_lock,
)

__all__ = [
    "APPROVED",
    "EDITED",
    "PENDING",
    "REJECTED",
    "TERMINAL_STATES",
    "VERDICTS",
    "CheckpointRecord",
    "CheckpointStore",
    "checkpoint_id",
    "parse_checkpoint_id",
    "run_lock",
]
