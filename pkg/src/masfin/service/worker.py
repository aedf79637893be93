"""Background thread that advances runnable runs.

All coordination happens through persisted run state; the worker holds
nothing the gateway process could not rebuild after a restart. Stage
failures are recorded in run.json by the director, so the loop only has
to guard against unexpected crashes.
"""
from __future__ import annotations

import logging
import threading

from ..pipeline.runner import RUNNING, RunDirector

log = logging.getLogger(__name__)


class RunWorker:
    def __init__(self, director: RunDirector, *, poll_interval: float = 1.0):
        self.director = director
        self.poll_interval = poll_interval
        self._wake = threading.Event()
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    def start(self) -> None:
        if self._thread is not None:
            raise RuntimeError("worker already started")
        self._thread = threading.Thread(target=self._loop, name="masfin-worker", daemon=True)
        self._thread.start()

    def stop(self, timeout: float = 10.0) -> None:
        self._stop.set()
        self._wake.set()
        if self._thread is not None:
            self._thread.join(timeout=timeout)
            self._thread = None

    def kick(self) -> None:
        """Wake the loop early, e.g. right after a decision lands."""
        self._wake.set()

    def sweep(self) -> int:
        """One pass over runnable runs; returns how many were advanced."""
        advanced = 0
        for state in self.director.list_runs():
            if state.status != RUNNING:
                continue
            try:
                self.director.advance(state.run_id)
                advanced += 1
            except Exception:
                # advance() persists pipeline failures itself; anything
                # reaching here is a bug or an I/O error. Keep serving.
                log.exception("advance failed for %s", state.run_id)
        return advanced

    def _loop(self) -> None:
        while not self._stop.is_set():
            self.sweep()
            self._wake.wait(timeout=self.poll_interval)
            self._wake.clear()
