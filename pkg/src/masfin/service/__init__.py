"""HTTP gateway around the run director."""
from .app import create_app
from .worker import RunWorker

__all__ = ["RunWorker", "create_app"]
