"""Logging setup for CLI runs."""
import logging
import sys

LOG_FORMAT = "%(asctime)s %(levelname)-5.5s [%(name)s] %(message)s"
DATE_FORMAT = "%H:%M:%S"


def configure_logging(level: str = "INFO") -> None:
    """Install a single stderr handler on the root logger (idempotent)."""
    root = logging.getLogger()
    for handler in list(root.handlers):
        if getattr(handler, "_coopgrasp", False):
            root.removeHandler(handler)

    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))
    handler._coopgrasp = True  # type: ignore[attr-defined]
    root.addHandler(handler)
    root.setLevel(level.upper())
