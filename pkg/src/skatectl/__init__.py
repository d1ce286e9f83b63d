"""Trace-driven skateboard controller pipeline and evaluation statistics."""

from importlib import resources
from pathlib import Path

__version__ = "0.1.0"


def data_path(name: str) -> Path:
    """Path of a bundled data file (reference fixtures, default course)."""
    return Path(str(resources.files("skatectl") / "data" / name))
