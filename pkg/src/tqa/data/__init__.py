"""Bundled configuration tables and the toy benchmark fixtures."""

from importlib import resources
from pathlib import Path


def toy_path(name: str) -> Path:
    """Path of a toy fixture file: kb.json, corpus.jsonl, dataset.jsonl or ablation.json."""
    return Path(str(resources.files("tqa.data").joinpath("toy", name)))
