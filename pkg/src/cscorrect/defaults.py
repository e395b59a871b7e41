"""Access to the packaged knowledge base and similarity tables."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .chardata import KnowledgeBase, load_knowledge_base
from .distortion import SimilarityTables

_DATA = resources.files("cscorrect") / "data"


def data_path(name: str) -> Path:
    return Path(str(_DATA / name))


def default_kb_paths() -> tuple[Path, Path, Path]:
    return data_path("pinyin.tsv"), data_path("shape.tsv"), data_path("tricks.tsv")


def load_default_kb() -> KnowledgeBase:
    return load_knowledge_base(*default_kb_paths())


def load_default_tables() -> SimilarityTables:
    from .distortion import default_similarity_tables

    return default_similarity_tables()


def load_kb_dir(directory) -> KnowledgeBase:
    d = Path(directory)
    return load_knowledge_base(d / "pinyin.tsv", d / "shape.tsv", d / "tricks.tsv")
