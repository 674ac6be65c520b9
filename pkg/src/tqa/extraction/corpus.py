from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .text import split_sentences

logger = logging.getLogger(__name__)

MAX_PASSAGE_WORDS = 120


class CorpusError(Exception):
    pass


class EmptyCorpus(CorpusError):
    pass


@dataclass(frozen=True)
class Document:
    title: str
    body: str
    doc_id: str


@dataclass(frozen=True)
class Passage:
    doc_id: str
    index: int
    text: str
    score: float = 0.0


def split_passages(doc: Document, max_words: int = MAX_PASSAGE_WORDS) -> list[Passage]:
    """Blank-line blocks; blocks over ``max_words`` are cut at sentence boundaries."""
    chunks: list[str] = []
    for block in re.split(r"\n\s*\n", doc.body):
        block = " ".join(block.split())
        if not block:
            continue
        if len(block.split()) <= max_words:
            chunks.append(block)
            continue
        current: list[str] = []
        for sentence in split_sentences(block):
            words = sentence.split()
            if current and len(current) + len(words) > max_words:
                chunks.append(" ".join(current))
                current = []
            current.extend(words)
            while len(current) > max_words:
                chunks.append(" ".join(current[:max_words]))
                current = current[max_words:]
        if current:
            chunks.append(" ".join(current))
    return [Passage(doc.doc_id, i, text) for i, text in enumerate(chunks)]


class Corpus:
    def __init__(self, documents: Iterable[Document]):
        self.documents: list[Document] = []
        titles: set[str] = set()
        for d in documents:
            if d.title in titles:
                raise CorpusError(f"duplicate document title {d.title!r}")
            titles.add(d.title)
            self.documents.append(d)
        self._by_id = {d.doc_id: d for d in self.documents}
        self._passages: dict[str, list[Passage]] = {}

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    def get(self, doc_id: str) -> Document:
        return self._by_id[doc_id]

    def passages(self, doc: Document) -> list[Passage]:
        if doc.doc_id not in self._passages:
            self._passages[doc.doc_id] = split_passages(doc)
        return self._passages[doc.doc_id]

    @classmethod
    def from_texts(cls, items: Mapping[str, str] | Iterable[tuple[str, str]]) -> "Corpus":
        if isinstance(items, Mapping):
            items = items.items()
        return cls(Document(title, text, title) for title, text in items)

    @classmethod
    def load(cls, path: str | Path) -> "Corpus":
        """Load a directory of ``.txt`` files or a JSON-lines file of ``{"title","text"}``."""
        path = Path(path)
        if path.is_dir():
            docs = [
                Document(p.stem, p.read_text(encoding="utf-8"), p.stem)
                for p in sorted(path.glob("*.txt"))
            ]
        elif path.is_file():
            docs = []
            for n, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                    docs.append(Document(row["title"], row["text"], row.get("id", row["title"])))
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise CorpusError(f"{path}:{n}: {exc}") from exc
        else:
            raise CorpusError(f"corpus not found: {path}")
        logger.info("loaded corpus %s with %d documents", path, len(docs))
        return cls(docs)
