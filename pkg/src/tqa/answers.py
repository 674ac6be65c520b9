from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Optional

from .temporal import TimeInterval


class FailureTag(enum.Enum):
    LINKING_FAILURE = "LinkingFailure"
    MISSING_FACTS = "MissingFacts"


class AnswerSource(enum.Enum):
    KB = "KB"
    KB_PLUS_TEXT = "KBPlusText"


@dataclass(frozen=True)
class Answer:
    """One answer: an entity (optionally with its interval), a literal, or an interval."""

    entity_id: Optional[str] = None
    label: Optional[str] = None
    interval: Optional[TimeInterval] = None

    @property
    def is_interval(self) -> bool:
        return self.entity_id is None and self.label is None

    def text(self) -> str:
        if self.is_interval:
            return str(self.interval)
        return self.label if self.label is not None else self.entity_id

    def sort_key(self):
        return (self.label or "", self.entity_id or "", str(self.interval or ""))

    def to_dict(self) -> dict:
        out = {}
        if self.entity_id is not None:
            out["id"] = self.entity_id
        if self.label is not None:
            out["label"] = self.label
        if self.interval is not None:
            out["interval"] = str(self.interval)
        return out


@dataclass(frozen=True)
class AnswerSet:
    answers: tuple[Answer, ...] = ()
    failure_tag: Optional[FailureTag] = None
    source: AnswerSource = AnswerSource.KB
    note: str = ""

    def __post_init__(self):
        object.__setattr__(self, "answers", tuple(sorted(set(self.answers), key=Answer.sort_key)))
        if self.answers and self.failure_tag is not None:
            raise ValueError("a nonempty answer set cannot carry a failure tag")

    @classmethod
    def of(cls, answers: Iterable[Answer], source: AnswerSource = AnswerSource.KB,
           note: str = "") -> "AnswerSet":
        answers = tuple(answers)
        tag = None if answers else FailureTag.MISSING_FACTS
        return cls(answers, tag, source, note)

    @classmethod
    def failed(cls, tag: FailureTag, note: str = "") -> "AnswerSet":
        return cls((), tag, AnswerSource.KB, note)

    def __bool__(self) -> bool:
        return bool(self.answers)

    def __len__(self) -> int:
        return len(self.answers)

    def intervals(self) -> list[TimeInterval]:
        return [a.interval for a in self.answers if a.interval is not None]

    def labels(self) -> list[str]:
        """Distinct answer texts in answer order (entities collapse across intervals)."""
        seen: list[str] = []
        for a in self.answers:
            t = a.text()
            if t not in seen:
                seen.append(t)
        return seen

    def to_dict(self) -> dict:
        return {
            "answers": [a.to_dict() for a in self.answers],
            "failure_tag": self.failure_tag.value if self.failure_tag else None,
            "source": self.source.value,
        }
