"""In-memory temporal knowledge base loaded from the mock-KB JSON format."""

from __future__ import annotations

import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional

from ..temporal import CalendarPoint, TemporalError, TimeInterval

logger = logging.getLogger(__name__)

TIME_KINDS = ("start_time", "end_time", "point_in_time")


class KbError(Exception):
    pass


class KbFormatError(KbError):
    pass


class StoreUnavailable(KbError):
    pass


@dataclass(frozen=True)
class TimeProperties:
    """Property ids used for start / end / point-in-time qualifiers."""

    start_time: str = "P580"
    end_time: str = "P582"
    point_in_time: str = "P585"

    def kind_of(self, prop: str) -> Optional[str]:
        for kind in TIME_KINDS:
            if getattr(self, kind) == prop:
                return kind
        return None


@dataclass(frozen=True)
class KbEntity:
    id: str
    label: str
    aliases: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.label:
            raise KbFormatError(f"entity {self.id} has an empty label")
        object.__setattr__(self, "aliases", tuple(self.aliases))


@dataclass(frozen=True)
class KbFact:
    subject: str
    predicate: str
    object: Optional[str]
    fact_id: str
    start_time: Optional[CalendarPoint] = None
    end_time: Optional[CalendarPoint] = None
    point_in_time: Optional[CalendarPoint] = None

    def __post_init__(self):
        if self.point_in_time is not None and (self.start_time or self.end_time):
            raise KbFormatError(f"fact {self.fact_id}: point_in_time mixed with start/end")
        if self.start_time is not None and self.end_time is not None:
            try:
                TimeInterval(self.start_time, self.end_time)
            except TemporalError as exc:
                raise KbFormatError(f"fact {self.fact_id}: {exc}") from None

    @property
    def qualifiers(self) -> dict[str, CalendarPoint]:
        return {k: getattr(self, k) for k in TIME_KINDS if getattr(self, k) is not None}

    def interval(self) -> Optional[TimeInterval]:
        """Qualifier interval of the statement, or None when it carries no time."""
        if self.point_in_time is not None:
            return TimeInterval.point(self.point_in_time)
        if self.start_time is None and self.end_time is None:
            return None
        return TimeInterval(self.start_time, self.end_time)


class KbStore:
    """Immutable fact store.

    Entity-level event times (e.g. when a war happened) are ordinary facts
    whose predicate is one of the time properties and whose object is a date;
    statement-level times are qualifiers on a fact.
    """

    def __init__(
        self,
        entities: Iterable[KbEntity],
        facts: Iterable[KbFact],
        relations: Iterable[KbEntity] = (),
        time_props: TimeProperties = TimeProperties(),
    ):
        self.time_props = time_props
        self.entities: dict[str, KbEntity] = {}
        for e in entities:
            if e.id in self.entities:
                raise KbFormatError(f"duplicate entity id {e.id}")
            self.entities[e.id] = e
        self.relations: dict[str, KbEntity] = {r.id: r for r in relations}
        self.facts: tuple[KbFact, ...] = tuple(facts)
        self._by_id: dict[str, KbFact] = {}
        self._by_predicate: dict[str, list[KbFact]] = defaultdict(list)
        self._entity_times: dict[str, dict[str, CalendarPoint]] = defaultdict(dict)
        for f in self.facts:
            if f.fact_id in self._by_id:
                raise KbFormatError(f"duplicate fact id {f.fact_id}")
            self._by_id[f.fact_id] = f
            self._by_predicate[f.predicate].append(f)
            kind = time_props.kind_of(f.predicate)
            if kind is not None and f.object is not None:
                try:
                    point = CalendarPoint.parse(f.object)
                except TemporalError:
                    raise KbFormatError(f"fact {f.fact_id}: {f.object!r} is not a date") from None
                if kind in self._entity_times[f.subject]:
                    raise KbFormatError(f"entity {f.subject} has two {kind} facts")
                self._entity_times[f.subject][kind] = point
        for eid, times in self._entity_times.items():
            if "point_in_time" in times and ("start_time" in times or "end_time" in times):
                raise KbFormatError(f"entity {eid}: point_in_time mixed with start/end")
            if "start_time" in times and "end_time" in times:
                try:
                    TimeInterval(times["start_time"], times["end_time"])
                except TemporalError as exc:
                    raise KbFormatError(f"entity {eid}: {exc}") from None

    def __len__(self) -> int:
        return len(self.facts)

    def fact(self, fact_id: str) -> KbFact:
        return self._by_id[fact_id]

    def has_fact(self, fact_id: str) -> bool:
        return fact_id in self._by_id

    def facts_with_predicate(self, predicate: str) -> list[KbFact]:
        return self._by_predicate.get(predicate, [])

    def relation_ids(self) -> set[str]:
        return set(self._by_predicate) | set(self.relations)

    def entity_times(self, entity_id: str) -> dict[str, CalendarPoint]:
        return dict(self._entity_times.get(entity_id, {}))

    def entity_interval(self, entity_id: str) -> Optional[TimeInterval]:
        times = self._entity_times.get(entity_id)
        if not times:
            return None
        if "point_in_time" in times:
            return TimeInterval.point(times["point_in_time"])
        return TimeInterval(times.get("start_time"), times.get("end_time"))

    def label(self, entity_id: str) -> Optional[str]:
        e = self.entities.get(entity_id)
        return e.label if e else None

    # ---------------------------------------------------------------- (de)serialization

    @classmethod
    def from_dict(cls, data: Mapping, time_props: TimeProperties = TimeProperties()) -> "KbStore":
        try:
            entities = [
                KbEntity(str(e["id"]), e["label"], tuple(e.get("aliases", ())))
                for e in data.get("entities", [])
            ]
            relations = [
                KbEntity(str(r["id"]), r["label"], tuple(r.get("aliases", ())))
                for r in data.get("relations", [])
            ]
            facts = []
            for n, f in enumerate(data.get("facts", [])):
                quals = f.get("qualifiers") or {}
                unknown = set(quals) - set(TIME_KINDS)
                if unknown:
                    raise KbFormatError(f"fact #{n}: unknown qualifiers {sorted(unknown)}")
                obj = f.get("object")
                facts.append(KbFact(
                    subject=str(f["subject"]),
                    predicate=str(f["predicate"]),
                    object=None if obj is None else str(obj),
                    fact_id=str(f.get("fact_id") or f"F{n}"),
                    **{k: CalendarPoint.parse(str(v)) for k, v in quals.items() if v is not None},
                ))
        except (KeyError, TypeError, TemporalError) as exc:
            raise KbFormatError(f"malformed KB document: {exc}") from exc
        return cls(entities, facts, relations, time_props)

    @classmethod
    def load(cls, path: str | Path, time_props: TimeProperties = TimeProperties()) -> "KbStore":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise KbError(f"cannot read KB file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise KbFormatError(f"{path}: {exc}") from exc
        store = cls.from_dict(data, time_props)
        logger.info("loaded KB %s: %d entities, %d facts", path, len(store.entities), len(store))
        return store

    def to_dict(self) -> dict:
        out: dict = {
            "entities": [
                {"id": e.id, "label": e.label, "aliases": list(e.aliases)}
                for e in self.entities.values()
            ],
            "facts": [],
        }
        if self.relations:
            out["relations"] = [
                {"id": r.id, "label": r.label, "aliases": list(r.aliases)}
                for r in self.relations.values()
            ]
        for f in self.facts:
            out["facts"].append({
                "fact_id": f.fact_id,
                "subject": f.subject,
                "predicate": f.predicate,
                "object": f.object,
                "qualifiers": {k: str(v) for k, v in f.qualifiers.items()},
            })
        return out

    def replace(self, entities=None, facts=None) -> "KbStore":
        return KbStore(
            self.entities.values() if entities is None else entities,
            self.facts if facts is None else facts,
            self.relations.values(),
            self.time_props,
        )
