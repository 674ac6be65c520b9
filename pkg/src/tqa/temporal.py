"""Calendar points, time intervals and the temporal relations used to pick answers."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

_POINT_RE = re.compile(r"^(-?\d{1,})(?:-(\d{2})(?:-(\d{2}))?)?$")

# Sentinels used when a bound is missing.
NEG_INF = (float("-inf"), 0, 0)
POS_INF = (float("inf"), 0, 0)


class TemporalError(ValueError):
    pass


class NoAuxBound(TemporalError):
    """Before/After needs the aux bound it compares against."""


class EmptyIntersection(TemporalError):
    """Aux constraints describe disjoint periods."""


class TemporalRelation(enum.Enum):
    OVERLAP = "overlap"
    BEFORE = "before"
    AFTER = "after"
    NOW = "now"

    @classmethod
    def from_name(cls, name: str) -> "TemporalRelation":
        return cls(name.lower())


class Granularity(enum.Enum):
    YEAR = "year"
    MONTH = "month"
    DAY = "day"


def is_leap(year: int) -> bool:
    return year % 4 == 0 and (year % 100 != 0 or year % 400 == 0)


def days_in_month(year: int, month: int) -> int:
    if month == 2:
        return 29 if is_leap(year) else 28
    return 30 if month in (4, 6, 9, 11) else 31


@dataclass(frozen=True, order=False)
class CalendarPoint:
    year: int
    month: Optional[int] = None
    day: Optional[int] = None

    def __post_init__(self):
        if self.day is not None and self.month is None:
            raise TemporalError("day given without month")
        if self.month is not None and not 1 <= self.month <= 12:
            raise TemporalError(f"month out of range: {self.month}")
        if self.day is not None and not 1 <= self.day <= days_in_month(self.year, self.month):
            raise TemporalError(f"day out of range: {self.year}-{self.month}-{self.day}")

    @property
    def granularity(self) -> Granularity:
        if self.day is not None:
            return Granularity.DAY
        if self.month is not None:
            return Granularity.MONTH
        return Granularity.YEAR

    def earliest(self) -> tuple[int, int, int]:
        """First day covered by the point, as a (year, month, day) tuple."""
        return (self.year, self.month or 1, self.day or 1)

    def latest(self) -> tuple[int, int, int]:
        """Last day covered by the point."""
        month = self.month or 12
        day = self.day or days_in_month(self.year, month)
        return (self.year, month, day)

    @classmethod
    def parse(cls, text: str) -> "CalendarPoint":
        m = _POINT_RE.match(text.strip())
        if not m:
            raise TemporalError(f"not a calendar point: {text!r}")
        year, month, day = m.groups()
        return cls(int(year), int(month) if month else None, int(day) if day else None)

    def __str__(self) -> str:
        sign = "-" if self.year < 0 else ""
        out = f"{sign}{abs(self.year):04d}"
        if self.month is not None:
            out += f"-{self.month:02d}"
        if self.day is not None:
            out += f"-{self.day:02d}"
        return out


def expand_earliest(point: Optional[CalendarPoint]) -> tuple:
    """Earliest day of a start bound; a missing start is the unbounded past."""
    return NEG_INF if point is None else point.earliest()


def expand_latest(point: Optional[CalendarPoint]) -> tuple:
    """Latest day of an end bound; a missing end is the unbounded future."""
    return POS_INF if point is None else point.latest()


@dataclass(frozen=True)
class TimeInterval:
    start: Optional[CalendarPoint] = None
    end: Optional[CalendarPoint] = None

    def __post_init__(self):
        if self.start is not None and self.end is not None:
            if self.start.earliest() > self.end.latest():
                raise TemporalError(f"interval start after end: {self.start} > {self.end}")

    @classmethod
    def point(cls, p: CalendarPoint) -> "TimeInterval":
        return cls(p, p)

    @classmethod
    def years(cls, start: Optional[int], end: Optional[int]) -> "TimeInterval":
        return cls(
            CalendarPoint(start) if start is not None else None,
            CalendarPoint(end) if end is not None else None,
        )

    @classmethod
    def parse(cls, text: str) -> "TimeInterval":
        """Parse ``START .. END``; either side may be empty for an open bound."""
        if ".." not in text:
            p = CalendarPoint.parse(text)
            return cls(p, p)
        left, right = (s.strip() for s in text.split("..", 1))
        return cls(
            CalendarPoint.parse(left) if left else None,
            CalendarPoint.parse(right) if right else None,
        )

    @property
    def is_point(self) -> bool:
        return self.start is not None and self.start == self.end

    def __str__(self) -> str:
        if self.is_point:
            return str(self.start)
        left = str(self.start) if self.start is not None else ""
        right = str(self.end) if self.end is not None else ""
        return f"{left} .. {right}".strip()


@dataclass(frozen=True)
class TimedCandidate:
    entity_id: str
    label: str
    interval: TimeInterval
    provenance: str = "KB"  # "KB" | "Text"


def overlap(a: TimeInterval, b: TimeInterval) -> bool:
    return (
        expand_earliest(a.start) <= expand_latest(b.end)
        and expand_earliest(b.start) <= expand_latest(a.end)
    )


def select(
    candidates: Sequence[TimedCandidate],
    aux: Optional[TimeInterval],
    rel: TemporalRelation,
    today: Optional[CalendarPoint] = None,
) -> list[TimedCandidate]:
    """Pick the candidates that satisfy ``rel`` against the aux interval.

    Before/After return only the extremal candidates (all of them on ties),
    not every candidate satisfying the bound.
    """
    if rel is TemporalRelation.NOW:
        if today is None:
            raise TemporalError("Now needs an explicit 'today'")
        return select(candidates, TimeInterval(today, today), TemporalRelation.OVERLAP)
    if aux is None:
        raise NoAuxBound("no aux interval")
    if rel is TemporalRelation.OVERLAP:
        return [c for c in candidates if overlap(c.interval, aux)]
    if rel is TemporalRelation.BEFORE:
        if aux.start is None:
            raise NoAuxBound("Before needs aux start")
        bound = expand_earliest(aux.start)
        ok = [c for c in candidates if expand_latest(c.interval.end) <= bound]
        if not ok:
            return []
        best = max(expand_latest(c.interval.end) for c in ok)
        return [c for c in ok if expand_latest(c.interval.end) == best]
    if rel is TemporalRelation.AFTER:
        if aux.end is None:
            raise NoAuxBound("After needs aux end")
        bound = expand_latest(aux.end)
        ok = [c for c in candidates if expand_earliest(c.interval.start) >= bound]
        if not ok:
            return []
        best = min(expand_earliest(c.interval.start) for c in ok)
        return [c for c in ok if expand_earliest(c.interval.start) == best]
    raise TemporalError(f"unsupported relation {rel}")


def compose_aux_intervals(intervals: Iterable[TimeInterval]) -> TimeInterval:
    """Intersect all aux intervals (latest start, earliest end)."""
    intervals = list(intervals)
    if not intervals:
        raise TemporalError("no intervals to compose")
    start: Optional[CalendarPoint] = None
    end: Optional[CalendarPoint] = None
    for iv in intervals:
        if iv.start is not None and (start is None or _start_key(iv.start) > _start_key(start)):
            start = iv.start
        if iv.end is not None and (end is None or _end_key(iv.end) < _end_key(end)):
            end = iv.end
    if start is not None and end is not None and start.earliest() > end.latest():
        raise EmptyIntersection(f"aux intervals do not intersect ({start} > {end})")
    return TimeInterval(start, end)


# Total orders on bounds so equal-extent points of different granularity
# still compose deterministically.
def _start_key(p: CalendarPoint):
    return (p.earliest(), p.latest())


def _end_key(p: CalendarPoint):
    return (p.latest(), p.earliest())
