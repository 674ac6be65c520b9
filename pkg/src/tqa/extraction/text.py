"""Tokenizing, sentence splitting and date-mention detection for English text."""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..temporal import CalendarPoint, TemporalError

STOPWORDS = frozenset("""
a an and are as at be been being but by did do does for from had has have he her his
how in into is it its of on or she that the their them they this to was were what when
where which who whom why will with
""".split())

_WORD_RE = re.compile(r"[a-z0-9]+")


def stem(token: str) -> str:
    """Crude suffix stripping so 'released'/'release'/'releases' meet."""
    for suffix in ("ing", "ed", "es", "s", "e"):
        if len(token) > len(suffix) + 2 and token.endswith(suffix):
            return token[: -len(suffix)]
    return token


def tokens(text: str) -> list[str]:
    return [stem(t) for t in _WORD_RE.findall(text.lower())]


def acronyms(text: str, max_span: int = 5) -> list[str]:
    """Initials of every 2..max_span word run, so "World War 2" also yields "ww2"."""
    words = _WORD_RE.findall(text.lower())
    out = []
    for i in range(len(words)):
        for n in range(2, max_span + 1):
            if i + n > len(words):
                break
            run = words[i:i + n]
            out.append("".join(w if w.isdigit() else w[0] for w in run))
    return out


def index_terms(text: str) -> list[str]:
    """Passage-side terms: stemmed tokens plus run acronyms."""
    return tokens(text) + acronyms(text)


def content_terms(text: str) -> list[str]:
    """Distinct non-stopword terms, in first-occurrence order."""
    seen: list[str] = []
    for raw in _WORD_RE.findall(text.lower()):
        if raw in STOPWORDS:
            continue
        t = stem(raw)
        if t not in seen:
            seen.append(t)
    return seen


# --------------------------------------------------------------------- sentences

_ABBREVIATIONS = frozenset(
    "mr mrs ms dr st jr sr prof gen col lt sgt rev no vs etc inc ltd co"
    " jan feb mar apr jun jul aug sep sept oct nov dec".split())
_BOUNDARY = re.compile(r"[.!?]+[\"')\]]*\s+")


def split_sentences(text: str) -> list[str]:
    sentences = []
    start = 0
    for m in _BOUNDARY.finditer(text):
        end = m.end()
        before = text[start:m.start()].split()
        last = before[-1] if before else ""
        nxt = text[end:end + 1]
        # keep initials ("Franklin D. Roosevelt") and abbreviations inside a sentence
        if re.fullmatch(r"[A-Z]", last) or last.lower().rstrip(".") in _ABBREVIATIONS:
            continue
        if nxt and nxt.islower():
            continue
        sentences.append(text[start:end].strip())
        start = end
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


# ------------------------------------------------------------------------- dates

MONTHS = {
    "january": 1, "february": 2, "march": 3, "april": 4, "may": 5, "june": 6, "july": 7,
    "august": 8, "september": 9, "october": 10, "november": 11, "december": 12,
    "jan": 1, "feb": 2, "mar": 3, "apr": 4, "jun": 6, "jul": 7, "aug": 8, "sep": 9,
    "sept": 9, "oct": 10, "nov": 11, "dec": 12,
}
_MONTH = r"(?P<month>" + "|".join(sorted(MONTHS, key=len, reverse=True)) + r")\.?"
_DAY = r"(?P<day>\d{1,2})(?:st|nd|rd|th)?"
_YEAR = r"(?P<year>\d{4})"

_DATE_PATTERNS = [
    re.compile(r"\b(?P<year>\d{4})-(?P<mnum>\d{2})-(?P<day>\d{2})\b"),
    re.compile(rf"\b{_MONTH}\s+{_DAY},?\s+{_YEAR}\b", re.IGNORECASE),
    re.compile(rf"\b{_DAY}\s+(?:of\s+)?{_MONTH},?\s+{_YEAR}\b", re.IGNORECASE),
    re.compile(rf"\b{_MONTH},?\s+{_YEAR}\b", re.IGNORECASE),
    # bare years, but not the pieces of a partial numeric date like 09-1945 or 1945-09
    re.compile(r"(?<!\d)(?<!\b\d{2}-)\b(?P<year>1\d{3}|2\d{3})\b(?!-\d{2}\b)"),
]


@dataclass(frozen=True)
class DateMention:
    point: CalendarPoint
    start: int
    end: int
    text: str


def find_dates(text: str) -> list[DateMention]:
    """All non-overlapping date mentions, longest patterns first, in text order."""
    found: list[DateMention] = []
    taken: list[tuple[int, int]] = []
    for pattern in _DATE_PATTERNS:
        for m in pattern.finditer(text):
            if any(m.start() < e and s < m.end() for s, e in taken):
                continue
            g = m.groupdict()
            month = int(g["mnum"]) if g.get("mnum") else (
                MONTHS[g["month"].lower()] if g.get("month") else None)
            day = int(g["day"]) if g.get("day") else None
            try:
                point = CalendarPoint(int(g["year"]), month, day)
            except TemporalError:
                continue
            found.append(DateMention(point, m.start(), m.end(), m.group()))
            taken.append((m.start(), m.end()))
    return sorted(found, key=lambda d: d.start)


def parse_date_text(text: str):
    """Return the CalendarPoint if ``text`` is exactly one date mention, else None."""
    stripped = text.strip().rstrip(".")
    mentions = find_dates(stripped)
    if len(mentions) == 1 and mentions[0].start == 0 and mentions[0].end == len(stripped):
        return mentions[0].point
    try:
        return CalendarPoint.parse(stripped)
    except TemporalError:
        return None
