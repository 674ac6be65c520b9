"""Regenerate the toy KB, corpus, dataset and ablation plan under src/tqa/data/toy/.

Run from the repository root: ``python3 scripts/build_toy.py``.
"""

from __future__ import annotations

import json
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "src" / "tqa" / "data" / "toy"

US = "Q11696"
UK = "Q14211"

PEOPLE = {
    # id: (label, office, [(start, end), ...])
    "Q35686": ("Herbert Hoover", US, [("1929-03-04", "1933-03-04")]),
    "Q8007": ("Franklin D. Roosevelt", US, [("1933-03-04", "1945-04-12")]),
    "Q11613": ("Harry S. Truman", US, [("1945-04-12", "1953-01-20")]),
    "Q9916": ("Dwight D. Eisenhower", US, [("1953-01-20", "1961-01-20")]),
    "Q9696": ("John F. Kennedy", US, [("1961-01-20", "1963-11-22")]),
    "Q9640": ("Lyndon B. Johnson", US, [("1963-11-22", "1969-01-20")]),
    "Q9588": ("Richard Nixon", US, [("1969-01-20", "1974-08-09")]),
    "Q128902": ("Neville Chamberlain", UK, [("1937-05-28", "1940-05-10")]),
    "Q8016": ("Winston Churchill", UK, [("1940-05-10", "1945-07-26"),
                                        ("1951-10-26", "1955-04-05")]),
    "Q131248": ("Clement Attlee", UK, [("1945-07-26", "1951-10-26")]),
    "Q128956": ("Anthony Eden", UK, [("1955-04-06", "1957-01-09")]),
    "Q128970": ("Harold Macmillan", UK, [("1957-01-10", "1963-10-18")]),
    "Q128976": ("Alec Douglas-Home", UK, [("1963-10-19", "1964-10-16")]),
    "Q128734": ("Harold Wilson", UK, [("1964-10-16", "1970-06-19")]),
}

EVENTS = {
    # id: (label, aliases, start, end) with end None for a point in time
    "Q362": ("World War 2", ["WW2", "Second World War"], "1939-09-01", "1945-09-02"),
    "Q8663": ("Korean War", [], "1950-06-25", "1953-07-27"),
    "Q128160": ("Cuban Missile Crisis", [], "1962-10-16", "1962-10-29"),
    "Q133207": ("Suez Crisis", [], "1956-10-29", "1957-11-07"),
    "Q154686": ("Berlin Blockade", [], "1948-06-24", "1949-05-12"),
    "Q52191": ("Attack on Pearl Harbor", ["Pearl Harbor attack"], "1941-12-07", None),
    "Q103284": ("Battle of Britain", [], "1940-07-10", "1940-10-31"),
    "Q16470": ("Normandy landings", ["D-Day"], "1944-06-06", None),
    "Q1364003": ("Sputnik 1 launch", [], "1957-10-04", None),
    "Q129864": ("Hungarian Revolution", [], "1956-10-23", "1956-11-10"),
    "Q200285": ("Wall Street Crash", [], "1929-10-24", "1929-10-29"),
    "Q8456": ("1948 Summer Olympics", [], "1948-07-29", "1948-08-14"),
    "Q43653": ("Apollo 11", [], "1969-07-16", "1969-07-24"),
    "Q41262": ("Munich Agreement", [], "1938-09-30", None),
    "Q172233": ("1966 FIFA World Cup", [], "1966-07-11", "1966-07-30"),
    "Q5477": ("Berlin Wall construction", [], "1961-08-13", None),
    "Q9682": ("Coronation of Elizabeth II", [], "1953-06-02", None),
    "Q1156": ("Great Smog of London", [], "1952-12-05", "1952-12-09"),
    "Q191721": ("Bay of Pigs Invasion", [], "1961-04-17", "1961-04-20"),
    "Q208128": ("Festival of Britain", [], "1951-05-03", "1951-09-30"),
}

ORGS = {
    "Q30": ("United States", ["USA", "United States of America"]),
    "Q145": ("United Kingdom", ["UK"]),
    US: ("President of the United States", ["president of United States"]),
    UK: ("Prime Minister of the United Kingdom", ["prime minister of United Kingdom"]),
}

ROLE = {US: ("President", "the United States"), UK: ("Prime Minister", "the United Kingdom")}

# (id, role office, relation word, event id, gold labels, group)
QUESTIONS = [
    ("aux-01", US, "during", "Q362", ["Franklin D. Roosevelt", "Harry S. Truman"], "aux"),
    ("aux-02", US, "during", "Q8663", ["Harry S. Truman", "Dwight D. Eisenhower"], "aux"),
    ("aux-03", US, "during", "Q128160", ["John F. Kennedy"], "aux"),
    ("aux-04", UK, "during", "Q133207", ["Anthony Eden", "Harold Macmillan"], "aux"),
    ("aux-05", US, "during", "Q154686", ["Harry S. Truman"], "aux"),
    ("aux-06", US, "during", "Q52191", ["Franklin D. Roosevelt"], "aux"),
    ("aux-07", UK, "during", "Q103284", ["Winston Churchill"], "aux"),
    ("aux-08", US, "during", "Q16470", ["Franklin D. Roosevelt"], "aux"),
    ("aux-09", UK, "during", "Q1364003", ["Harold Macmillan"], "aux"),
    ("aux-10", US, "before", "Q129864", ["Harry S. Truman"], "aux"),
    ("main-01", US, "during", "Q200285", ["Herbert Hoover"], "main"),
    ("main-02", UK, "during", "Q8456", ["Clement Attlee"], "main"),
    ("main-03", US, "during", "Q43653", ["Richard Nixon"], "main"),
    ("main-04", UK, "during", "Q41262", ["Neville Chamberlain"], "main"),
    ("main-05", UK, "during", "Q172233", ["Harold Wilson"], "main"),
    ("intact-01", US, "during", "Q5477", ["John F. Kennedy"], "intact"),
    ("intact-02", UK, "during", "Q9682", ["Winston Churchill"], "intact"),
    ("intact-03", UK, "during", "Q1156", ["Winston Churchill"], "intact"),
    ("intact-04", US, "after", "Q191721", ["Lyndon B. Johnson"], "intact"),
    ("intact-05", UK, "after", "Q208128", ["Winston Churchill"], "intact"),
]

MAIN_DELETIONS = ["Q35686", "Q131248", "Q9588", "Q128902", "Q128734"]

MONTHS = ["January", "February", "March", "April", "May", "June", "July", "August",
          "September", "October", "November", "December"]


def prose(iso: str, style: int) -> str:
    y, m, d = iso.split("-")
    if style == 0:
        return f"{int(d)} {MONTHS[int(m) - 1]} {y}"
    return f"{MONTHS[int(m) - 1]} {int(d)}, {y}"


def build_kb() -> dict:
    entities, facts = [], []
    for eid, (label, aliases) in ORGS.items():
        entities.append({"id": eid, "label": label, "aliases": aliases})
    for eid, (label, office, terms) in PEOPLE.items():
        entities.append({"id": eid, "label": label, "aliases": []})
        for n, (start, end) in enumerate(terms):
            facts.append({"fact_id": f"{eid}-P39-{n}", "subject": eid, "predicate": "P39",
                          "object": office,
                          "qualifiers": {"start_time": start, "end_time": end}})
    for eid, (label, aliases, start, end) in EVENTS.items():
        entities.append({"id": eid, "label": label, "aliases": aliases})
        if end is None:
            facts.append({"fact_id": f"{eid}-P585", "subject": eid, "predicate": "P585",
                          "object": start})
        else:
            facts.append({"fact_id": f"{eid}-P580", "subject": eid, "predicate": "P580",
                          "object": start})
            facts.append({"fact_id": f"{eid}-P582", "subject": eid, "predicate": "P582",
                          "object": end})
    relations = [{"id": "P39", "label": "position held", "aliases": []}]
    return {"entities": entities, "relations": relations, "facts": facts}


def build_corpus() -> list[dict]:
    docs = []
    for n, (eid, (label, aliases, start, end)) in enumerate(EVENTS.items()):
        intro = f"The {label} is widely covered in history books." if n % 2 else \
            f"{label} is a well documented event."
        if end is None:
            when = f"{label} took place on {prose(start, n % 2)}."
        else:
            when = f"{label} lasted from {prose(start, n % 2)} to {prose(end, n % 2)}."
        docs.append({"title": label, "text": f"{intro}\n\n{when} Historians still study it."})
    for n, (eid, (label, office, terms)) in enumerate(PEOPLE.items()):
        role, country = ROLE[office]
        spans = " and again from ".join(
            f"{prose(s, n % 2)} to {prose(e, n % 2)}" for s, e in terms)
        text = (f"{label} was a politician.\n\n"
                f"{label} was {role.lower()} of {country} from {spans}.")
        docs.append({"title": label, "text": text})
    docs.append({"title": "Cold War", "text": "The Cold War was a long period of tension."})
    return docs


def build_dataset() -> list[dict]:
    rows = []
    for qid, office, rel, event, gold, group in QUESTIONS:
        role, country = ROLE[office]
        question = f"Who was the {role} of {country} {rel} {EVENTS[event][0]}?"
        rows.append({"id": qid, "question": question, "gold_answers": gold, "notes": group})
    return rows


def build_ablation() -> dict:
    deletions = []
    for qid, _, _, event, _, group in QUESTIONS:
        if group == "aux":
            kinds = ["point_in_time"] if EVENTS[event][3] is None else ["start_time", "end_time"]
            deletions.append({"entity": event, "kinds": kinds})
    for person in MAIN_DELETIONS:
        deletions.append({"entity": person, "kinds": ["start_time", "end_time"]})
    return {"delete_qualifiers": deletions, "corrupt_labels": []}


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "kb.json").write_text(json.dumps(build_kb(), indent=1) + "\n")
    (OUT / "corpus.jsonl").write_text(
        "".join(json.dumps(d, ensure_ascii=False) + "\n" for d in build_corpus()))
    (OUT / "dataset.jsonl").write_text(
        "".join(json.dumps(r) + "\n" for r in build_dataset()))
    (OUT / "ablation.json").write_text(json.dumps(build_ablation(), indent=1) + "\n")
    print(f"wrote toy fixtures to {OUT}")


if __name__ == "__main__":
    main()
