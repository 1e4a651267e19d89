"""Domain types for 24-hour activity diaries and corpus ingestion from CSV.

A diary is an ordered, gap-free sequence of coded activities with locations
covering exactly minutes 0..1439. Demographic records carry the 16 survey
variables with -1 as the missing-value sentinel.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import IO, Iterable, Mapping

from .errors import (
    DayNotCovered,
    InvalidDiary,
    MalformedCsv,
    OverlappingRecords,
    UnknownCode,
)

MINUTES_PER_DAY = 1440
MAX_RECORDS = 80
GAP_REPAIR_MAX_MIN = 5
MISSING = -1

DEMOGRAPHIC_FIELDS = (
    "TEAGE",
    "TEHRUSL1",
    "TELFS",
    "TESCHENR",
    "TESCHFT",
    "TESCHLVL",
    "TESEX",
    "TESPEMNOT",
    "TESPUHRS",
    "TRCHILDNUM",
    "TRDPFTPT",
    "TRHHCHILD",
    "TRSPPRES",
    "TUDIS2",
    "TUELNUM",
    "TUSPUSFT",
)

ACTIVITY_HEADER = ("case_id", "seq_no", "activity_code", "start_min", "stop_min", "location_id")
DEMOGRAPHICS_HEADER = ("case_id",) + DEMOGRAPHIC_FIELDS


def major_category_of(code: int) -> int:
    """Leading two digits of a written activity code (e.g. 50101 -> 50)."""
    ndigits = len(str(code))
    return code // 10 ** max(ndigits - 2, 0)


@dataclass(frozen=True)
class ActivityCode:
    """A positive activity code of at most six decimal digits."""

    code: int

    def __post_init__(self):
        if not (0 < self.code < 10**6):
            raise ValueError(f"activity code must be in 1..999999, got {self.code}")

    @property
    def major_category(self) -> int:
        return major_category_of(self.code)


@dataclass(frozen=True)
class LocationType:
    loc_id: int
    label: str = ""

    def __post_init__(self):
        if self.loc_id < 0:
            raise ValueError(f"location id must be non-negative, got {self.loc_id}")


@dataclass(frozen=True)
class ActivityRecord:
    code: ActivityCode
    start_min: int
    duration_min: int
    location: LocationType

    def __post_init__(self):
        if not (0 <= self.start_min < MINUTES_PER_DAY):
            raise ValueError(f"start_min {self.start_min} outside [0, 1440)")
        if self.duration_min < 1:
            raise ValueError(f"duration_min must be >= 1, got {self.duration_min}")
        if self.start_min + self.duration_min > MINUTES_PER_DAY:
            raise ValueError("record extends past the end of the day")

    @property
    def stop_min(self) -> int:
        return self.start_min + self.duration_min


@dataclass(frozen=True)
class ActivityDiary:
    """One respondent's gap-free record of the full 1440-minute day."""

    case_id: str
    records: tuple[ActivityRecord, ...]

    def __post_init__(self):
        n = len(self.records)
        if not (1 <= n <= MAX_RECORDS):
            raise InvalidDiary(self.case_id, f"record count {n} outside [1, {MAX_RECORDS}]")
        if self.records[0].start_min != 0:
            raise DayNotCovered(self.case_id, "first record does not start at minute 0")
        for prev, cur in zip(self.records, self.records[1:]):
            if cur.start_min < prev.stop_min:
                raise OverlappingRecords(self.case_id)
            if cur.start_min > prev.stop_min:
                raise DayNotCovered(self.case_id, f"gap before minute {cur.start_min}")
        if self.records[-1].stop_min != MINUTES_PER_DAY:
            raise DayNotCovered(self.case_id, "last record does not reach minute 1440")

    def total_minutes(self) -> int:
        return sum(r.duration_min for r in self.records)


@dataclass(frozen=True)
class DemographicRecord:
    """The 16 survey variables for one respondent; -1 marks a missing value."""

    case_id: str
    TEAGE: float = MISSING
    TEHRUSL1: float = MISSING
    TELFS: float = MISSING
    TESCHENR: float = MISSING
    TESCHFT: float = MISSING
    TESCHLVL: float = MISSING
    TESEX: float = MISSING
    TESPEMNOT: float = MISSING
    TESPUHRS: float = MISSING
    TRCHILDNUM: float = MISSING
    TRDPFTPT: float = MISSING
    TRHHCHILD: float = MISSING
    TRSPPRES: float = MISSING
    TUDIS2: float = MISSING
    TUELNUM: float = MISSING
    TUSPUSFT: float = MISSING

    def __post_init__(self):
        for name in ("TEAGE", "TRCHILDNUM", "TUELNUM"):
            v = getattr(self, name)
            if v != MISSING and v < 0:
                raise ValueError(f"{name} must be >= 0 or the -1 sentinel, got {v}")

    def value(self, name: str) -> float:
        return getattr(self, name)

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in DEMOGRAPHIC_FIELDS)


@dataclass(frozen=True)
class DiaryCorpus:
    diaries: tuple[ActivityDiary, ...]
    demographics: Mapping[str, DemographicRecord]
    activity_lexicon: Mapping[int, str]
    location_lexicon: Mapping[int, str]

    def __post_init__(self):
        seen: set[str] = set()
        for diary in self.diaries:
            if diary.case_id in seen:
                raise InvalidDiary(diary.case_id, "duplicate case_id")
            seen.add(diary.case_id)
            if diary.case_id not in self.demographics:
                raise InvalidDiary(diary.case_id, "no demographics entry")
            for rec in diary.records:
                if rec.code.code not in self.activity_lexicon:
                    raise UnknownCode(rec.code.code)
                if rec.location.loc_id not in self.location_lexicon:
                    raise InvalidDiary(diary.case_id, f"location {rec.location.loc_id} not in lexicon")

    def __len__(self) -> int:
        return len(self.diaries)

    def case_ids(self) -> tuple[str, ...]:
        return tuple(d.case_id for d in self.diaries)


def _as_text(stream) -> IO[str]:
    if isinstance(stream, (str, Path)):
        return open(stream, "r", encoding="utf-8", newline="")
    if isinstance(stream, bytes):
        return io.StringIO(stream.decode("utf-8"))
    if isinstance(stream, io.TextIOBase):
        return stream
    return io.TextIOWrapper(stream, encoding="utf-8", newline="")


def load_lexicons(source) -> tuple[dict[int, str], dict[int, str]]:
    """Read lexicons.json: {"activities": {code: label}, "locations": {id: label}}."""
    if isinstance(source, (str, Path)):
        raw = json.loads(Path(source).read_text(encoding="utf-8"))
    else:
        raw = json.load(source)
    activities = {int(k): str(v) for k, v in raw["activities"].items()}
    locations = {int(k): str(v) for k, v in raw["locations"].items()}
    return activities, locations


def write_lexicons(activity_lexicon, location_lexicon, path) -> None:
    payload = {
        "activities": {str(k): activity_lexicon[k] for k in sorted(activity_lexicon)},
        "locations": {str(k): location_lexicon[k] for k in sorted(location_lexicon)},
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _parse_int(text: str, row: int, field: str) -> int:
    try:
        return int(float(text))
    except ValueError:
        raise MalformedCsv(row, f"field {field}: cannot parse {text!r} as a number") from None


def _repair_gaps(case_id: str, rows: list[tuple[int, int, int, int]]) -> list[tuple[int, int, int]]:
    """Sort (start, stop, code, loc) rows, extend across gaps <= 5 min, and
    verify full-day coverage. Returns (start, duration, ...) tuples."""
    rows = sorted(rows, key=lambda r: r[0])
    repaired: list[tuple[int, int, int, int]] = []
    for start, stop, code, loc in rows:
        if repaired:
            prev_stop = repaired[-1][1]
            gap = start - prev_stop
            if gap < 0:
                raise OverlappingRecords(case_id)
            if 0 < gap <= GAP_REPAIR_MAX_MIN:
                p = repaired[-1]
                repaired[-1] = (p[0], start, p[2], p[3])
            elif gap > GAP_REPAIR_MAX_MIN:
                raise DayNotCovered(case_id, f"{gap}-minute gap exceeds the repair limit")
        repaired.append((start, stop, code, loc))
    trailing = MINUTES_PER_DAY - repaired[-1][1]
    if 0 < trailing <= GAP_REPAIR_MAX_MIN:
        p = repaired[-1]
        repaired[-1] = (p[0], MINUTES_PER_DAY, p[2], p[3])
    return [(s, e - s, c, l) for s, e, c, l in repaired]


def parse_diary_corpus(
    activity_csv,
    demographics_csv,
    lexicons,
    *,
    on_invalid: str = "raise",
) -> DiaryCorpus:
    """Assemble a corpus from the canonical activity and demographics CSVs.

    ``lexicons`` is either a (activity, location) mapping pair or a path to
    lexicons.json. With ``on_invalid="drop"``, diaries that violate the day
    invariants are rejected and listed on the returned corpus's
    ``rejected`` attribute instead of raising.
    """
    if on_invalid not in ("raise", "drop"):
        raise ValueError("on_invalid must be 'raise' or 'drop'")
    if isinstance(lexicons, tuple):
        activity_lexicon, location_lexicon = lexicons
    else:
        activity_lexicon, location_lexicon = load_lexicons(lexicons)

    by_case: dict[str, list[tuple[int, int, int, int]]] = {}
    with _as_text(activity_csv) as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != ACTIVITY_HEADER:
            raise MalformedCsv(0, f"activities header must be {','.join(ACTIVITY_HEADER)}")
        for idx, row in enumerate(reader, start=2):
            if any(row.get(k) in (None, "") for k in ACTIVITY_HEADER):
                raise MalformedCsv(idx, "missing field")
            code = _parse_int(row["activity_code"], idx, "activity_code")
            if code not in activity_lexicon:
                raise UnknownCode(code, idx)
            start = _parse_int(row["start_min"], idx, "start_min")
            stop = _parse_int(row["stop_min"], idx, "stop_min")
            loc = _parse_int(row["location_id"], idx, "location_id")
            if loc not in location_lexicon:
                raise MalformedCsv(idx, f"location {loc} not in lexicon")
            if stop <= start:
                raise MalformedCsv(idx, f"stop_min {stop} must exceed start_min {start}")
            if start < 0 or stop > MINUTES_PER_DAY:
                raise MalformedCsv(idx, "record outside the 1440-minute day")
            by_case.setdefault(row["case_id"], []).append((start, stop, code, loc))

    demographics: dict[str, DemographicRecord] = {}
    with _as_text(demographics_csv) as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != DEMOGRAPHICS_HEADER:
            raise MalformedCsv(0, f"demographics header must be {','.join(DEMOGRAPHICS_HEADER)}")
        for idx, row in enumerate(reader, start=2):
            case_id = row["case_id"]
            values = {}
            for name in DEMOGRAPHIC_FIELDS:
                text = row.get(name)
                if text in (None, ""):
                    raise MalformedCsv(idx, f"missing field {name}")
                try:
                    values[name] = float(text)
                except ValueError:
                    raise MalformedCsv(idx, f"field {name}: cannot parse {text!r}") from None
            demographics[case_id] = DemographicRecord(case_id=case_id, **values)

    diaries: list[ActivityDiary] = []
    rejected: list[tuple[str, str]] = []
    loc_cache = {lid: LocationType(lid, label) for lid, label in location_lexicon.items()}
    code_cache = {c: ActivityCode(c) for c in activity_lexicon}
    for case_id in by_case:
        try:
            if case_id not in demographics:
                raise InvalidDiary(case_id, "no demographics entry")
            repaired = _repair_gaps(case_id, by_case[case_id])
            records = tuple(
                ActivityRecord(code_cache[c], s, d, loc_cache[l]) for s, d, c, l in repaired
            )
            diaries.append(ActivityDiary(case_id, records))
        except (OverlappingRecords, DayNotCovered, InvalidDiary) as err:
            if on_invalid == "raise":
                raise
            rejected.append((case_id, str(err)))

    corpus = DiaryCorpus(tuple(diaries), demographics, dict(activity_lexicon), dict(location_lexicon))
    object.__setattr__(corpus, "rejected", tuple(rejected))
    return corpus


def write_diary_corpus(corpus: DiaryCorpus, activities_path, demographics_path) -> None:
    """Serialize a corpus back to the canonical CSV pair."""
    with open(activities_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ACTIVITY_HEADER)
        for diary in corpus.diaries:
            for seq_no, rec in enumerate(diary.records):
                writer.writerow(
                    [diary.case_id, seq_no, rec.code.code, rec.start_min, rec.stop_min, rec.location.loc_id]
                )
    with open(demographics_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DEMOGRAPHICS_HEADER)
        for diary in corpus.diaries:
            demo = corpus.demographics[diary.case_id]
            writer.writerow([diary.case_id] + [_format_num(v) for v in demo.as_tuple()])


def _format_num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def diary_minutes(diary: ActivityDiary) -> "list[int]":
    """Per-minute activity codes (length 1440)."""
    out = []
    for rec in diary.records:
        out.extend([rec.code.code] * rec.duration_min)
    return out
