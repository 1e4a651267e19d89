"""Feature assembly: activity count vectors, 288 five-minute time slices, and
the 16 demographic variables, stacked into the matrices the two classifiers
consume.

Codes in the slice columns are kept as raw integers: the code lexicon is
hierarchically ordered, so random thresholds approximately split on major
categories, and one-hot encoding would blow the matrix up past 100k columns.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .diary import DEMOGRAPHIC_FIELDS, MINUTES_PER_DAY, ActivityDiary, DiaryCorpus
from .errors import EmptyCorpus, InconsistentDictionary, UnknownCode

N_TIME_SLICES = 288
SLICE_MINUTES = MINUTES_PER_DAY // N_TIME_SLICES


class FeatureSet(str, Enum):
    DEMOGRAPHIC_ONLY = "demographic"
    DEMOGRAPHIC_PLUS_ACTIVITY = "activity"


@dataclass(frozen=True)
class CodeDictionary:
    """Distinct activity codes of a corpus, ascending, with column lookups."""

    codes: tuple[int, ...]

    def __post_init__(self):
        if list(self.codes) != sorted(set(self.codes)):
            raise InconsistentDictionary("codes must be distinct and ascending")

    def __len__(self) -> int:
        return len(self.codes)

    def column(self, code: int) -> int:
        idx = self.index().get(code)
        if idx is None:
            raise UnknownCode(code)
        return idx

    def index(self) -> dict[int, int]:
        cached = getattr(self, "_index", None)
        if cached is None:
            cached = {c: i for i, c in enumerate(self.codes)}
            object.__setattr__(self, "_index", cached)
        return cached


@dataclass(frozen=True)
class FeatureMatrix:
    rows: np.ndarray
    column_spec: tuple[str, ...]
    feature_set: FeatureSet
    case_ids: tuple[str, ...]

    def __post_init__(self):
        if self.rows.shape != (len(self.case_ids), len(self.column_spec)):
            raise InconsistentDictionary("feature matrix shape disagrees with its spec")


def build_code_dictionary(corpus: DiaryCorpus) -> CodeDictionary:
    if len(corpus) == 0:
        raise EmptyCorpus("cannot build a code dictionary from an empty corpus")
    codes = {rec.code.code for diary in corpus.diaries for rec in diary.records}
    return CodeDictionary(tuple(sorted(codes)))


def count_vector(diary: ActivityDiary, dictionary: CodeDictionary) -> np.ndarray:
    """Episode counts per dictionary code."""
    out = np.zeros(len(dictionary), dtype=np.int64)
    index = dictionary.index()
    for rec in diary.records:
        col = index.get(rec.code.code)
        if col is None:
            raise UnknownCode(rec.code.code)
        out[col] += 1
    return out


def time_slice_vector(diary: ActivityDiary) -> np.ndarray:
    """Code of the primary activity in each five-minute slice.

    Primary = the activity covering the most minutes of the slice; exact
    ties go to the earlier-starting activity.
    """
    coverage = np.zeros(N_TIME_SLICES, dtype=np.int64)
    out = np.zeros(N_TIME_SLICES, dtype=np.int64)
    for rec in diary.records:  # ascending start, so ties keep the first writer
        first = rec.start_min // SLICE_MINUTES
        last = (rec.stop_min - 1) // SLICE_MINUTES
        for k in range(first, last + 1):
            lo = k * SLICE_MINUTES
            overlap = min(rec.stop_min, lo + SLICE_MINUTES) - max(rec.start_min, lo)
            if overlap > coverage[k]:
                coverage[k] = overlap
                out[k] = rec.code.code
    return out


def assemble_features(
    corpus: DiaryCorpus,
    dictionary: CodeDictionary,
    feature_set: FeatureSet,
    demographic_vars: tuple[str, ...] = DEMOGRAPHIC_FIELDS,
) -> FeatureMatrix:
    """Stack [demographics | counts | slices] in corpus diary order."""
    for name in demographic_vars:
        if name not in DEMOGRAPHIC_FIELDS:
            raise InconsistentDictionary(f"unknown demographic variable {name}")
    corpus_codes = {rec.code.code for d in corpus.diaries for rec in d.records}
    if not corpus_codes <= set(dictionary.codes):
        raise InconsistentDictionary("corpus contains codes missing from the dictionary")

    n = len(corpus)
    demo_block = np.empty((n, len(demographic_vars)), dtype=np.float64)
    for i, diary in enumerate(corpus.diaries):
        rec = corpus.demographics[diary.case_id]
        demo_block[i] = [rec.value(name) for name in demographic_vars]
    columns = list(demographic_vars)
    blocks = [demo_block]

    if feature_set is FeatureSet.DEMOGRAPHIC_PLUS_ACTIVITY:
        counts = np.stack([count_vector(d, dictionary) for d in corpus.diaries])
        slices = np.stack([time_slice_vector(d) for d in corpus.diaries])
        blocks += [counts.astype(np.float64), slices.astype(np.float64)]
        columns += [f"count_{c}" for c in dictionary.codes]
        columns += [f"slice_{k:03d}" for k in range(N_TIME_SLICES)]

    return FeatureMatrix(
        rows=np.hstack(blocks),
        column_spec=tuple(columns),
        feature_set=feature_set,
        case_ids=corpus.case_ids(),
    )


def write_features_csv(matrix: FeatureMatrix, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("case_id," + ",".join(matrix.column_spec) + "\n")
        for case_id, row in zip(matrix.case_ids, matrix.rows):
            fh.write(case_id + "," + ",".join(_fmt(v) for v in row) + "\n")


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))
