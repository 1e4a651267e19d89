import io

import numpy as np
import pytest

from cohort_synth.diary import (
    ActivityCode,
    ActivityDiary,
    ActivityRecord,
    DemographicRecord,
    DiaryCorpus,
    LocationType,
)

LEXICON = {
    10101: "sleeping",
    10201: "grooming",
    20201: "food preparation",
    50101: "working",
    110101: "eating",
    120303: "television",
    180101: "traveling",
}
LOCATIONS = {1: "home", 2: "workplace", 4: "store"}

HOME = LocationType(1, "home")
WORK = LocationType(2, "workplace")


def make_diary(case_id, spans, lexicon=None):
    """spans: list of (code, start, stop, loc_id)."""
    locs = {lid: LocationType(lid, LOCATIONS.get(lid, "")) for lid in LOCATIONS}
    records = tuple(
        ActivityRecord(ActivityCode(code), start, stop - start, locs[loc])
        for code, start, stop, loc in spans
    )
    return ActivityDiary(case_id, records)


def make_corpus(diaries, lexicon=None, locations=None):
    demo = {d.case_id: DemographicRecord(case_id=d.case_id, TEAGE=30) for d in diaries}
    return DiaryCorpus(
        tuple(diaries),
        demo,
        dict(lexicon or LEXICON),
        dict(locations or LOCATIONS),
    )


def simple_corpus(n=3):
    diaries = [
        make_diary(
            f"case-{i:03d}",
            [(10101, 0, 480, 1), (50101, 480, 1020, 2), (10101, 1020, 1440, 1)],
        )
        for i in range(n)
    ]
    return make_corpus(diaries)


def csv_bytes(text: str) -> io.BytesIO:
    return io.BytesIO(text.encode("utf-8"))


@pytest.fixture(scope="session")
def planted_small():
    """3-archetype planted corpus small enough for unit tests."""
    from cohort_synth.planted import Archetype, PlantedSpec, TemplateActivity, generate_planted_corpus

    A = TemplateActivity
    spec = PlantedSpec(
        archetypes=(
            Archetype(
                "worker",
                40,
                (
                    A(10101, 0, 1, 420, 20, 1, 1.0),
                    A(180101, 425, 8, 25, 5, 2, 1.0),
                    A(50101, 455, 10, 520, 25, 2, 1.0),
                    A(180101, 985, 10, 25, 5, 1, 1.0),
                    A(120303, 1015, 12, 140, 20, 1, 0.9),
                    A(10101, 1160, 10, 290, 15, 1, 1.0),
                ),
            ),
            Archetype(
                "homebody",
                40,
                (
                    A(10101, 0, 1, 520, 25, 1, 1.0),
                    A(20201, 525, 10, 70, 12, 1, 0.95),
                    A(110101, 600, 10, 50, 10, 1, 0.9),
                    A(120303, 655, 12, 420, 30, 1, 1.0),
                    A(10101, 1080, 10, 360, 20, 1, 1.0),
                ),
            ),
            Archetype(
                "nightowl",
                40,
                (
                    A(50101, 0, 1, 280, 15, 2, 1.0),
                    A(180101, 282, 6, 25, 5, 1, 1.0),
                    A(10101, 310, 8, 460, 25, 1, 1.0),
                    A(110101, 775, 10, 45, 8, 1, 0.9),
                    A(120303, 825, 12, 230, 25, 1, 0.9),
                    A(50101, 1060, 10, 380, 20, 2, 1.0),
                ),
            ),
        ),
        seed=13,
    )
    return generate_planted_corpus(spec)
