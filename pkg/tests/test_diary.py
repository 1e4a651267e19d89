import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cohort_synth.diary import (
    ACTIVITY_HEADER,
    DEMOGRAPHIC_FIELDS,
    ActivityCode,
    ActivityDiary,
    ActivityRecord,
    DemographicRecord,
    LocationType,
    diary_minutes,
    major_category_of,
    parse_diary_corpus,
    write_diary_corpus,
)
from cohort_synth.errors import (
    DayNotCovered,
    InvalidDiary,
    MalformedCsv,
    OverlappingRecords,
    UnknownCode,
)

from conftest import LEXICON, LOCATIONS, csv_bytes, make_diary, simple_corpus

DEMO_ROW = ",".join(["case-a"] + ["-1"] * 16)
DEMO_HEADER = "case_id," + ",".join(DEMOGRAPHIC_FIELDS)


def activities_csv(rows):
    lines = [",".join(ACTIVITY_HEADER)]
    for i, (case, code, start, stop, loc) in enumerate(rows):
        lines.append(f"{case},{i},{code},{start},{stop},{loc}")
    return csv_bytes("\n".join(lines) + "\n")


def demographics_csv(case_ids):
    lines = [DEMO_HEADER]
    for c in case_ids:
        lines.append(",".join([c] + ["-1"] * 16))
    return csv_bytes("\n".join(lines) + "\n")


class TestActivityCode:
    def test_major_category_is_leading_two_digits(self):
        assert ActivityCode(10101).major_category == 10
        assert ActivityCode(500101).major_category == 50
        assert major_category_of(181301) == 18

    @pytest.mark.parametrize("bad", [0, -5, 10**6])
    def test_rejects_out_of_range(self, bad):
        with pytest.raises(ValueError):
            ActivityCode(bad)


class TestDiaryInvariants:
    def test_minimal_valid_day(self):
        d = make_diary("x", [(10101, 0, 480, 1), (50101, 480, 1020, 2), (10101, 1020, 1440, 1)])
        assert d.total_minutes() == 1440
        assert len(d.records) == 3

    def test_gap_raises(self):
        with pytest.raises(DayNotCovered):
            make_diary("x", [(10101, 0, 480, 1), (50101, 490, 1440, 2)])

    def test_overlap_raises(self):
        with pytest.raises(OverlappingRecords):
            make_diary("x", [(10101, 0, 500, 1), (50101, 480, 1440, 2)])

    def test_short_day_raises(self):
        with pytest.raises(DayNotCovered):
            make_diary("x", [(10101, 0, 1000, 1)])

    def test_record_count_cap(self):
        spans = [(10101, i * 18, (i + 1) * 18, 1) for i in range(80)]
        assert len(make_diary("ok", spans).records) == 80
        # 81 records cannot tile 1440 evenly; use 1-minute slivers
        slivers = [(10101, i, i + 1, 1) for i in range(81)]
        slivers[-1] = (10101, 80, 1440, 1)
        with pytest.raises(InvalidDiary):
            make_diary("too-many", slivers)


class TestParsing:
    def test_minimal_valid_corpus(self):
        corpus = parse_diary_corpus(
            activities_csv([("case-a", 10101, 0, 480, 1), ("case-a", 50101, 480, 1020, 2), ("case-a", 10101, 1020, 1440, 1)]),
            demographics_csv(["case-a"]),
            (LEXICON, LOCATIONS),
        )
        assert len(corpus) == 1
        assert corpus.diaries[0].total_minutes() == 1440

    def test_five_minute_gap_repaired(self):
        corpus = parse_diary_corpus(
            activities_csv([("case-a", 10101, 0, 480, 1), ("case-a", 50101, 485, 1440, 2)]),
            demographics_csv(["case-a"]),
            (LEXICON, LOCATIONS),
        )
        diary = corpus.diaries[0]
        assert diary.total_minutes() == 1440
        assert diary.records[0].duration_min == 485  # extended over the gap

    def test_trailing_gap_repaired(self):
        corpus = parse_diary_corpus(
            activities_csv([("case-a", 10101, 0, 480, 1), ("case-a", 50101, 480, 1435, 2)]),
            demographics_csv(["case-a"]),
            (LEXICON, LOCATIONS),
        )
        assert corpus.diaries[0].records[-1].stop_min == 1440

    def test_six_minute_gap_rejected(self):
        with pytest.raises(DayNotCovered):
            parse_diary_corpus(
                activities_csv([("case-a", 10101, 0, 480, 1), ("case-a", 50101, 486, 1440, 2)]),
                demographics_csv(["case-a"]),
                (LEXICON, LOCATIONS),
            )

    def test_overlapping_records_error_names_case(self):
        with pytest.raises(OverlappingRecords) as exc:
            parse_diary_corpus(
                activities_csv([("case-a", 10101, 0, 500, 1), ("case-a", 50101, 480, 1440, 2)]),
                demographics_csv(["case-a"]),
                (LEXICON, LOCATIONS),
            )
        assert exc.value.case_id == "case-a"

    def test_unknown_code_reports_row(self):
        with pytest.raises(UnknownCode) as exc:
            parse_diary_corpus(
                activities_csv([("case-a", 999999, 0, 1440, 1)]),
                demographics_csv(["case-a"]),
                (LEXICON, LOCATIONS),
            )
        assert exc.value.code == 999999
        assert exc.value.row == 2

    def test_malformed_number_reports_row(self):
        text = ",".join(ACTIVITY_HEADER) + "\ncase-a,0,10101,zero,1440,1\n"
        with pytest.raises(MalformedCsv) as exc:
            parse_diary_corpus(csv_bytes(text), demographics_csv(["case-a"]), (LEXICON, LOCATIONS))
        assert exc.value.row == 2

    def test_wrong_header_rejected(self):
        with pytest.raises(MalformedCsv):
            parse_diary_corpus(
                csv_bytes("a,b,c\n1,2,3\n"), demographics_csv(["case-a"]), (LEXICON, LOCATIONS)
            )

    def test_drop_mode_collects_diagnostics(self):
        corpus = parse_diary_corpus(
            activities_csv(
                [
                    ("good", 10101, 0, 1440, 1),
                    ("bad", 10101, 0, 500, 1),
                    ("bad", 50101, 480, 1440, 2),
                ]
            ),
            demographics_csv(["good", "bad"]),
            (LEXICON, LOCATIONS),
            on_invalid="drop",
        )
        assert len(corpus) == 1
        assert corpus.rejected[0][0] == "bad"

    def test_missing_demographics_rejected(self):
        with pytest.raises(InvalidDiary):
            parse_diary_corpus(
                activities_csv([("case-a", 10101, 0, 1440, 1)]),
                demographics_csv(["case-b"]),
                (LEXICON, LOCATIONS),
            )


class TestRoundTrip:
    def test_serialize_parse_round_trip(self, tmp_path, planted_small):
        corpus, _ = planted_small
        act = tmp_path / "activities.csv"
        demo = tmp_path / "demographics.csv"
        write_diary_corpus(corpus, act, demo)
        reparsed = parse_diary_corpus(act, demo, (corpus.activity_lexicon, corpus.location_lexicon))
        assert reparsed.case_ids() == corpus.case_ids()
        for a, b in zip(reparsed.diaries, corpus.diaries):
            assert a == b
        assert reparsed.demographics == dict(corpus.demographics)

    def test_every_diary_covers_day_exactly(self, planted_small):
        corpus, _ = planted_small
        for diary in corpus.diaries:
            assert diary.records[0].start_min == 0
            assert diary.records[-1].stop_min == 1440
            assert diary.total_minutes() == 1440
            assert len(diary_minutes(diary)) == 1440


class TestDemographics:
    def test_sentinel_allowed(self):
        rec = DemographicRecord(case_id="x")
        assert rec.TEAGE == -1
        assert rec.as_tuple() == tuple([-1.0] * 16)

    def test_negative_age_rejected(self):
        with pytest.raises(ValueError):
            DemographicRecord(case_id="x", TEAGE=-3)

    def test_value_lookup_order(self):
        rec = DemographicRecord(case_id="x", TEAGE=44, TUSPUSFT=2)
        assert rec.value("TEAGE") == 44
        assert rec.as_tuple()[0] == 44
        assert rec.as_tuple()[-1] == 2


@st.composite
def contiguous_diaries(draw):
    n_cuts = draw(st.integers(min_value=0, max_value=10))
    cuts = sorted(draw(st.sets(st.integers(min_value=1, max_value=1439), min_size=n_cuts, max_size=n_cuts)))
    bounds = [0] + list(cuts) + [1440]
    codes = list(LEXICON)
    locs = list(LOCATIONS)
    spans = []
    for i in range(len(bounds) - 1):
        code = draw(st.sampled_from(codes))
        loc = draw(st.sampled_from(locs))
        spans.append((code, bounds[i], bounds[i + 1], loc))
    return make_diary("hyp", spans)


@given(contiguous_diaries())
@settings(max_examples=50, deadline=None)
def test_generated_diaries_satisfy_invariants(diary):
    assert diary.total_minutes() == 1440
    minutes = diary_minutes(diary)
    assert len(minutes) == 1440
    for rec in diary.records:
        assert minutes[rec.start_min] == rec.code.code
