import numpy as np
import pytest

from cohort_synth.dayfill import fit_lengths
from cohort_synth.rng import substream
from cohort_synth.synth import (
    DraftActivity,
    assign_locations,
    fit_to_day,
    insert_travel,
    sample_lengths,
    sample_windows,
    stochastic_sort,
    synthesize,
    sequence_minutes,
)
from cohort_synth.windows import (
    CohortActivityModel,
    GaussianComponent,
    LengthWindow,
    StartWindow,
)


def build_model(
    windows,  # list of (code, start_mean, start_sd, p_occ, length_mean, length_sd, loc_probs)
    travel_code=180101,
    travel_windows=(),
    p_prec=None,
):
    start_windows = []
    length_windows = []
    p_occ = {}
    p_len = {}
    p_loc = {}
    for i, (code, mean, sd, occ, len_mean, len_sd, loc_probs) in enumerate(windows):
        comp = GaussianComponent(mean=mean, sd=sd, weight=1.0)
        start_windows.append(
            StartWindow(i, code, comp, max(0.0, mean - 2 * sd), min(1439.0, mean + 2 * sd))
        )
        lcomp = GaussianComponent(mean=len_mean, sd=len_sd, weight=1.0)
        length_windows.append(
            LengthWindow(i, code, lcomp, max(1.0, len_mean - 2 * len_sd), min(1440.0, len_mean + 2 * len_sd))
        )
        p_occ[i] = occ
        p_len[i] = {i: 1.0}
        p_loc[i] = dict(loc_probs)
    next_id = len(length_windows)
    for mean, sd in travel_windows:
        comp = GaussianComponent(mean=mean, sd=sd, weight=1.0)
        length_windows.append(
            LengthWindow(next_id, travel_code, comp, max(1.0, mean - 2 * sd), mean + 2 * sd)
        )
        next_id += 1
    return CohortActivityModel(
        class_id=0,
        start_windows=tuple(start_windows),
        length_windows=tuple(length_windows),
        p_occ=p_occ,
        p_len=p_len,
        p_prec=p_prec or {},
        p_loc=p_loc,
        travel_code=travel_code,
        n_source_diaries=100,
    )


def default_model(**kwargs):
    return build_model(
        [
            (10101, 0, 5, 1.0, 300, 10, {1: 1.0}),
            (50101, 400, 10, 1.0, 500, 20, {2: 1.0}),
            (120303, 950, 10, 0.7, 200, 15, {1: 1.0}),
            (10101, 1150, 10, 1.0, 330, 10, {1: 1.0}),
        ],
        **kwargs,
    )


class TestSampleWindows:
    def test_certain_windows_always_selected(self):
        model = default_model()
        for i in range(50):
            drafts = sample_windows(model, substream(3, i))
            ids = {d.window_id for d in drafts}
            assert {0, 1, 3} <= ids

    def test_selection_rate_matches_p_occ(self):
        model = default_model()
        n = 4000
        hits = 0
        for i in range(n):
            drafts = sample_windows(model, substream(5, i))
            hits += any(d.window_id == 2 for d in drafts)
        p = 0.7
        sigma = np.sqrt(p * (1 - p) / n)
        assert abs(hits / n - p) <= 3 * sigma

    def test_all_zero_occurrence_forces_one_window(self):
        model = build_model([(10101, 0, 5, 0.0, 300, 10, {1: 1.0}), (50101, 400, 10, 0.0, 500, 20, {2: 1.0})])
        drafts = sample_windows(model, substream(7, 0))
        assert len(drafts) == 1
        assert drafts[0].window_id == 0  # highest p_occ tie -> lower id

    def test_drawn_start_within_window_bounds(self):
        model = default_model()
        for i in range(200):
            for d in sample_windows(model, substream(11, i)):
                w = model.start_window(d.window_id)
                assert w.lo <= d.drawn_start <= w.hi


class TestSampleLengths:
    def test_lengths_within_two_sigma_bounds(self):
        model = default_model()
        for i in range(200):
            drafts = sample_lengths(sample_windows(model, substream(13, i)), model, substream(17, i))
            for d in drafts:
                assert d.length_lo - 1 <= d.drawn_length <= d.length_hi + 1
                assert d.drawn_length >= 1

    def test_length_window_choice_frequencies(self):
        # One start window with two length windows at 0.3 / 0.7.
        comp = GaussianComponent(100.0, 10.0, 1.0)
        short = GaussianComponent(30.0, 3.0, 0.5)
        long = GaussianComponent(200.0, 10.0, 0.5)
        model = CohortActivityModel(
            class_id=0,
            start_windows=(StartWindow(0, 10101, comp, 80, 120),),
            length_windows=(
                LengthWindow(0, 10101, short, 24, 36),
                LengthWindow(1, 10101, long, 180, 220),
            ),
            p_occ={0: 1.0},
            p_len={0: {0: 0.3, 1: 0.7}},
            p_prec={},
            p_loc={0: {1: 1.0}},
            travel_code=180101,
            n_source_diaries=50,
        )
        n = 5000
        short_hits = 0
        for i in range(n):
            drafts = sample_lengths(sample_windows(model, substream(19, i)), model, substream(23, i))
            short_hits += drafts[0].drawn_length <= 36
        sigma = np.sqrt(0.3 * 0.7 / n)
        assert abs(short_hits / n - 0.3) <= 3 * sigma

    def test_minimum_one_minute(self):
        model = build_model([(10101, 0, 5, 1.0, 2, 3, {1: 1.0})])
        for i in range(100):
            drafts = sample_lengths(sample_windows(model, substream(29, i)), model, substream(31, i))
            assert drafts[0].drawn_length >= 1


class TestStochasticSort:
    def _drafts(self):
        prep = DraftActivity(window_id=0, code=20201, drawn_start=350.0)
        eat = DraftActivity(window_id=1, code=110101, drawn_start=340.0)
        return prep, eat

    def test_certain_precedence_forces_swap(self):
        prep, eat = self._drafts()
        # prep drawn after eat, but the data says prep always precedes eating
        p_prec = {(0, 1): 1.0, (1, 0): 0.0}
        ordered = stochastic_sort([prep, eat], p_prec, substream(37, 0))
        assert ordered[0] is prep

    def test_zero_swap_probability_keeps_order(self):
        prep, eat = self._drafts()
        p_prec = {(0, 1): 0.0, (1, 0): 1.0}
        ordered = stochastic_sort([prep, eat], p_prec, substream(41, 0))
        assert ordered[0] is eat

    def test_fifty_fifty_split(self):
        n = 4000
        first_counts = 0
        p_prec = {(0, 1): 0.5, (1, 0): 0.5}
        for i in range(n):
            prep, eat = self._drafts()
            ordered = stochastic_sort([prep, eat], p_prec, substream(43, i))
            first_counts += ordered[0] is prep
        sigma = np.sqrt(0.25 / n)
        assert abs(first_counts / n - 0.5) <= 3 * sigma

    def test_never_co_observed_keeps_drawn_order(self):
        prep, eat = self._drafts()
        ordered = stochastic_sort([prep, eat], {}, substream(47, 0))
        assert ordered[0] is eat  # drawn_start order

    def test_single_draft_unchanged(self):
        d = DraftActivity(window_id=0, code=1, drawn_start=10.0)
        assert stochastic_sort([d], {}, substream(53, 0)) == [d]


class TestAssignLocations:
    def test_concentrated_distribution(self):
        model = default_model()
        drafts = sample_lengths(sample_windows(model, substream(59, 0)), model, substream(61, 0))
        drafts = assign_locations(drafts, model, substream(67, 0))
        for d in drafts:
            expected = max(model.p_loc[d.window_id], key=model.p_loc[d.window_id].get)
            assert d.location == expected

    def test_frequencies_match(self):
        model = build_model([(10101, 0, 5, 1.0, 300, 10, {1: 0.6, 2: 0.4})])
        n = 5000
        home = 0
        for i in range(n):
            drafts = assign_locations(
                sample_lengths(sample_windows(model, substream(71, i)), model, substream(73, i)),
                model,
                substream(79, i),
            )
            home += drafts[0].location == 1
        sigma = np.sqrt(0.6 * 0.4 / n)
        assert abs(home / n - 0.6) <= 3 * sigma

    def test_totality(self):
        model = default_model()
        drafts = assign_locations(
            sample_lengths(sample_windows(model, substream(83, 1)), model, substream(89, 1)),
            model,
            substream(97, 1),
        )
        assert all(d.location is not None for d in drafts)


def located_drafts(spec):
    """spec: list of (code, loc, length)."""
    return [
        DraftActivity(window_id=i, code=code, drawn_start=float(i * 100), drawn_length=length, location=loc)
        for i, (code, loc, length) in enumerate(spec)
    ]


class TestInsertTravel:
    def test_two_location_changes(self):
        model = default_model()
        drafts = located_drafts([(10101, 1, 300), (50101, 2, 500), (10101, 1, 400)])
        out = insert_travel(drafts, model)
        travels = [d for d in out if d.is_travel]
        assert len(travels) == 2
        assert [d.code for d in travels] == [180101, 180101]
        # travel sits between and carries the destination's location
        assert out[1].is_travel and out[1].location == 2
        assert out[3].is_travel and out[3].location == 1

    def test_no_change_no_travel(self):
        model = default_model()
        drafts = located_drafts([(10101, 1, 300), (120303, 1, 200)])
        assert all(not d.is_travel for d in insert_travel(drafts, model))

    def test_duration_from_fitted_travel_windows(self):
        model = build_model(
            [(10101, 0, 5, 1.0, 300, 10, {1: 1.0})],
            travel_windows=((22.0, 4.0),),
        )
        drafts = located_drafts([(10101, 1, 300), (50101, 2, 500)])
        out = insert_travel(drafts, model)
        assert [d.drawn_length for d in out if d.is_travel] == [22]

    def test_default_duration_without_travel_windows(self):
        model = default_model()
        drafts = located_drafts([(10101, 1, 300), (50101, 2, 500)])
        out = insert_travel(drafts, model)
        assert [d.drawn_length for d in out if d.is_travel] == [15]


class TestFitToDay:
    def test_exact_sum_unchanged(self):
        drafts = located_drafts([(1, 1, 700), (2, 1, 740)])
        for d in drafts:
            d.length_lo, d.length_hi = 1.0, 1440.0
        seq = fit_to_day(drafts, class_id=0)
        assert [a.duration_min for a in seq.activities] == [700, 740]
        assert not seq.bound_waived

    def test_proportional_scaling(self):
        drafts = located_drafts([(1, 1, 400), (2, 1, 400)])
        for d in drafts:
            d.length_lo, d.length_hi = 1.0, 1440.0
        seq = fit_to_day(drafts, class_id=0)
        assert [a.duration_min for a in seq.activities] == [720, 720]

    def test_travel_exempt_from_rescaling(self):
        drafts = located_drafts([(1, 1, 400), (2, 2, 400)])
        for d in drafts:
            d.length_lo, d.length_hi = 1.0, 1440.0
        model = default_model()
        with_travel = insert_travel(drafts, model)
        seq = fit_to_day(with_travel, class_id=0)
        by_code = {a.code: a.duration_min for a in seq.activities}
        assert by_code[180101] == 15  # untouched
        assert seq.total_minutes() == 1440

    def test_sequential_layout_from_zero(self):
        drafts = located_drafts([(1, 1, 500), (2, 1, 500), (3, 1, 440)])
        for d in drafts:
            d.length_lo, d.length_hi = 1.0, 1440.0
        seq = fit_to_day(drafts, class_id=0)
        starts = [a.start_min for a in seq.activities]
        assert starts[0] == 0
        assert starts == sorted(starts)

    def test_unfillable_waives_longest_bound(self):
        drafts = located_drafts([(1, 1, 500), (2, 1, 300)])
        drafts[0].length_lo, drafts[0].length_hi = 450.0, 550.0
        drafts[1].length_lo, drafts[1].length_hi = 250.0, 350.0
        seq = fit_to_day(drafts, class_id=0)  # max reachable 900 < 1440
        assert seq.bound_waived
        assert seq.total_minutes() == 1440
        assert max(a.duration_min for a in seq.activities) > 550

    def test_relative_lengths_preserved_for_unclamped(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            n = int(rng.integers(2, 9))
            lengths = rng.integers(30, 400, n).astype(float)
            drafts = located_drafts([(i + 1, 1, int(l)) for i, l in enumerate(lengths)])
            for d in drafts:
                d.length_lo, d.length_hi = 1.0, 1440.0
            seq = fit_to_day(drafts, class_id=0)
            assert seq.total_minutes() == 1440
            final = np.array([a.duration_min for a in seq.activities], dtype=float)
            factor = 1440.0 / lengths.sum()
            assert np.abs(final - lengths * factor).max() <= 1.0

    def test_randomized_stress_converges(self):
        rng = np.random.default_rng(11)
        for _ in range(2000):
            n = int(rng.integers(2, 12))
            means = rng.uniform(20, 500, n)
            sds = rng.uniform(2.5, 40, n)
            lo = np.maximum(1.0, means - 2 * sds)
            hi = means + 2 * sds
            lengths = rng.uniform(lo, hi)
            result = fit_lengths(lengths, lo, hi, np.zeros(n, dtype=bool))
            assert result.lengths.sum() == 1440
            assert (result.lengths >= 1).all()


class TestSynthesize:
    def test_thousand_valid_sequences(self):
        model = default_model(p_prec={(1, 2): 0.9, (2, 1): 0.1})
        seqs = synthesize(model, n=1000, seed=3)
        assert len(seqs) == 1000
        for s in seqs:
            assert s.total_minutes() == 1440
            assert s.activities[0].start_min == 0
            mins = sequence_minutes(s)
            assert len(mins) == 1440

    def test_deterministic(self):
        model = default_model()
        a = synthesize(model, n=20, seed=5)
        b = synthesize(model, n=20, seed=5)
        assert a == b

    def test_different_seeds_differ(self):
        model = default_model()
        assert synthesize(model, n=20, seed=5) != synthesize(model, n=20, seed=6)

    def test_code_closure(self):
        model = default_model()
        allowed = {w.code for w in model.start_windows} | {model.travel_code}
        for s in synthesize(model, n=200, seed=9):
            assert {a.code for a in s.activities} <= allowed

    def test_travel_separates_location_changes(self):
        model = build_model(
            [
                (10101, 0, 5, 1.0, 400, 15, {1: 1.0}),
                (50101, 500, 10, 1.0, 500, 20, {2: 1.0}),
                (120303, 1100, 10, 1.0, 340, 15, {1: 1.0}),
            ]
        )
        for s in synthesize(model, n=300, seed=13):
            for a, b in zip(s.activities, s.activities[1:]):
                if a.location_id != b.location_id:
                    assert a.code == model.travel_code or b.code == model.travel_code

    def test_invalid_n(self):
        with pytest.raises(ValueError):
            synthesize(default_model(), n=0, seed=1)
