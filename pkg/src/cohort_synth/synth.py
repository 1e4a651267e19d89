"""Monte Carlo synthesis of 24-hour activity sequences from a cohort model.

Pipeline per sequence: Bernoulli window selection, length draws from the
window's length distribution, one stochastic adjacent-swap ordering pass
driven by the fitted precedence probabilities, location draws, travel
insertion at location changes, and the weighted fill to exactly 1440 minutes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator

from . import dayfill
from .diary import MINUTES_PER_DAY
from .rng import derive_seed, substream
from .windows import CohortActivityModel, StartWindow

DEFAULT_TRAVEL_MINUTES = 15.0


@dataclass
class DraftActivity:
    window_id: int | None
    code: int
    drawn_start: float
    drawn_length: int = 0
    length_lo: float = 1.0
    length_hi: float = float(MINUTES_PER_DAY)
    location: int | None = None
    is_travel: bool = False


@dataclass(frozen=True)
class SequenceActivity:
    code: int
    start_min: int
    duration_min: int
    location_id: int


@dataclass(frozen=True)
class SyntheticSequence:
    class_id: int
    seed: int
    activities: tuple[SequenceActivity, ...]
    bound_waived: bool = False

    def __post_init__(self):
        if not self.activities:
            raise ValueError("synthetic sequence has no activities")
        if self.activities[0].start_min != 0:
            raise ValueError("sequence must start at minute 0")
        for prev, cur in zip(self.activities, self.activities[1:]):
            if prev.start_min + prev.duration_min != cur.start_min:
                raise ValueError("sequence has a gap or overlap")
        last = self.activities[-1]
        if last.start_min + last.duration_min != MINUTES_PER_DAY:
            raise ValueError("sequence does not cover 1440 minutes")

    def total_minutes(self) -> int:
        return sum(a.duration_min for a in self.activities)


def _truncated_normal(rng: Generator, mean: float, sd: float, lo: float, hi: float) -> float:
    if sd <= 0 or lo >= hi:
        return float(min(max(mean, lo), hi))
    for _ in range(100):
        x = rng.normal(mean, sd)
        if lo <= x <= hi:
            return float(x)
    return float(min(max(mean, lo), hi))


def sample_windows(model: CohortActivityModel, rng: Generator) -> list[DraftActivity]:
    """Independent Bernoulli draw per start window; empty selections retry up
    to 10 times before the highest-occurrence window is forced."""
    windows = sorted(model.start_windows, key=lambda w: w.window_id)
    selected: list[StartWindow] = []
    for _ in range(10):
        selected = [w for w in windows if rng.random() < model.p_occ[w.window_id]]
        if selected:
            break
    if not selected:
        best = max(windows, key=lambda w: (model.p_occ[w.window_id], -w.window_id))
        selected = [best]
    drafts = []
    for w in selected:
        start = _truncated_normal(rng, w.component.mean, w.component.sd, w.lo, w.hi)
        drafts.append(DraftActivity(window_id=w.window_id, code=w.code, drawn_start=start))
    return drafts


def _clamp_duration(x: float, lo: float, hi: float) -> int:
    lo_i = max(1, int(math.ceil(lo - 1e-9)))
    hi_i = max(lo_i, int(math.floor(hi + 1e-9)))
    return int(min(max(int(round(x)), lo_i), hi_i))


def sample_lengths(drafts: list[DraftActivity], model: CohortActivityModel, rng: Generator) -> list[DraftActivity]:
    """Draw a length window from p_len, then a truncated-normal duration."""
    for draft in drafts:
        dist = model.p_len[draft.window_id]
        ids = sorted(dist)
        probs = np.array([dist[i] for i in ids])
        lw_id = ids[int(rng.choice(len(ids), p=probs / probs.sum()))]
        lw = model.length_window(lw_id)
        x = _truncated_normal(rng, lw.component.mean, lw.component.sd, lw.lo, lw.hi)
        draft.drawn_length = _clamp_duration(x, lw.lo, lw.hi)
        draft.length_lo = lw.lo
        draft.length_hi = lw.hi
    return drafts


def stochastic_sort(drafts: list[DraftActivity], p_prec: dict[tuple[int, int], float], rng: Generator) -> list[DraftActivity]:
    """Order by drawn start, then one adjacent-transposition sweep where the
    pair (a, b) swaps with the fitted probability that b precedes a. Pairs
    never co-observed keep their drawn-start order."""
    ordered = sorted(drafts, key=lambda d: (d.drawn_start, d.window_id if d.window_id is not None else -1))
    for i in range(len(ordered) - 1):
        a, b = ordered[i], ordered[i + 1]
        p_swap = p_prec.get((b.window_id, a.window_id))
        if p_swap is None:
            continue
        if rng.random() < p_swap:
            ordered[i], ordered[i + 1] = b, a
    return ordered


def assign_locations(drafts: list[DraftActivity], model: CohortActivityModel, rng: Generator) -> list[DraftActivity]:
    for draft in drafts:
        dist = model.p_loc[draft.window_id]
        ids = sorted(dist)
        probs = np.array([dist[i] for i in ids])
        draft.location = ids[int(rng.choice(len(ids), p=probs / probs.sum()))]
    return drafts


def insert_travel(
    drafts: list[DraftActivity],
    model: CohortActivityModel,
    default_travel_min: float = DEFAULT_TRAVEL_MINUTES,
) -> list[DraftActivity]:
    """Insert a travel activity between consecutive drafts at different
    locations; its duration is the mean of the class's fitted travel length
    windows (or the default), and its location is the destination's."""
    duration = max(1, int(round(model.travel_length_minutes(default_travel_min))))
    out: list[DraftActivity] = []
    for draft in drafts:
        if out and out[-1].location != draft.location:
            out.append(
                DraftActivity(
                    window_id=None,
                    code=model.travel_code,
                    drawn_start=draft.drawn_start,
                    drawn_length=duration,
                    location=draft.location,
                    is_travel=True,
                )
            )
        out.append(draft)
    return out


def fit_to_day(drafts: list[DraftActivity], class_id: int, seed: int = 0) -> SyntheticSequence:
    """Rescale non-travel lengths to fill exactly 1440 minutes and lay the
    activities out sequentially from minute 0."""
    lengths = np.array([d.drawn_length for d in drafts], dtype=float)
    lower = np.array([d.length_lo for d in drafts])
    upper = np.array([d.length_hi for d in drafts])
    fixed = np.array([d.is_travel for d in drafts], dtype=bool)
    result = dayfill.fit_lengths(lengths, lower, upper, fixed)

    activities = []
    cursor = 0
    for draft, minutes in zip(drafts, result.lengths):
        activities.append(SequenceActivity(draft.code, cursor, int(minutes), draft.location))
        cursor += int(minutes)
    return SyntheticSequence(
        class_id=class_id,
        seed=seed,
        activities=tuple(activities),
        bound_waived=result.bound_waived,
    )


def synthesize_one(model: CohortActivityModel, rng: Generator, seed: int = 0) -> SyntheticSequence:
    drafts = sample_windows(model, rng)
    drafts = sample_lengths(drafts, model, rng)
    drafts = stochastic_sort(drafts, model.p_prec, rng)
    drafts = assign_locations(drafts, model, rng)
    drafts = insert_travel(drafts, model)
    return fit_to_day(drafts, model.class_id, seed=seed)


def synthesize(model: CohortActivityModel, n: int, seed: int = 0) -> list[SyntheticSequence]:
    """n sequences, each from the substream derived from (seed, index)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    out = []
    for i in range(n):
        child = derive_seed(seed, "seq", i)
        out.append(synthesize_one(model, substream(seed, "seq", i), seed=child))
    return out


def sequence_minutes(seq: SyntheticSequence) -> list[int]:
    """Per-minute activity codes (length 1440)."""
    out: list[int] = []
    for a in seq.activities:
        out.extend([a.code] * a.duration_min)
    return out


def write_sequences_csv(sequences_by_class: dict[int, list[SyntheticSequence]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class_id", "seq_index", "activity_code", "start_min", "duration_min", "location_id"])
        for class_id in sorted(sequences_by_class):
            for idx, seq in enumerate(sequences_by_class[class_id]):
                for a in seq.activities:
                    writer.writerow([class_id, idx, a.code, a.start_min, a.duration_min, a.location_id])


def read_sequences_csv(path) -> dict[int, list[list[SequenceActivity]]]:
    by_key: dict[tuple[int, int], list[SequenceActivity]] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            key = (int(row["class_id"]), int(row["seq_index"]))
            by_key.setdefault(key, []).append(
                SequenceActivity(
                    int(row["activity_code"]),
                    int(row["start_min"]),
                    int(row["duration_min"]),
                    int(row["location_id"]),
                )
            )
    out: dict[int, list[list[SequenceActivity]]] = {}
    for (class_id, _idx), acts in sorted(by_key.items()):
        out.setdefault(class_id, []).append(sorted(acts, key=lambda a: a.start_min))
    return out
