"""Planted-archetype corpus generation.

Each archetype is a schedule template: activity entries with Gaussian start
and duration jitter plus an occurrence probability. Generated diaries carry
a known archetype label, giving the clustering and synthesis stages a ground
truth to be scored against.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dayfill
from .diary import (
    MINUTES_PER_DAY,
    ActivityCode,
    ActivityDiary,
    ActivityRecord,
    DemographicRecord,
    DiaryCorpus,
    LocationType,
    DEMOGRAPHIC_FIELDS,
)
from .errors import InfeasibleTemplate
from .rng import substream


@dataclass(frozen=True)
class TemplateActivity:
    code: int
    start_mean: float
    start_sd: float
    duration_mean: float
    duration_sd: float
    location: int
    prob: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.prob <= 1.0):
            raise ValueError(f"occurrence probability must be in [0,1], got {self.prob}")
        if self.duration_mean < 1:
            raise ValueError("duration_mean must be >= 1 minute")
        if self.start_sd < 0 or self.duration_sd < 0:
            raise ValueError("jitter sds must be non-negative")

    @property
    def duration_lo(self) -> float:
        return max(1.0, self.duration_mean - 2.0 * self.duration_sd)

    @property
    def duration_hi(self) -> float:
        return self.duration_mean + 2.0 * self.duration_sd


@dataclass(frozen=True)
class Archetype:
    label: str
    count: int
    template: tuple[TemplateActivity, ...]
    # Demographic profile: field -> fixed value, or (mean, sd) for a rounded
    # normal draw. Unlisted fields stay at the -1 sentinel.
    demographics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("archetype count must be >= 1")
        if not self.template:
            raise ValueError("archetype template is empty")


@dataclass(frozen=True)
class PlantedSpec:
    archetypes: tuple[Archetype, ...]
    seed: int
    activity_labels: dict = field(default_factory=dict)
    location_labels: dict = field(default_factory=dict)

    def lexicons(self) -> tuple[dict[int, str], dict[int, str]]:
        codes = {t.code for a in self.archetypes for t in a.template}
        locs = {t.location for a in self.archetypes for t in a.template}
        activities = {c: self.activity_labels.get(c, f"activity-{c}") for c in sorted(codes)}
        locations = {l: self.location_labels.get(l, f"location-{l}") for l in sorted(locs)}
        return activities, locations


def _check_feasible(arch: Archetype) -> None:
    mandatory_lo = sum(t.duration_lo for t in arch.template if t.prob >= 1.0)
    if mandatory_lo > MINUTES_PER_DAY:
        raise InfeasibleTemplate(
            f"archetype {arch.label}: mandatory activities need at least "
            f"{mandatory_lo:.0f} min, more than the 1440-minute day"
        )
    if len(arch.template) > 80:
        raise InfeasibleTemplate(f"archetype {arch.label}: more than 80 template entries")


def _truncated_normal(rng: np.random.Generator, mean: float, sd: float, lo: float, hi: float) -> float:
    if sd <= 0 or lo >= hi:
        return float(min(max(mean, lo), hi))
    for _ in range(100):
        x = rng.normal(mean, sd)
        if lo <= x <= hi:
            return float(x)
    return float(min(max(mean, lo), hi))


def _draw_diary(arch: Archetype, rng: np.random.Generator, case_id: str, code_cache, loc_cache) -> ActivityDiary:
    chosen: list[TemplateActivity] = []
    for _ in range(10):
        chosen = [t for t in arch.template if rng.random() < t.prob]
        if chosen:
            break
    if not chosen:
        chosen = [max(arch.template, key=lambda t: t.prob)]

    starts = np.array([rng.normal(t.start_mean, t.start_sd) for t in chosen])
    durations = np.array(
        [_truncated_normal(rng, t.duration_mean, t.duration_sd, t.duration_lo, t.duration_hi) for t in chosen]
    )
    order = np.lexsort((np.arange(len(chosen)), starts))
    chosen = [chosen[i] for i in order]
    durations = durations[order]

    lower = np.array([t.duration_lo for t in chosen])
    upper = np.array([t.duration_hi for t in chosen])
    filled = dayfill.fit_lengths(durations, lower, upper, fixed=np.zeros(len(chosen), dtype=bool))

    records = []
    cursor = 0
    for t, dur in zip(chosen, filled.lengths):
        records.append(ActivityRecord(code_cache[t.code], cursor, int(dur), loc_cache[t.location]))
        cursor += int(dur)
    return ActivityDiary(case_id, tuple(records))


def _draw_demographics(arch: Archetype, rng: np.random.Generator, case_id: str) -> DemographicRecord:
    values = {}
    for name in DEMOGRAPHIC_FIELDS:
        spec = arch.demographics.get(name)
        if spec is None:
            continue
        if isinstance(spec, (tuple, list)):
            mean, sd = spec
            values[name] = float(max(0, round(rng.normal(mean, sd))))
        else:
            values[name] = float(spec)
    return DemographicRecord(case_id=case_id, **values)


def generate_planted_corpus(spec: PlantedSpec) -> tuple[DiaryCorpus, dict[str, str]]:
    """Generate the corpus and its truth labels. Pure function of (spec, seed)."""
    for arch in spec.archetypes:
        _check_feasible(arch)
    activities, locations = spec.lexicons()
    code_cache = {c: ActivityCode(c) for c in activities}
    loc_cache = {l: LocationType(l, locations[l]) for l in locations}

    diaries: list[ActivityDiary] = []
    demographics: dict[str, DemographicRecord] = {}
    truth: dict[str, str] = {}
    for arch in spec.archetypes:
        for i in range(arch.count):
            case_id = f"{arch.label}-{i:04d}"
            rng = substream(spec.seed, "plant", arch.label, i)
            diaries.append(_draw_diary(arch, rng, case_id, code_cache, loc_cache))
            demographics[case_id] = _draw_demographics(arch, rng, case_id)
            truth[case_id] = arch.label
    corpus = DiaryCorpus(tuple(diaries), demographics, activities, locations)
    return corpus, truth


def load_planted_spec(path) -> PlantedSpec:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    archetypes = []
    for a in raw["archetypes"]:
        template = tuple(
            TemplateActivity(
                code=int(t["code"]),
                start_mean=float(t["start_mean"]),
                start_sd=float(t["start_sd"]),
                duration_mean=float(t["duration_mean"]),
                duration_sd=float(t["duration_sd"]),
                location=int(t["location"]),
                prob=float(t.get("prob", 1.0)),
            )
            for t in a["template"]
        )
        demographics = {
            k: tuple(v) if isinstance(v, list) else v for k, v in a.get("demographics", {}).items()
        }
        archetypes.append(Archetype(a["label"], int(a["count"]), template, demographics))
    return PlantedSpec(
        archetypes=tuple(archetypes),
        seed=int(raw["seed"]),
        activity_labels={int(k): v for k, v in raw.get("activity_labels", {}).items()},
        location_labels={int(k): v for k, v in raw.get("location_labels", {}).items()},
    )


def write_planted_spec(spec: PlantedSpec, path) -> None:
    payload = {
        "seed": spec.seed,
        "activity_labels": {str(k): v for k, v in sorted(spec.activity_labels.items())},
        "location_labels": {str(k): v for k, v in sorted(spec.location_labels.items())},
        "archetypes": [
            {
                "label": a.label,
                "count": a.count,
                "template": [
                    {
                        "code": t.code,
                        "start_mean": t.start_mean,
                        "start_sd": t.start_sd,
                        "duration_mean": t.duration_mean,
                        "duration_sd": t.duration_sd,
                        "location": t.location,
                        "prob": t.prob,
                    }
                    for t in a.template
                ],
                "demographics": {
                    k: list(v) if isinstance(v, tuple) else v for k, v in a.demographics.items()
                },
            }
            for a in spec.archetypes
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def example_planted_spec(seed: int = 7, count: int = 120) -> PlantedSpec:
    """Five behaviorally distinct archetypes used by the demo and the tests.

    The diary clock starts at the respondent's wake-adjacent anchor, so the
    long night-sleep block wraps the day edges for daytime archetypes.
    """
    A = TemplateActivity
    sleep, groom, housework, cooking = 10101, 10201, 20101, 20201
    childcare, work, school, shopping = 30101, 50101, 60101, 70101
    eating, social, tv, exercise, travel = 110101, 120101, 120303, 130101, 180101
    home, workplace, campus, store, outdoors = 1, 2, 3, 4, 5

    office_worker = Archetype(
        label="office_worker",
        count=count,
        template=(
            A(sleep, 0, 1, 180, 12, home, 1.0),
            A(groom, 185, 6, 40, 8, home, 0.95),
            A(travel, 235, 8, 25, 5, workplace, 1.0),
            A(work, 265, 10, 250, 15, workplace, 1.0),
            A(eating, 525, 10, 40, 8, workplace, 0.9),
            A(work, 570, 10, 230, 15, workplace, 1.0),
            A(travel, 815, 10, 25, 5, home, 1.0),
            A(eating, 850, 12, 45, 10, home, 0.9),
            A(tv, 900, 15, 130, 20, home, 0.85),
            A(sleep, 1035, 12, 400, 18, home, 1.0),
        ),
        demographics={"TEAGE": (41, 8), "TESEX": 1, "TELFS": 1, "TEHRUSL1": (42, 4), "TRDPFTPT": 1},
    )
    night_shift = Archetype(
        label="night_shift",
        count=count,
        template=(
            A(work, 0, 1, 170, 10, workplace, 1.0),
            A(travel, 172, 6, 25, 5, home, 1.0),
            A(eating, 200, 8, 35, 8, home, 0.9),
            A(sleep, 240, 10, 420, 20, home, 1.0),
            A(groom, 665, 8, 30, 6, home, 0.9),
            A(eating, 700, 10, 40, 8, home, 0.9),
            A(tv, 745, 12, 150, 20, home, 0.8),
            A(exercise, 900, 15, 60, 12, outdoors, 0.5),
            A(eating, 970, 10, 40, 8, home, 0.85),
            A(travel, 1015, 8, 25, 5, workplace, 1.0),
            A(work, 1045, 8, 400, 15, workplace, 1.0),
        ),
        demographics={"TEAGE": (33, 7), "TESEX": 1, "TELFS": 1, "TEHRUSL1": (38, 5), "TRDPFTPT": 1},
    )
    homemaker = Archetype(
        label="homemaker",
        count=count,
        template=(
            A(sleep, 0, 1, 200, 15, home, 1.0),
            A(cooking, 205, 8, 45, 8, home, 0.95),
            A(eating, 250, 8, 35, 6, home, 0.9),
            A(housework, 290, 10, 170, 20, home, 1.0),
            A(childcare, 465, 12, 120, 18, home, 0.9),
            A(travel, 590, 10, 20, 4, store, 0.8),
            A(shopping, 615, 10, 55, 10, store, 0.8),
            A(travel, 675, 10, 20, 4, home, 0.8),
            A(cooking, 705, 10, 50, 8, home, 0.95),
            A(eating, 760, 10, 45, 8, home, 0.9),
            A(childcare, 810, 12, 110, 15, home, 0.85),
            A(tv, 925, 15, 110, 18, home, 0.8),
            A(sleep, 1040, 12, 400, 18, home, 1.0),
        ),
        demographics={"TEAGE": (36, 6), "TESEX": 2, "TELFS": 5, "TRCHILDNUM": (2, 1), "TRHHCHILD": 1},
    )
    student = Archetype(
        label="student",
        count=count,
        template=(
            A(sleep, 0, 1, 240, 15, home, 1.0),
            A(groom, 245, 8, 35, 6, home, 0.9),
            A(travel, 285, 8, 20, 4, campus, 1.0),
            A(school, 310, 10, 330, 20, campus, 1.0),
            A(eating, 645, 10, 35, 8, campus, 0.85),
            A(school, 685, 10, 150, 15, campus, 0.9),
            A(travel, 840, 10, 20, 4, home, 1.0),
            A(exercise, 870, 12, 65, 12, outdoors, 0.6),
            A(social, 945, 12, 105, 15, home, 0.8),
            A(eating, 1055, 10, 40, 8, home, 0.9),
            A(sleep, 1100, 12, 340, 18, home, 1.0),
        ),
        demographics={"TEAGE": (20, 2), "TESCHENR": 1, "TESCHFT": 1, "TESCHLVL": 2, "TELFS": 4},
    )
    retiree = Archetype(
        label="retiree",
        count=count,
        template=(
            A(sleep, 0, 1, 260, 18, home, 1.0),
            A(groom, 265, 10, 35, 8, home, 0.9),
            A(eating, 305, 10, 45, 8, home, 0.95),
            A(tv, 355, 12, 130, 20, home, 0.9),
            A(exercise, 490, 15, 75, 15, outdoors, 0.7),
            A(eating, 575, 10, 50, 8, home, 0.9),
            A(social, 630, 15, 140, 20, home, 0.75),
            A(tv, 780, 15, 160, 22, home, 0.9),
            A(eating, 945, 10, 45, 8, home, 0.9),
            A(tv, 995, 12, 75, 15, home, 0.7),
            A(sleep, 1075, 12, 365, 18, home, 1.0),
        ),
        demographics={"TEAGE": (71, 5), "TELFS": 5, "TRSPPRES": 1},
    )

    return PlantedSpec(
        archetypes=(office_worker, night_shift, homemaker, student, retiree),
        seed=seed,
        activity_labels={
            sleep: "sleeping",
            groom: "grooming",
            housework: "housework",
            cooking: "food preparation",
            childcare: "childcare",
            work: "working",
            school: "class attendance",
            shopping: "shopping",
            eating: "eating and drinking",
            social: "socializing",
            tv: "television",
            exercise: "exercise",
            travel: "traveling",
        },
        location_labels={
            home: "home",
            workplace: "workplace",
            campus: "school",
            store: "store",
            outdoors: "outdoors",
        },
    )
