"""Quantitative similarity between real and synthetic sequence sets.

Per-minute statistical modes and Gini impurity profiles summarize a set of
categorical day sequences; sets are compared by the fraction of minutes with
matching modes and by the Pearson correlation of their impurity profiles.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .diary import MINUTES_PER_DAY
from .errors import DegenerateCorrelationWarning, EmptySet, MissingClass


@dataclass
class MinuteProfile:
    codes: np.ndarray  # ascending distinct codes across the set
    freq: np.ndarray  # (1440, n_codes) per-minute frequencies, rows sum to 1
    modes: np.ndarray  # (1440,) most frequent code; ties -> smallest code
    gini: np.ndarray  # (1440,) 1 - sum(f^2)


@dataclass(frozen=True)
class SimilarityReport:
    class_id: int
    mode_similarity: float
    gini_r: float
    n_real: int
    n_synth: int


def minute_profile(minute_arrays) -> MinuteProfile:
    """Per-minute categorical frequencies over a set of 1440-minute sequences.

    Accepts any iterable of per-minute code arrays (see ``diary_minutes`` /
    ``sequence_minutes``).
    """
    rows = [np.asarray(m, dtype=np.int64) for m in minute_arrays]
    if not rows:
        raise EmptySet("no sequences to profile")
    for r in rows:
        if r.shape != (MINUTES_PER_DAY,):
            raise EmptySet(f"sequence covers {r.shape} minutes, expected {MINUTES_PER_DAY}")
    matrix = np.stack(rows)  # (n, 1440)
    codes = np.unique(matrix)
    n = matrix.shape[0]
    counts = np.zeros((MINUTES_PER_DAY, codes.size), dtype=np.int64)
    encoded = np.searchsorted(codes, matrix)
    for i in range(n):
        counts[np.arange(MINUTES_PER_DAY), encoded[i]] += 1
    freq = counts / n
    modes = codes[np.argmax(counts, axis=1)]  # argmax takes the first (smallest) code on ties
    gini = 1.0 - (freq**2).sum(axis=1)
    return MinuteProfile(codes=codes, freq=freq, modes=modes, gini=gini)


def mode_similarity(a: MinuteProfile, b: MinuteProfile) -> float:
    """Fraction of the 1440 minutes with identical modes."""
    return float((a.modes == b.modes).mean())


def gini_correlation(a: MinuteProfile, b: MinuteProfile) -> float:
    """Pearson r between the two impurity profiles.

    Constant profiles have no correlation; by convention two equal constant
    profiles give 1.0 and any other constant case gives 0.0.
    """
    x = np.asarray(a.gini, dtype=np.float64)
    y = np.asarray(b.gini, dtype=np.float64)
    x_const = bool(np.all(x == x[0]))
    y_const = bool(np.all(y == y[0]))
    if x_const or y_const:
        warnings.warn("constant Gini profile; correlation degenerate", DegenerateCorrelationWarning)
        return 1.0 if (x_const and y_const and x[0] == y[0]) else 0.0
    xc = x - x.mean()
    yc = y - y.mean()
    return float((xc * yc).sum() / np.sqrt((xc**2).sum() * (yc**2).sum()))


def corpus_report(
    real_by_class: dict[int, list],
    synth_by_class: dict[int, list],
) -> tuple[list[SimilarityReport], dict]:
    """Per-class reports plus the aggregate threshold fractions.

    Both inputs map class id -> list of per-minute code arrays.
    """
    missing = set(real_by_class) - set(synth_by_class)
    if missing:
        raise MissingClass(missing)
    reports = []
    for class_id in sorted(real_by_class):
        real = minute_profile(real_by_class[class_id])
        synth = minute_profile(synth_by_class[class_id])
        reports.append(
            SimilarityReport(
                class_id=class_id,
                mode_similarity=mode_similarity(real, synth),
                gini_r=gini_correlation(real, synth),
                n_real=len(real_by_class[class_id]),
                n_synth=len(synth_by_class[class_id]),
            )
        )
    n = len(reports)
    both_08 = sum(1 for r in reports if r.mode_similarity > 0.8 and r.gini_r > 0.8)
    both_06 = sum(1 for r in reports if r.mode_similarity > 0.6 and r.gini_r > 0.6)
    aggregate = {
        "n_classes": n,
        "fraction_both_above_0.8": both_08 / n if n else 0.0,
        "fraction_both_above_0.6": both_06 / n if n else 0.0,
    }
    return reports, aggregate


def adjusted_rand_index(labels_a, labels_b) -> float:
    """Chance-corrected agreement between two partitions of the same items."""
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape:
        raise ValueError("label vectors must have equal length")
    n = a.size
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    contingency = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(contingency, (ai, bi), 1)

    def comb2(v):
        return v * (v - 1) / 2.0

    sum_ij = comb2(contingency).sum()
    sum_a = comb2(contingency.sum(axis=1)).sum()
    sum_b = comb2(contingency.sum(axis=0)).sum()
    total = comb2(n)
    expected = sum_a * sum_b / total if total else 0.0
    max_index = (sum_a + sum_b) / 2.0
    if max_index == expected:
        return 1.0
    return float((sum_ij - expected) / (max_index - expected))


def write_report_csv(reports: list[SimilarityReport], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class_id", "mode_similarity", "gini_r", "n_real", "n_synth"])
        for r in reports:
            writer.writerow([r.class_id, repr(r.mode_similarity), repr(r.gini_r), r.n_real, r.n_synth])


def write_scatter_csv(reports: list[SimilarityReport], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class_id", "mode_similarity", "gini_r"])
        for r in reports:
            writer.writerow([r.class_id, repr(r.mode_similarity), repr(r.gini_r)])


def write_gini_profiles_csv(profiles: dict[int, tuple[MinuteProfile, MinuteProfile]], path) -> None:
    """Rows: class_id, minute, real_gini, synth_gini."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class_id", "minute", "real_gini", "synth_gini"])
        for class_id in sorted(profiles):
            real, synth = profiles[class_id]
            for minute in range(MINUTES_PER_DAY):
                writer.writerow([class_id, minute, repr(float(real.gini[minute])), repr(float(synth.gini[minute]))])
