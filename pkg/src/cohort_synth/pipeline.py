"""End-to-end cohort classification.

Stages: featurize -> embedding forest -> proximity -> distance -> t-SNE ->
normalize -> DBSCAN -> propagate labels over noise points -> merge classes
below the size cutoff. The merge-stage forest doubles as the reusable final
classifier.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field, replace

import numpy as np

from . import clustering, embedding, forest
from .clustering import DbscanParams
from .diary import DEMOGRAPHIC_FIELDS, DiaryCorpus, major_category_of
from .embedding import EmbeddingCoords, TsneParams
from .errors import NoLargeClass, TooFewClasses
from .featurize import FeatureSet, assemble_features, build_code_dictionary
from .rng import derive_seed

DBSCAN_DEFAULTS = {
    FeatureSet.DEMOGRAPHIC_ONLY: DbscanParams(eps=0.03, min_pts=20),
    FeatureSet.DEMOGRAPHIC_PLUS_ACTIVITY: DbscanParams(eps=0.02, min_pts=10),
}


@dataclass(frozen=True)
class PipelineParams:
    feature_set: FeatureSet = FeatureSet.DEMOGRAPHIC_PLUS_ACTIVITY
    n_trees: int = 2000
    embed_depth: int = 5
    dbscan: DbscanParams | None = None  # None -> the feature set's default
    propagate_depth: int = 8
    merge_cutoff: int = 25
    classifier_trees: int | None = None  # None -> n_trees
    tsne: TsneParams = field(default_factory=TsneParams)
    demographic_vars: tuple[str, ...] = DEMOGRAPHIC_FIELDS
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.merge_cutoff < 1:
            raise ValueError("merge_cutoff must be >= 1")

    def dbscan_params(self) -> DbscanParams:
        return self.dbscan if self.dbscan is not None else DBSCAN_DEFAULTS[self.feature_set]

    def n_classifier_trees(self) -> int:
        return self.classifier_trees if self.classifier_trees is not None else self.n_trees


@dataclass
class ClassAssignment:
    case_ids: tuple[str, ...]
    labels: dict[str, int]
    stage_trace: dict[str, np.ndarray]  # labels after dbscan / propagate / merge
    final_classifier: forest.Forest
    embed_forest: forest.Forest
    coords: EmbeddingCoords
    params: PipelineParams

    def label_vector(self) -> np.ndarray:
        return np.array([self.labels[c] for c in self.case_ids])

    def class_sizes(self) -> dict[int, int]:
        sizes: dict[int, int] = {}
        for label in self.labels.values():
            sizes[label] = sizes.get(label, 0) + 1
        return dict(sorted(sizes.items()))


def propagate_labels(
    X: np.ndarray,
    partial: np.ndarray,
    depth: int = 8,
    n_trees: int = 2000,
    seed: int = 0,
    threads: int = 1,
) -> np.ndarray:
    """Replace -1 labels with predictions from a truncated extra-trees
    classifier trained on the labeled rows; labeled rows never change."""
    partial = np.asarray(partial)
    labeled = partial != -1
    classes = np.unique(partial[labeled])
    if classes.size < 2:
        raise TooFewClasses(f"label propagation needs >= 2 classes, found {classes.size}")
    out = partial.copy()
    if labeled.all():
        return out
    clf = forest.fit_extra_trees(
        X[labeled], partial[labeled], n_trees=n_trees, max_depth=depth, seed=seed, threads=threads
    )
    out[~labeled] = forest.predict(clf, X[~labeled], threads=threads)
    return out


def merge_small_classes(
    X: np.ndarray,
    labels: np.ndarray,
    cutoff: int = 25,
    n_trees: int = 2000,
    seed: int = 0,
    threads: int = 1,
) -> tuple[np.ndarray, forest.Forest]:
    """Reassign members of classes below the cutoff using a depth-unlimited
    extra-trees classifier trained on the large classes. Returns the
    re-densified labels and the classifier (the pipeline's final model)."""
    labels = np.asarray(labels)
    sizes = {int(c): int((labels == c).sum()) for c in np.unique(labels)}
    large = sorted(c for c, s in sizes.items() if s >= cutoff)
    if not large:
        raise NoLargeClass(f"no class reaches the size cutoff {cutoff}")
    keep = np.isin(labels, large)
    clf = forest.fit_extra_trees(
        X[keep], labels[keep], n_trees=n_trees, max_depth=None, seed=seed, threads=threads
    )
    out = labels.copy()
    if not keep.all():
        out[~keep] = forest.predict(clf, X[~keep], threads=threads)
    dense = {c: i for i, c in enumerate(sorted(np.unique(out)))}
    return np.array([dense[int(c)] for c in out]), clf


def classify_corpus(corpus: DiaryCorpus, params: PipelineParams) -> ClassAssignment:
    """Run the full classification pipeline; deterministic given params.seed."""
    dictionary = build_code_dictionary(corpus)
    matrix = assemble_features(corpus, dictionary, params.feature_set, params.demographic_vars)
    X = matrix.rows

    embed_forest = forest.fit_random_trees_embedding(
        X,
        n_trees=params.n_trees,
        max_depth=params.embed_depth,
        seed=derive_seed(params.seed, "embed-forest"),
        threads=params.threads,
    )
    assignments = forest.leaf_assignments(embed_forest, X, threads=params.threads)
    P = forest.proximity_matrix(assignments)
    D = embedding.proximity_to_distance(P)
    coords = embedding.tsne_embed(D, params.tsne, seed=derive_seed(params.seed, "tsne"))
    coords = embedding.normalize_coords(coords)

    db_labels = clustering.dbscan(coords.Y, params.dbscan_params())
    propagated = propagate_labels(
        X,
        db_labels,
        depth=params.propagate_depth,
        n_trees=params.n_classifier_trees(),
        seed=derive_seed(params.seed, "propagate"),
        threads=params.threads,
    )
    merged, final_clf = merge_small_classes(
        X,
        propagated,
        cutoff=params.merge_cutoff,
        n_trees=params.n_classifier_trees(),
        seed=derive_seed(params.seed, "merge"),
        threads=params.threads,
    )

    case_ids = matrix.case_ids
    return ClassAssignment(
        case_ids=case_ids,
        labels={c: int(l) for c, l in zip(case_ids, merged)},
        stage_trace={"dbscan": db_labels, "propagate": propagated, "merge": merged},
        final_classifier=final_clf,
        embed_forest=embed_forest,
        coords=coords,
        params=params,
    )


@dataclass(frozen=True)
class ClassStats:
    class_id: int
    size: int
    dominant_major: int  # largest non-sleep major category by total minutes


@dataclass(frozen=True)
class AssignmentSummary:
    n_classes: int
    sizes: tuple[int, ...]
    median_size: float
    max_size: int
    classes: tuple[ClassStats, ...]


def class_summary(
    assignment: ClassAssignment, corpus: DiaryCorpus, sleep_major: int = 10
) -> AssignmentSummary:
    """Class sizes plus each class's dominant non-sleep major category."""
    diaries = {d.case_id: d for d in corpus.diaries}
    minutes: dict[int, dict[int, int]] = {}
    sizes: dict[int, int] = {}
    for case_id, label in assignment.labels.items():
        sizes[label] = sizes.get(label, 0) + 1
        per_class = minutes.setdefault(label, {})
        for rec in diaries[case_id].records:
            major = rec.code.major_category
            if major == sleep_major:
                continue
            per_class[major] = per_class.get(major, 0) + rec.duration_min
    stats = []
    for label in sorted(sizes):
        per_class = minutes.get(label, {})
        dominant = max(sorted(per_class), key=lambda m: per_class[m]) if per_class else -1
        stats.append(ClassStats(class_id=label, size=sizes[label], dominant_major=dominant))
    all_sizes = tuple(sizes[l] for l in sorted(sizes))
    return AssignmentSummary(
        n_classes=len(sizes),
        sizes=all_sizes,
        median_size=float(statistics.median(all_sizes)),
        max_size=max(all_sizes),
        classes=tuple(stats),
    )
