"""Cohort classification of daily activity diaries and Monte Carlo synthesis
of 24-hour activity sequences."""

__version__ = "0.1.0"

from .clustering import DbscanParams, dbscan
from .diary import ActivityDiary, DiaryCorpus, parse_diary_corpus
from .embedding import TsneParams, normalize_coords, tsne_embed
from .featurize import FeatureSet, assemble_features, build_code_dictionary
from .forest import fit_extra_trees, fit_random_trees_embedding, leaf_assignments, predict, proximity_matrix
from .pipeline import ClassAssignment, PipelineParams, classify_corpus
from .planted import PlantedSpec, example_planted_spec, generate_planted_corpus
from .synth import SyntheticSequence, synthesize
from .validate import adjusted_rand_index, corpus_report, minute_profile
from .windows import CohortActivityModel, fit_bgm_1d, fit_cohort_model

__all__ = [
    "ActivityDiary",
    "ClassAssignment",
    "CohortActivityModel",
    "DbscanParams",
    "DiaryCorpus",
    "FeatureSet",
    "PipelineParams",
    "PlantedSpec",
    "SyntheticSequence",
    "TsneParams",
    "adjusted_rand_index",
    "assemble_features",
    "build_code_dictionary",
    "classify_corpus",
    "corpus_report",
    "dbscan",
    "example_planted_spec",
    "fit_bgm_1d",
    "fit_cohort_model",
    "fit_extra_trees",
    "fit_random_trees_embedding",
    "generate_planted_corpus",
    "leaf_assignments",
    "minute_profile",
    "normalize_coords",
    "parse_diary_corpus",
    "predict",
    "proximity_matrix",
    "synthesize",
    "tsne_embed",
]
