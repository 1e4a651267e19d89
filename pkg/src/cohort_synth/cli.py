"""Command-line surface: plant, classify, fit, synth, validate.

Exit codes: 0 success, 1 invariant or stage failure, 2 input error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import report_svg
from .config import RunConfig, load_config
from .diary import DiaryCorpus, diary_minutes, parse_diary_corpus, write_diary_corpus, write_lexicons
from .embedding import write_embedding_csv, write_kl_trace_csv
from .errors import (
    CohortSynthError,
    ConfigError,
    MalformedCsv,
    MissingClass,
    NoLargeClass,
    NonFiniteGradient,
    PerplexityTooLarge,
    TooFewClasses,
    UnknownCode,
)
from .featurize import FeatureSet
from .forest import save_forest
from .pipeline import ClassAssignment, class_summary, classify_corpus
from .planted import generate_planted_corpus, load_planted_spec
from .synth import read_sequences_csv, sequence_minutes, synthesize, write_sequences_csv
from .validate import (
    corpus_report,
    minute_profile,
    write_gini_profiles_csv,
    write_report_csv,
    write_scatter_csv,
)
from .windows import fit_cohort_model, load_model, save_model

_INPUT_ERRORS = (ConfigError, MalformedCsv, UnknownCode, MissingClass, FileNotFoundError)
_STAGE_ERRORS = (TooFewClasses, NoLargeClass, NonFiniteGradient, PerplexityTooLarge)


def _load_corpus(cfg: RunConfig) -> DiaryCorpus:
    for p in (cfg.paths.activities, cfg.paths.demographics, cfg.paths.lexicons):
        if not Path(p).exists():
            raise ConfigError(f"corpus file {p} does not exist")
    return parse_diary_corpus(cfg.paths.activities, cfg.paths.demographics, cfg.paths.lexicons)


def _feature_sets(args) -> list[FeatureSet]:
    if args.feature_set:
        return [FeatureSet(args.feature_set)]
    return [FeatureSet.DEMOGRAPHIC_ONLY, FeatureSet.DEMOGRAPHIC_PLUS_ACTIVITY]


def cmd_plant(cfg: RunConfig) -> int:
    if cfg.paths.planted_spec is None:
        raise ConfigError("config paths must include planted_spec for the plant command")
    if not cfg.paths.planted_spec.exists():
        raise ConfigError(f"planted spec {cfg.paths.planted_spec} does not exist")
    spec = load_planted_spec(cfg.paths.planted_spec)
    corpus, truth = generate_planted_corpus(spec)
    cfg.paths.activities.parent.mkdir(parents=True, exist_ok=True)
    cfg.paths.demographics.parent.mkdir(parents=True, exist_ok=True)
    cfg.paths.lexicons.parent.mkdir(parents=True, exist_ok=True)
    write_diary_corpus(corpus, cfg.paths.activities, cfg.paths.demographics)
    write_lexicons(corpus.activity_lexicon, corpus.location_lexicon, cfg.paths.lexicons)
    truth_path = cfg.paths.activities.parent / "truth_labels.csv"
    with open(truth_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["case_id", "archetype"])
        for case_id in corpus.case_ids():
            writer.writerow([case_id, truth[case_id]])
    print(f"planted {len(corpus)} diaries across {len(spec.archetypes)} archetypes")
    print(f"wrote {cfg.paths.activities}, {cfg.paths.demographics}, {truth_path}")
    return 0


def _write_classes_csv(assignment: ClassAssignment, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["case_id", "label", "stage"])
        for stage in ("dbscan", "propagate", "merge"):
            labels = assignment.stage_trace[stage]
            for case_id, label in zip(assignment.case_ids, labels):
                writer.writerow([case_id, int(label), stage])


def read_classes_csv(path, stage: str = "merge") -> dict[str, int]:
    labels: dict[str, int] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            if row["stage"] == stage:
                labels[row["case_id"]] = int(row["label"])
    if not labels:
        raise MalformedCsv(0, f"no rows for stage {stage!r} in {path}")
    return labels


def cmd_classify(cfg: RunConfig, args) -> int:
    corpus = _load_corpus(cfg)
    for feature_set in _feature_sets(args):
        params = cfg.pipeline_params(feature_set)
        assignment = classify_corpus(corpus, params)
        out = cfg.paths.out_dir / "classify" / feature_set.value
        out.mkdir(parents=True, exist_ok=True)
        _write_classes_csv(assignment, out / "classes.csv")
        write_embedding_csv(assignment.case_ids, assignment.coords, out / "embedding.csv")
        write_kl_trace_csv(assignment.coords, out / "kl_trace.csv")
        save_forest(assignment.embed_forest, out / "forest_embedding.json")
        save_forest(assignment.final_classifier, out / "forest_classifier.json")
        summary = class_summary(assignment, corpus)
        (out / "summary.json").write_text(
            json.dumps(
                {
                    "feature_set": feature_set.value,
                    "n_classes": summary.n_classes,
                    "sizes": list(summary.sizes),
                    "median_size": summary.median_size,
                    "max_size": summary.max_size,
                    "classes": [
                        {"class_id": c.class_id, "size": c.size, "dominant_major": c.dominant_major}
                        for c in summary.classes
                    ],
                },
                indent=2,
                sort_keys=True,
            )
            + "\n",
            encoding="utf-8",
        )
        (out / "params.json").write_text(_params_json(params), encoding="utf-8")
        sizes = assignment.class_sizes()
        print(
            f"{feature_set.value}: {summary.n_classes} classes, "
            f"median size {summary.median_size:.0f}, max {summary.max_size}, "
            f"min {min(sizes.values())}"
        )
    return 0


def _params_json(params) -> str:
    payload = {
        "feature_set": params.feature_set.value,
        "n_trees": params.n_trees,
        "embed_depth": params.embed_depth,
        "dbscan": {"eps": params.dbscan_params().eps, "min_pts": params.dbscan_params().min_pts},
        "propagate_depth": params.propagate_depth,
        "merge_cutoff": params.merge_cutoff,
        "classifier_trees": params.n_classifier_trees(),
        "tsne": {
            "perplexity": params.tsne.perplexity,
            "iters": params.tsne.iters,
            "learning_rate": params.tsne.learning_rate,
            "early_exaggeration": params.tsne.early_exaggeration,
        },
        "seed": params.seed,
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _classes_path(cfg: RunConfig, feature_set: FeatureSet) -> Path:
    return cfg.paths.out_dir / "classify" / feature_set.value / "classes.csv"


def _fit_feature_set(cfg: RunConfig, args) -> FeatureSet:
    if getattr(args, "feature_set", None):
        return FeatureSet(args.feature_set)
    return FeatureSet(cfg.fit.assignment)


def _class_diaries(cfg: RunConfig, feature_set: FeatureSet, corpus: DiaryCorpus) -> dict[int, list]:
    classes_path = _classes_path(cfg, feature_set)
    if not classes_path.exists():
        raise ConfigError(f"classes file {classes_path} does not exist; run classify first")
    labels = read_classes_csv(classes_path)
    diaries = {d.case_id: d for d in corpus.diaries}
    by_class: dict[int, list] = {}
    for case_id, label in labels.items():
        by_class.setdefault(label, []).append(diaries[case_id])
    return dict(sorted(by_class.items()))


def cmd_fit(cfg: RunConfig, args) -> int:
    corpus = _load_corpus(cfg)
    feature_set = _fit_feature_set(cfg, args)
    by_class = _class_diaries(cfg, feature_set, corpus)
    out = cfg.paths.out_dir / "models"
    out.mkdir(parents=True, exist_ok=True)
    for label, diaries in by_class.items():
        model = fit_cohort_model(
            diaries,
            class_id=label,
            k_max=cfg.fit.k_max,
            seed=cfg.seed,
            travel_code=cfg.fit.travel_code,
        )
        save_model(model, out / f"cohort_model_{label}.json")
    print(f"fit {len(by_class)} cohort models ({feature_set.value} classes) into {out}")
    return 0


def cmd_synth(cfg: RunConfig, args) -> int:
    models_dir = cfg.paths.out_dir / "models"
    model_paths = sorted(models_dir.glob("cohort_model_*.json"))
    if not model_paths:
        raise ConfigError(f"no cohort models under {models_dir}; run fit first")
    out = cfg.paths.out_dir / "synth"
    out.mkdir(parents=True, exist_ok=True)
    sequences = {}
    for path in model_paths:
        model = load_model(path)
        seqs = synthesize(model, n=cfg.synthesis.n_per_class, seed=cfg.seed)
        sequences[model.class_id] = seqs
        report_svg.sequence_heatmap_svg(
            [sequence_minutes(s) for s in seqs],
            out / f"heatmap_class_{model.class_id}.svg",
        )
    write_sequences_csv(sequences, out / "sequences.csv")
    total = sum(len(s) for s in sequences.values())
    print(f"synthesized {total} sequences for {len(sequences)} classes into {out}")
    return 0


def cmd_validate(cfg: RunConfig, args) -> int:
    corpus = _load_corpus(cfg)
    feature_set = _fit_feature_set(cfg, args)
    by_class = _class_diaries(cfg, feature_set, corpus)
    seq_path = cfg.paths.out_dir / "synth" / "sequences.csv"
    if not seq_path.exists():
        raise ConfigError(f"sequences file {seq_path} does not exist; run synth first")
    synth_sets = read_sequences_csv(seq_path)

    real_by_class = {}
    synth_by_class = {}
    for label, diaries in by_class.items():
        real_by_class[label] = [diary_minutes(d) for d in diaries]
    for label, seq_lists in synth_sets.items():
        minutes = []
        for acts in seq_lists:
            row = []
            for a in acts:
                row.extend([a.code] * a.duration_min)
            minutes.append(row)
        limit = cfg.validation.n_synth
        synth_by_class[label] = minutes if limit is None else minutes[:limit]

    reports, aggregate = corpus_report(real_by_class, synth_by_class)
    out = cfg.paths.out_dir / "validate"
    out.mkdir(parents=True, exist_ok=True)
    write_report_csv(reports, out / "report.csv")
    write_scatter_csv(reports, out / "scatter.csv")
    report_svg.similarity_scatter_svg(reports, out / "scatter.svg")
    profiles = {
        label: (minute_profile(real_by_class[label]), minute_profile(synth_by_class[label]))
        for label in real_by_class
    }
    write_gini_profiles_csv(profiles, out / "gini_profiles.csv")
    print(f"classes: {aggregate['n_classes']}")
    print(f"fraction with both metrics > 0.8: {aggregate['fraction_both_above_0.8']:.3f}")
    print(f"fraction with both metrics > 0.6: {aggregate['fraction_both_above_0.6']:.3f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cohort-synth",
        description="Cohort classification of activity diaries and Monte Carlo sequence synthesis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("plant", "generate a planted-archetype corpus with truth labels"),
        ("classify", "run the classification pipeline for each feature set"),
        ("fit", "fit one probabilistic activity model per class"),
        ("synth", "generate synthetic sequences from the fitted models"),
        ("validate", "compare real and synthetic sequences per class"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to run.json")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--threads", type=int, default=None, help="worker pool cap")
        p.add_argument(
            "--feature-set",
            choices=[fs.value for fs in FeatureSet],
            default=None,
            help="restrict to one feature set",
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed_override=args.seed, threads_override=args.threads)
        if args.command == "plant":
            return cmd_plant(cfg)
        if args.command == "classify":
            return cmd_classify(cfg, args)
        if args.command == "fit":
            return cmd_fit(cfg, args)
        if args.command == "synth":
            return cmd_synth(cfg, args)
        if args.command == "validate":
            return cmd_validate(cfg, args)
        raise ConfigError(f"unknown command {args.command}")
    except _INPUT_ERRORS as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except _STAGE_ERRORS as err:
        print(f"stage failure ({type(err).__name__}): {err}", file=sys.stderr)
        return 1
    except CohortSynthError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
