"""Run configuration: one JSON file drives the whole pipeline.

Seeds are mandatory and explicit; there is no wall-clock fallback, so every
command is rerunnable to byte-identical outputs.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .clustering import DbscanParams
from .diary import DEMOGRAPHIC_FIELDS
from .embedding import TsneParams
from .errors import ConfigError
from .featurize import FeatureSet
from .pipeline import PipelineParams
from .windows import DEFAULT_TRAVEL_CODE


@dataclass(frozen=True)
class RunPaths:
    activities: Path
    demographics: Path
    lexicons: Path
    out_dir: Path
    planted_spec: Path | None = None


@dataclass(frozen=True)
class FitConfig:
    k_max: int = 8
    travel_code: int = DEFAULT_TRAVEL_CODE
    assignment: str = "activity"  # which classification's labels to model


@dataclass(frozen=True)
class SynthesisConfig:
    n_per_class: int = 100
    default_travel_min: float = 15.0


@dataclass(frozen=True)
class ValidationConfig:
    n_synth: int | None = None  # None -> one synthetic sequence per real diary


@dataclass(frozen=True)
class RunConfig:
    seed: int
    paths: RunPaths
    pipeline: dict = field(default_factory=dict)  # raw per-run pipeline overrides
    dbscan: dict = field(default_factory=dict)  # per feature set: {"activity": {eps, min_pts}}
    tsne: TsneParams = field(default_factory=TsneParams)
    fit: FitConfig = field(default_factory=FitConfig)
    synthesis: SynthesisConfig = field(default_factory=SynthesisConfig)
    validation: ValidationConfig = field(default_factory=ValidationConfig)
    threads: int = 1

    def pipeline_params(self, feature_set: FeatureSet) -> PipelineParams:
        raw = dict(self.pipeline)
        db = self.dbscan.get(feature_set.value)
        return PipelineParams(
            feature_set=feature_set,
            n_trees=int(raw.get("n_trees", 2000)),
            embed_depth=int(raw.get("embed_depth", 5)),
            dbscan=DbscanParams(float(db["eps"]), int(db["min_pts"])) if db else None,
            propagate_depth=int(raw.get("propagate_depth", 8)),
            merge_cutoff=int(raw.get("merge_cutoff", 25)),
            classifier_trees=(
                int(raw["classifier_trees"]) if raw.get("classifier_trees") is not None else None
            ),
            tsne=self.tsne,
            demographic_vars=tuple(raw.get("demographic_vars", DEMOGRAPHIC_FIELDS)),
            seed=self.seed,
            threads=self.threads,
        )


def _require(raw: dict, key: str) -> object:
    if key not in raw:
        raise ConfigError(f"config is missing the required key {key!r}")
    return raw[key]


def load_config(path, seed_override: int | None = None, threads_override: int | None = None) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise ConfigError(f"config {path} is not valid JSON: {err}") from None

    seed = seed_override if seed_override is not None else raw.get("seed")
    if seed is None:
        raise ConfigError("config must set an explicit seed (no wall-clock default)")

    paths_raw = _require(raw, "paths")
    base = path.parent

    def resolve(key: str, required: bool = True) -> Path | None:
        value = paths_raw.get(key)
        if value is None:
            if required:
                raise ConfigError(f"config paths must include {key!r}")
            return None
        return (base / value).resolve()

    paths = RunPaths(
        activities=resolve("activities"),
        demographics=resolve("demographics"),
        lexicons=resolve("lexicons"),
        out_dir=resolve("out_dir"),
        planted_spec=resolve("planted_spec", required=False),
    )

    if threads_override is not None:
        threads = threads_override
    elif raw.get("threads") is not None:
        threads = int(raw["threads"])
    else:
        threads = int(os.environ.get("COHORT_SYNTH_THREADS", "1"))

    tsne_raw = raw.get("tsne", {})
    tsne = TsneParams(**{k: v for k, v in tsne_raw.items()})

    fit_raw = raw.get("fit", {})
    synth_raw = raw.get("synthesis", {})
    val_raw = raw.get("validation", {})
    return RunConfig(
        seed=int(seed),
        paths=paths,
        pipeline=dict(raw.get("pipeline", {})),
        dbscan=dict(raw.get("dbscan", {})),
        tsne=tsne,
        fit=FitConfig(
            k_max=int(fit_raw.get("k_max", 8)),
            travel_code=int(fit_raw.get("travel_code", DEFAULT_TRAVEL_CODE)),
            assignment=str(fit_raw.get("assignment", "activity")),
        ),
        synthesis=SynthesisConfig(
            n_per_class=int(synth_raw.get("n_per_class", 100)),
            default_travel_min=float(synth_raw.get("default_travel_min", 15.0)),
        ),
        validation=ValidationConfig(
            n_synth=int(val_raw["n_synth"]) if val_raw.get("n_synth") is not None else None,
        ),
        threads=threads,
    )
