"""Staged pipeline with file artifacts and a digest-checked manifest.

Every stage reads files, writes files, and appends one manifest line
recording the digests of its configuration, inputs and outputs. Re-running
a stage whose digests are all unchanged is a verified no-op; running a
stage whose upstream artifact changed on disk fails with a stale-artifact
error instead of silently mixing generations. Because the handoffs are
plain files, any stage can be replaced by an external tool's output (a real
NER's lexicon, a fine-tuned model's prediction table, ...).
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from . import builder as builder_mod
from .corpus import CorpusConfig, load_corpus, normalize_text
from .errors import (
    ConfigError,
    DependencyError,
    StageError,
    StaleArtifactError,
)
from .features import (
    AggregateFeatures,
    YearlyFeatures,
    compute_features,
    fuse,
    read_feature_dump,
    write_feature_dump,
)
from .forest import ForestHyperparams, load_model, predict, save_model, train_forest
from .metrics import evaluate
from .ontology import (
    export_cso_triples,
    parse_ontology,
    serialize_draft,
    serialize_ontology,
)
from .providers import (
    HashingEmbedder,
    RemoteEmbedder,
    RemotePredictionProvider,
    TablePredictionProvider,
)
from .relations import RelationClass, check_split_integrity, load_triples, make_splits, save_triples
from .topic_index import (
    CandidateFilterConfig,
    OccurrenceStats,
    TopicLexicon,
    build_matcher,
    count_occurrences,
    filter_candidates,
    select_related_topics,
)

STAGES = ("index", "features", "split", "train", "predict", "build", "export", "eval")

MANIFEST_NAME = "manifest.jsonl"

ARTIFACTS = {
    "stats": "stats.bin",
    "corpus_report": "corpus_report.json",
    "filtered_lexicon": "filtered_lexicon.tsv",
    "occurrences": "occurrences.tsv",
    "pairs": "pairs.tsv",
    "selected": "selected_topics.tsv",
    "features": "features.tsv",
    "split_train": "split_train.tsv",
    "split_validation": "split_validation.tsv",
    "split_test": "split_test.tsv",
    "split_report": "split_report.json",
    "model": "model.json",
    "predictions": "predictions.tsv",
    "draft": "draft.json",
    "ontology": "ontology.json",
    "audit": "audit.json",
    "verdicts": "verdicts.tsv",
    "removed_edges": "removed_edges.tsv",
    "labels_df": "labels_df.tsv",
    "triples": "triples.tsv",
    "eval_report": "eval_report.json",
}

# environment overrides are honored for provider endpoints only
ENV_LM_ENDPOINT = "ONTOGEN_LM_ENDPOINT"
ENV_EMBEDDING_ENDPOINT = "ONTOGEN_EMBEDDING_ENDPOINT"


@dataclass
class PipelineConfig:
    corpus_path: str = ""
    lexicon_path: str = ""
    english_only: bool = True
    reference_year: int = 2024
    window_years: int = 10

    allowlist: list[str] = field(default_factory=list)
    denylist: list[str] = field(default_factory=list)
    generic_df_ratio: float = 0.2
    min_doc_freq: int = 1
    debug_exports: bool = True

    feature_mode: str = "aggregate"  # or "yearly"
    feature_unit: str = "doc_freq"  # or "mentions"

    hyperparams: ForestHyperparams = field(default_factory=ForestHyperparams)
    seed: int = 0

    lm_kind: str = "none"  # none | table | remote
    lm_table_path: str = ""
    lm_endpoint: str = ""
    lm_on_missing: str = "feature_only"
    lm_timeout: float = 10.0
    lm_retries: int = 3
    lm_backoff_base: float = 0.25

    embedding_kind: str = "hashing"  # hashing | remote
    embedding_dim: int = 256
    embedding_endpoint: str = ""
    similarity_threshold: float = 0.85

    predict_source: str = "model"  # model | table
    predict_table_path: str = ""

    root: str = ""
    k: int = 500
    max_depth: int | None = None
    max_nodes: int | None = None
    review_mode: bool = True
    selection_path: str = ""  # optional expert-filtered topic list

    triples_path: str = ""
    split_fractions: tuple[float, float, float] = (0.70, 0.10, 0.20)
    train_features_path: str = ""  # external per-pair feature table; default: features artifact

    out_dir: str = "out"

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        config = cls()
        flat = dict(doc)
        hp = flat.pop("hyperparams", None)
        if hp is not None:
            config.hyperparams = ForestHyperparams.from_dict(hp)
        fractions = flat.pop("split_fractions", None)
        if fractions is not None:
            config.split_fractions = tuple(fractions)
        for key, value in flat.items():
            if not hasattr(config, key):
                raise ConfigError(f"unknown config key: {key!r}")
            setattr(config, key, value)
        if os.environ.get(ENV_LM_ENDPOINT):
            config.lm_endpoint = os.environ[ENV_LM_ENDPOINT]
        if os.environ.get(ENV_EMBEDDING_ENDPOINT):
            config.embedding_endpoint = os.environ[ENV_EMBEDDING_ENDPOINT]
        return config

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        return cls.from_dict(doc)

    # -- derived values ------------------------------------------------------

    def window(self) -> tuple[int, int]:
        return (self.reference_year - self.window_years + 1, self.reference_year)

    def out(self, artifact: str) -> Path:
        return Path(self.out_dir) / ARTIFACTS[artifact]

    def corpus_config(self) -> CorpusConfig:
        return CorpusConfig(
            english_only=self.english_only,
            window_years=self.window_years,
            reference_year=self.reference_year,
        )

    def filter_config(self) -> CandidateFilterConfig:
        return CandidateFilterConfig(
            allowlist=set(self.allowlist),
            denylist=set(self.denylist),
            generic_df_ratio=self.generic_df_ratio,
            min_doc_freq=self.min_doc_freq,
        )

    def lm_provider(self):
        if self.lm_kind == "none":
            return None
        if self.lm_kind == "table":
            if not self.lm_table_path:
                raise ConfigError("lm_kind is 'table' but lm_table_path is empty")
            return TablePredictionProvider(self.lm_table_path, on_missing=self.lm_on_missing)
        if self.lm_kind == "remote":
            if not self.lm_endpoint:
                raise ConfigError("lm_kind is 'remote' but lm_endpoint is empty")
            return RemotePredictionProvider(
                self.lm_endpoint,
                timeout=self.lm_timeout,
                retries=self.lm_retries,
                backoff_base=self.lm_backoff_base,
            )
        raise ConfigError(f"unknown lm_kind: {self.lm_kind!r}")

    def embedder(self):
        if self.embedding_kind == "hashing":
            return HashingEmbedder(dim=self.embedding_dim)
        if self.embedding_kind == "remote":
            if not self.embedding_endpoint:
                raise ConfigError("embedding_kind is 'remote' but embedding_endpoint is empty")
            return RemoteEmbedder(self.embedding_endpoint)
        raise ConfigError(f"unknown embedding_kind: {self.embedding_kind!r}")

    def stage_config(self, stage: str) -> dict:
        """The slice of the configuration a stage's output depends on."""
        common: dict = {}
        if stage == "index":
            common = {
                "english_only": self.english_only,
                "reference_year": self.reference_year,
                "window_years": self.window_years,
                "allowlist": sorted(self.allowlist),
                "denylist": sorted(self.denylist),
                "generic_df_ratio": self.generic_df_ratio,
                "min_doc_freq": self.min_doc_freq,
                "debug_exports": self.debug_exports,
            }
        elif stage == "features":
            common = {
                "feature_mode": self.feature_mode,
                "feature_unit": self.feature_unit,
                "root": self.root,
                "k": self.k,
                "lm_kind": self.lm_kind,
                "lm_table_path": self.lm_table_path,
                "lm_endpoint": self.lm_endpoint,
                "lm_on_missing": self.lm_on_missing,
                "selection_path": self.selection_path,
            }
        elif stage == "split":
            common = {
                "triples_path": self.triples_path,
                "split_fractions": list(self.split_fractions),
                "seed": self.seed,
            }
        elif stage == "train":
            common = {
                "hyperparams": self.hyperparams.to_dict(),
                "seed": self.seed,
                "train_features_path": self.train_features_path,
                "lm_kind": self.lm_kind,
                "lm_table_path": self.lm_table_path,
            }
        elif stage == "predict":
            common = {
                "predict_source": self.predict_source,
                "predict_table_path": self.predict_table_path,
            }
        elif stage == "build":
            common = {
                "root": self.root,
                "max_depth": self.max_depth,
                "max_nodes": self.max_nodes,
                "review_mode": self.review_mode,
                "similarity_threshold": self.similarity_threshold,
                "embedding_kind": self.embedding_kind,
                "embedding_dim": self.embedding_dim,
                "embedding_endpoint": self.embedding_endpoint,
            }
        elif stage == "export":
            common = {}
        elif stage == "eval":
            common = {
                "train_features_path": self.train_features_path,
                "lm_kind": self.lm_kind,
                "lm_table_path": self.lm_table_path,
            }
        else:
            raise ConfigError(f"unknown stage: {stage!r}")
        return common


# -- manifest -----------------------------------------------------------------


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def config_digest(stage_config: dict) -> str:
    return hashlib.sha256(
        json.dumps(stage_config, sort_keys=True).encode("utf-8")
    ).hexdigest()


def read_manifest(out_dir: str | Path) -> list[dict]:
    path = Path(out_dir) / MANIFEST_NAME
    if not path.is_file():
        return []
    entries = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            entries.append(json.loads(line))
    return entries


def last_entry(entries: list[dict], stage: str) -> dict | None:
    for entry in reversed(entries):
        if entry["stage"] == stage:
            return entry
    return None


def append_manifest(out_dir: str | Path, entry: dict) -> None:
    path = Path(out_dir) / MANIFEST_NAME
    with path.open("a", encoding="utf-8") as fh:
        fh.write(json.dumps(entry, sort_keys=True) + "\n")


# written by the review service after the pipeline finished; not stage outputs
SERVICE_FILES = {"edits.jsonl", "curated_ontology.json", "curated_triples.tsv"}


def audit_outputs(out_dir: str | Path) -> list[str]:
    """Orphan files under out_dir that no manifest entry accounts for."""
    out_dir = Path(out_dir)
    known = {MANIFEST_NAME} | SERVICE_FILES
    for entry in read_manifest(out_dir):
        known.update(Path(p).name for p in entry["outputs"])
        known.update(Path(p).name for p in entry["inputs"])
    orphans = []
    for path in sorted(out_dir.iterdir()):
        if path.is_file() and path.name not in known and not path.name.startswith("."):
            orphans.append(path.name)
    return orphans


@dataclass
class StageResult:
    stage: str
    outputs: dict[str, str]  # path -> digest
    skipped: bool
    wall_time_s: float


def _require_external(path: str, what: str) -> Path:
    if not path:
        raise ConfigError(f"{what} is not configured")
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"{what} does not exist: {path}")
    return p


def _check_upstream(config: PipelineConfig, artifacts: Iterable[str]) -> dict[str, str]:
    """Verify upstream artifacts exist and still match their manifest digests."""
    entries = read_manifest(config.out_dir)
    digests: dict[str, str] = {}
    for name in artifacts:
        path = config.out(name)
        if not path.is_file():
            raise DependencyError(f"missing upstream artifact: {path}")
        current = file_digest(path)
        recorded = None
        for entry in entries:
            if str(path) in entry["outputs"]:
                recorded = entry["outputs"][str(path)]
        if recorded is not None and recorded != current:
            raise StaleArtifactError(
                f"stale upstream artifact: {path} changed since it was produced"
            )
        digests[str(path)] = current
    return digests


def run_stage(stage: str, config: PipelineConfig) -> StageResult:
    if stage not in STAGES:
        raise ConfigError(f"unknown stage: {stage!r} (expected one of {', '.join(STAGES)})")
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    runner = globals()[f"_stage_{stage}"]
    inputs = runner.collect_inputs(config)

    cfg_digest = config_digest(config.stage_config(stage))
    entries = read_manifest(out_dir)
    previous = last_entry(entries, stage)
    if previous and previous["config_digest"] == cfg_digest and previous["inputs"] == inputs:
        outputs = previous["outputs"]
        if all(
            Path(p).is_file() and file_digest(p) == digest for p, digest in outputs.items()
        ):
            return StageResult(stage, outputs, skipped=True, wall_time_s=0.0)

    started = time.monotonic()
    try:
        output_paths = runner(config)
    except (ConfigError, DependencyError):
        raise
    except Exception as exc:
        raise StageError(f"stage {stage!r} failed: {exc}") from exc
    wall = time.monotonic() - started

    outputs = {str(p): file_digest(p) for p in output_paths}
    append_manifest(
        out_dir,
        {
            "stage": stage,
            "config_digest": cfg_digest,
            "inputs": inputs,
            "outputs": outputs,
            "wall_time_s": round(wall, 6),
        },
    )
    orphans = audit_outputs(out_dir)
    if orphans:
        raise StageError(f"post-run audit found orphan files in {out_dir}: {orphans}")
    return StageResult(stage, outputs, skipped=False, wall_time_s=wall)


def _stage(collect_inputs):
    """Attach an input-collector to a stage runner."""

    def wrap(fn):
        fn.collect_inputs = collect_inputs
        return fn

    return wrap


# -- index ---------------------------------------------------------------------


def _index_inputs(config: PipelineConfig) -> dict[str, str]:
    corpus = _require_external(config.corpus_path, "corpus_path")
    lexicon = _require_external(config.lexicon_path, "lexicon_path")
    return {str(corpus): file_digest(corpus), str(lexicon): file_digest(lexicon)}


@_stage(_index_inputs)
def _stage_index(config: PipelineConfig) -> list[Path]:
    lexicon = TopicLexicon.load(config.lexicon_path)
    records, report = load_corpus(config.corpus_path, config.corpus_config())
    matcher = build_matcher(lexicon)
    stats = count_occurrences(records, matcher, config.window(), lexicon.ids())
    filtered = filter_candidates(stats, lexicon, config.filter_config())

    stats_path = config.out("stats")
    stats.save(stats_path, lexicon_digest=lexicon.digest())
    report_path = config.out("corpus_report")
    report_path.write_text(
        json.dumps(report.__dict__, indent=2, sort_keys=True), encoding="utf-8"
    )
    filtered_path = config.out("filtered_lexicon")
    filtered.save(filtered_path)
    outputs = [stats_path, report_path, filtered_path]
    if config.debug_exports:
        occ_path, pair_path = config.out("occurrences"), config.out("pairs")
        stats.export_occurrences(occ_path)
        stats.export_pairs(pair_path)
        outputs += [occ_path, pair_path]
    return outputs


# -- features -------------------------------------------------------------------


def _features_inputs(config: PipelineConfig) -> dict[str, str]:
    digests = _check_upstream(config, ["stats", "filtered_lexicon"])
    if config.selection_path:
        selection = _require_external(config.selection_path, "selection_path")
        digests[str(selection)] = file_digest(selection)
    if config.lm_kind == "table":
        table = _require_external(config.lm_table_path, "lm_table_path")
        digests[str(table)] = file_digest(table)
    return digests


@_stage(_features_inputs)
def _stage_features(config: PipelineConfig) -> list[Path]:
    if not config.root:
        raise ConfigError("features stage needs a root topic")
    lexicon = TopicLexicon.load(config.out("filtered_lexicon"))
    stats = OccurrenceStats.load(config.out("stats"))
    labels = lexicon.labels_by_id()
    root_id = _resolve_root(config.root, lexicon, stats)

    if config.selection_path:
        wanted = {
            normalize_text(line)
            for line in Path(config.selection_path).read_text(encoding="utf-8").splitlines()
            if line.strip()
        }
        by_label = {label: tid for tid, label in labels.items()}
        missing = sorted(w for w in wanted if w not in by_label)
        if missing:
            raise StageError(f"selection file names unknown topics: {missing}")
        selected = sorted(by_label[w] for w in wanted if by_label[w] != root_id)
    else:
        selected = select_related_topics(
            stats, root_id, config.k, labels=labels, candidates=lexicon.ids()
        )

    selected_path = config.out("selected")
    with selected_path.open("w", encoding="utf-8") as fh:
        for tid in selected:
            fh.write(f"{tid}\t{labels.get(tid, tid)}\n")

    provider = config.lm_provider()
    topic_ids = [root_id] + [t for t in selected if t != root_id]
    rows = []
    for a in topic_ids:
        for b in topic_ids:
            if a == b:
                continue
            numeric = compute_features(
                (a, b), stats, mode=config.feature_mode, unit=config.feature_unit
            )
            lm = provider((labels.get(a, a), labels.get(b, b))) if provider else None
            rows.append((labels.get(a, a), labels.get(b, b), numeric, lm))
    features_path = config.out("features")
    write_feature_dump(features_path, rows)
    return [selected_path, features_path]


def _resolve_root(root: str, lexicon: TopicLexicon, stats: OccurrenceStats) -> str:
    root_label = normalize_text(root)
    for entry in lexicon:
        if entry.label == root_label or entry.topic_id == root:
            return entry.topic_id
    if root in stats or root_label in stats:
        return root if root in stats else root_label
    raise StageError(f"root topic {root!r} not found in the lexicon")


# -- split ----------------------------------------------------------------------


def _split_inputs(config: PipelineConfig) -> dict[str, str]:
    triples = _require_external(config.triples_path, "triples_path")
    return {str(triples): file_digest(triples)}


@_stage(_split_inputs)
def _stage_split(config: PipelineConfig) -> list[Path]:
    triples = load_triples(config.triples_path)
    split = make_splits(triples, config.split_fractions, seed=config.seed)
    paths = []
    for name, part in split.parts().items():
        path = config.out(f"split_{name}")
        save_triples(part, path)
        paths.append(path)
    violations = check_split_integrity(split)
    report_path = config.out("split_report")
    report_path.write_text(
        json.dumps(
            {
                "sizes": {name: len(part) for name, part in split.parts().items()},
                "seed": config.seed,
                "violations": len(violations),
            },
            indent=2,
            sort_keys=True,
        ),
        encoding="utf-8",
    )
    paths.append(report_path)
    return paths


# -- train / eval -----------------------------------------------------------------


def _features_table(config: PipelineConfig) -> dict[tuple[str, str], tuple]:
    """Per-pair numeric features + optional LM class, keyed by normalized pair."""
    path = config.train_features_path or config.out("features")
    if not Path(path).is_file():
        raise DependencyError(f"feature table not found: {path}")
    table = {}
    for a, b, numeric, lm in read_feature_dump(path):
        table[(normalize_text(a), normalize_text(b))] = (numeric, lm)
    return table


def _numeric_from_flat(values: tuple[float, ...]):
    if len(values) == 4:
        return AggregateFeatures(int(values[0]), int(values[1]), int(values[2]), values[3])
    blocks = tuple(
        AggregateFeatures(int(values[i]), int(values[i + 1]), int(values[i + 2]), values[i + 3])
        for i in range(0, len(values), 4)
    )
    return YearlyFeatures(blocks)


def _dataset_for(config: PipelineConfig, split_name: str):
    triples = load_triples(config.out(f"split_{split_name}"))
    table = _features_table(config)
    provider = config.lm_provider()
    dataset = []
    for t in triples:
        key = (normalize_text(t.topic_a), normalize_text(t.topic_b))
        if key not in table:
            raise StageError(f"no features for pair {key!r} in the feature table")
        numeric_flat, lm = table[key]
        numeric = _numeric_from_flat(numeric_flat)
        if provider is not None:
            lm = provider((t.topic_a, t.topic_b))
        dataset.append(((t.topic_a, t.topic_b), numeric, lm, t.relation))
    return dataset


def _train_inputs(config: PipelineConfig) -> dict[str, str]:
    digests = _check_upstream(config, ["split_train"])
    if config.train_features_path:
        table = _require_external(config.train_features_path, "train_features_path")
        digests[str(table)] = file_digest(table)
    else:
        digests.update(_check_upstream(config, ["features"]))
    if config.lm_kind == "table":
        table = _require_external(config.lm_table_path, "lm_table_path")
        digests[str(table)] = file_digest(table)
    return digests


@_stage(_train_inputs)
def _stage_train(config: PipelineConfig) -> list[Path]:
    rows = _dataset_for(config, "train")
    dataset = [(fuse(numeric, lm), rel) for _, numeric, lm, rel in rows]
    model = train_forest(dataset, config.hyperparams, seed=config.seed)
    model_path = config.out("model")
    save_model(model, model_path)
    return [model_path]


def _eval_inputs(config: PipelineConfig) -> dict[str, str]:
    digests = _check_upstream(config, ["model", "split_test"])
    if config.train_features_path:
        table = _require_external(config.train_features_path, "train_features_path")
        digests[str(table)] = file_digest(table)
    if config.lm_kind == "table":
        table = _require_external(config.lm_table_path, "lm_table_path")
        digests[str(table)] = file_digest(table)
    return digests


@_stage(_eval_inputs)
def _stage_eval(config: PipelineConfig) -> list[Path]:
    model = load_model(config.out("model"))
    rows = _dataset_for(config, "test")
    testset = [(pair, numeric, rel) for pair, numeric, _, rel in rows]
    lm_by_pair = {pair: lm for pair, _, lm, _ in rows}
    report = evaluate(model, testset, lm_provider=lambda pair: lm_by_pair.get(pair))
    report_path = config.out("eval_report")
    report.save(report_path)
    return [report_path]


# -- predict -----------------------------------------------------------------------


def _predict_inputs(config: PipelineConfig) -> dict[str, str]:
    if config.predict_source == "table":
        table = _require_external(config.predict_table_path, "predict_table_path")
        return {str(table): file_digest(table)}
    if config.predict_source == "model":
        return _check_upstream(config, ["model", "features"])
    raise ConfigError(f"unknown predict_source: {config.predict_source!r}")


@_stage(_predict_inputs)
def _stage_predict(config: PipelineConfig) -> list[Path]:
    predictions_path = config.out("predictions")
    lines = []
    if config.predict_source == "table":
        with Path(config.predict_table_path).open("r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise StageError(
                        f"prediction table line {line_no}: expected 3 tab-separated fields"
                    )
                rel = RelationClass.parse(parts[2])
                lines.append((normalize_text(parts[0]), normalize_text(parts[1]), rel.value))
    else:
        model = load_model(config.out("model"))
        for a, b, numeric_flat, lm in read_feature_dump(config.out("features")):
            vector = fuse(_numeric_from_flat(numeric_flat), lm)
            pred = predict(model, vector, pair=(a, b))
            lines.append((a, b, pred.predicted.value))
    lines.sort()
    with predictions_path.open("w", encoding="utf-8") as fh:
        for a, b, rel in lines:
            fh.write(f"{a}\t{b}\t{rel}\n")
    return [predictions_path]


# -- build -----------------------------------------------------------------------


def _build_inputs(config: PipelineConfig) -> dict[str, str]:
    return _check_upstream(config, ["predictions", "stats", "filtered_lexicon"])


@_stage(_build_inputs)
def _stage_build(config: PipelineConfig) -> list[Path]:
    if not config.root:
        raise ConfigError("build stage needs a root topic")
    lexicon = TopicLexicon.load(config.out("filtered_lexicon"))
    stats = OccurrenceStats.load(config.out("stats"))
    labels = lexicon.labels_by_id()
    ids_by_label = {label: tid for tid, label in labels.items()}

    rows = []
    with config.out("predictions").open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            a, b, rel = line.split("\t")
            rows.append((a, b, RelationClass.parse(rel)))
    classified = builder_mod.ClassifiedPairSet.from_rows(rows)

    doc_freq = {label: stats.df(tid) for tid, label in labels.items()}

    def coocc(a: str, b: str) -> int:
        return stats.coocc(ids_by_label.get(a, a), ids_by_label.get(b, b))

    root_label = normalize_text(config.root)
    draft, onto, audit = builder_mod.build_ontology(
        classified,
        root=root_label,
        embedder=config.embedder(),
        doc_freq=doc_freq,
        coocc=coocc,
        similarity_threshold=config.similarity_threshold,
        review_mode=config.review_mode,
        max_depth=config.max_depth,
        max_nodes=config.max_nodes,
    )

    draft_path = config.out("draft")
    draft_path.write_text(serialize_draft(draft), encoding="utf-8")
    onto_path = config.out("ontology")
    onto_path.write_text(serialize_ontology(onto), encoding="utf-8")
    audit_path = config.out("audit")
    audit_path.write_text(
        json.dumps(audit.to_dict(), indent=2, sort_keys=True), encoding="utf-8"
    )
    verdicts_path = config.out("verdicts")
    with verdicts_path.open("w", encoding="utf-8") as fh:
        for v in audit.verdicts:
            sim = "" if v.similarity is None else repr(v.similarity)
            fh.write(f"{v.pair[0]}\t{v.pair[1]}\t{int(v.acronym_ok)}\t{sim}\t{v.status}\n")
    removed_path = config.out("removed_edges")
    with removed_path.open("w", encoding="utf-8") as fh:
        for r in audit.removed_edges:
            fh.write(f"{r.source}\t{r.target}\t{r.coocc}\t{' -> '.join(r.cycle)}\n")
    labels_df_path = config.out("labels_df")
    with labels_df_path.open("w", encoding="utf-8") as fh:
        for label in sorted(doc_freq):
            fh.write(f"{label}\t{doc_freq[label]}\n")
    return [draft_path, onto_path, audit_path, verdicts_path, removed_path, labels_df_path]


# -- export ----------------------------------------------------------------------


def _export_inputs(config: PipelineConfig) -> dict[str, str]:
    return _check_upstream(config, ["ontology"])


@_stage(_export_inputs)
def _stage_export(config: PipelineConfig) -> list[Path]:
    onto = parse_ontology(config.out("ontology").read_text(encoding="utf-8"))
    triples_path = config.out("triples")
    triples_path.write_text(export_cso_triples(onto), encoding="utf-8")
    return [triples_path]


# -- case study -------------------------------------------------------------------


def run_case_study(config: PipelineConfig):
    """index -> root-seeded selection + pairwise features -> predictions over
    both orderings -> consistency filter, expansion, same-as validation and
    clustering, cycle breaking -> serialized ontology and triple export.
    Returns the final Ontology."""
    for stage in ("index", "features", "predict", "build", "export"):
        run_stage(stage, config)
    return parse_ontology(config.out("ontology").read_text(encoding="utf-8"))
