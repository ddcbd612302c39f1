"""Random-forest relation classifier over fused feature vectors.

Hand-rolled rather than delegated to a library because the contract demands
things libraries don't promise: bit-identical serialized models for a given
(dataset, hyperparams, seed), per-tree seeds derived from the master seed so
serial and parallel training coincide, and a versioned, self-describing
model file that rejects unknown formats.

Trees use axis-aligned Gini splits over a random feature subset per node;
leaves store integer class histograms. Prediction averages per-tree leaf
distributions and breaks argmax ties by the fixed class order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ModelFormatError, PredictionError, TrainingError
from .features import FusedFeatureVector
from .relations import CLASS_INDEX, CLASS_ORDER, N_CLASSES, RelationClass

MODEL_FORMAT_VERSION = "ogforest-v1"


@dataclass(frozen=True)
class ForestHyperparams:
    n_trees: int = 200
    max_depth: int | None = None
    min_leaf: int = 1
    features_per_split: int | str = "sqrt"  # "sqrt" means ceil(sqrt(d))
    bootstrap: bool = True

    def to_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "min_leaf": self.min_leaf,
            "features_per_split": self.features_per_split,
            "bootstrap": self.bootstrap,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ForestHyperparams":
        return cls(**d)

    def resolve_features(self, n_features: int) -> int:
        if self.features_per_split == "sqrt":
            return min(n_features, math.ceil(math.sqrt(n_features)))
        m = int(self.features_per_split)
        if m < 1:
            raise TrainingError("features_per_split must be >= 1")
        return min(n_features, m)


@dataclass
class ForestModel:
    trees: list[dict]
    feature_schema_version: str
    n_features: int
    hyperparams: ForestHyperparams
    seed: int


@dataclass(frozen=True)
class RelationPrediction:
    probabilities: tuple[float, float, float, float]
    predicted: RelationClass
    pair: tuple[str, str] | None = None


def argmax_class(probabilities: Sequence[float]) -> RelationClass:
    """First maximum wins, so ties resolve in the fixed class order."""
    best = 0
    for i in range(1, len(probabilities)):
        if probabilities[i] > probabilities[best]:
            best = i
    return CLASS_ORDER[best]


def _best_split(X, yy, feats, n_classes, min_leaf, parent_gini):
    """Lowest weighted-Gini (feature, threshold) with both sides >= min_leaf
    and a strict impurity improvement; None when no usable split exists.
    Thresholds are actual sample values; rule is `value <= threshold`."""
    n = yy.size
    onehot = np.zeros((n, n_classes), dtype=np.float64)
    onehot[np.arange(n), yy] = 1.0
    best_w = parent_gini - 1e-12
    best = None
    for f in feats:
        vals = X[:, f]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        cum = np.cumsum(onehot[order], axis=0)
        total = cum[-1]
        cuts = np.arange(min_leaf, n - min_leaf + 1)  # candidate left sizes
        cuts = cuts[sv[cuts - 1] != sv[cuts]]
        if cuts.size == 0:
            continue
        left = cum[cuts - 1]
        nl = cuts.astype(np.float64)
        nr = n - nl
        gini_l = 1.0 - ((left / nl[:, None]) ** 2).sum(axis=1)
        gini_r = 1.0 - (((total - left) / nr[:, None]) ** 2).sum(axis=1)
        weighted = (nl * gini_l + nr * gini_r) / n
        j = int(np.argmin(weighted))
        if weighted[j] < best_w:
            best_w = float(weighted[j])
            best = (int(f), float(sv[cuts[j] - 1]))
    return best


def _grow_tree(X, y, n_classes, hp: ForestHyperparams, rng: np.random.Generator) -> dict:
    n = X.shape[0]
    sample = rng.integers(0, n, size=n) if hp.bootstrap else np.arange(n)
    m = hp.resolve_features(X.shape[1])
    root: dict = {}
    stack = [(root, sample, 0)]
    while stack:
        node, idx, depth = stack.pop()
        yy = y[idx]
        hist = np.bincount(yy, minlength=n_classes)
        gini = 1.0 - float(((hist / idx.size) ** 2).sum())
        at_depth_limit = hp.max_depth is not None and depth >= hp.max_depth
        if gini == 0.0 or at_depth_limit or idx.size < 2 * hp.min_leaf:
            node["leaf"] = [int(c) for c in hist]
            continue
        feats = rng.choice(X.shape[1], size=m, replace=False)
        split = _best_split(X[idx], yy, feats, n_classes, hp.min_leaf, gini)
        if split is None:
            node["leaf"] = [int(c) for c in hist]
            continue
        f, thr = split
        go_left = X[idx, f] <= thr
        node["f"] = f
        node["t"] = thr
        node["l"] = {}
        node["r"] = {}
        # push right first so the left branch is grown first (fixed rng order)
        stack.append((node["r"], idx[~go_left], depth + 1))
        stack.append((node["l"], idx[go_left], depth + 1))
    return root


def train_forest(
    dataset: Sequence[tuple[FusedFeatureVector, RelationClass]],
    hyperparams: ForestHyperparams | None = None,
    seed: int = 0,
) -> ForestModel:
    """Fully deterministic under (dataset, hyperparams, seed): per-tree rngs
    are seeded from the master seed, so the same call yields bit-identical
    serialized models, run after run."""
    if not dataset:
        raise TrainingError("empty training dataset")
    hp = hyperparams or ForestHyperparams()
    schema = dataset[0][0].schema_version
    for vec, _ in dataset:
        if vec.schema_version != schema:
            raise TrainingError(
                f"mixed feature schemas in training data: {vec.schema_version!r} != {schema!r}"
            )
    X = np.array([vec.flat() for vec, _ in dataset], dtype=np.float64)
    y = np.array([_class_idx(rel) for _, rel in dataset], dtype=np.int64)

    master = np.random.default_rng(seed)
    tree_seeds = master.integers(0, 2**63 - 1, size=hp.n_trees)
    trees = [
        _grow_tree(X, y, N_CLASSES, hp, np.random.default_rng(int(s))) for s in tree_seeds
    ]
    return ForestModel(
        trees=trees,
        feature_schema_version=schema,
        n_features=X.shape[1],
        hyperparams=hp,
        seed=seed,
    )


def _class_idx(rel: RelationClass) -> int:
    return CLASS_INDEX[rel]


def _leaf_distribution(tree: dict, x: Sequence[float]) -> np.ndarray:
    node = tree
    while "leaf" not in node:
        node = node["l"] if x[node["f"]] <= node["t"] else node["r"]
    hist = np.asarray(node["leaf"], dtype=np.float64)
    return hist / hist.sum()


def predict(
    model: ForestModel, vector: FusedFeatureVector, pair: tuple[str, str] | None = None
) -> RelationPrediction:
    if vector.schema_version != model.feature_schema_version:
        raise PredictionError(
            f"vector schema {vector.schema_version!r} does not match model "
            f"schema {model.feature_schema_version!r}"
        )
    x = vector.flat()
    if len(x) != model.n_features:
        raise PredictionError(
            f"vector has {len(x)} features, model expects {model.n_features}"
        )
    probs = np.zeros(N_CLASSES, dtype=np.float64)
    for tree in model.trees:
        probs += _leaf_distribution(tree, x)
    probs /= len(model.trees)
    return RelationPrediction(
        probabilities=tuple(float(p) for p in probs),
        predicted=argmax_class(probs),
        pair=pair,
    )


def save_model(model: ForestModel, path: str | Path) -> None:
    """Self-describing JSON container; byte-deterministic for a given model."""
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "feature_schema_version": model.feature_schema_version,
        "n_features": model.n_features,
        "n_classes": N_CLASSES,
        "hyperparams": model.hyperparams.to_dict(),
        "seed": model.seed,
        "trees": model.trees,
    }
    Path(path).write_text(
        json.dumps(doc, sort_keys=True, separators=(",", ":")), encoding="utf-8"
    )


def load_model(path: str | Path) -> ForestModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"unreadable model file {path}: {exc}") from exc
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"unknown model format version: {doc.get('format_version')!r}"
        )
    if doc.get("n_classes") != N_CLASSES:
        raise ModelFormatError(f"model has {doc.get('n_classes')} classes, expected {N_CLASSES}")
    return ForestModel(
        trees=doc["trees"],
        feature_schema_version=doc["feature_schema_version"],
        n_features=doc["n_features"],
        hyperparams=ForestHyperparams.from_dict(doc["hyperparams"]),
        seed=doc["seed"],
    )
