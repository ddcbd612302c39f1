"""Train, evaluate and serialize the relation classifier.

The forest is deliberately boring machine learning; what matters here is
the contract around it: deterministic training under a seed, a versioned
model file, and an evaluation report whose every number is recomputable
from the confusion matrix.
"""

import random
import tempfile
from pathlib import Path

from ontogen import (
    AggregateFeatures,
    ForestHyperparams,
    RelationClass,
    evaluate,
    fuse,
    load_model,
    predict,
    save_model,
    train_forest,
)

rng = random.Random(12)
CLASSES = list(RelationClass)


def synthetic_rows(n):
    """Class correlates with the subsumption band; occurrence counts are noise."""
    bands = {
        RelationClass.SUPERTOPIC: (-1.0, -0.5),
        RelationClass.SUBTOPIC: (0.5, 1.0),
        RelationClass.SAME_AS: (0.0, 0.5),
        RelationClass.OTHER: (-0.5, 0.0),
    }
    rows = []
    for i in range(n):
        rel = rng.choice(CLASSES)
        lo, hi = bands[rel]
        features = AggregateFeatures(
            rng.randint(1, 400), rng.randint(1, 400), rng.randint(0, 50),
            rng.uniform(lo + 1e-6, hi - 1e-6),
        )
        rows.append(((f"a{i}", f"b{i}"), features, rel))
    return rows


train_rows = synthetic_rows(1500)
test_rows = synthetic_rows(400)

model = train_forest(
    [(fuse(features, None), rel) for _, features, rel in train_rows],
    ForestHyperparams(n_trees=80),
    seed=42,
)

report = evaluate(model, test_rows)
print(f"accuracy  {report.accuracy:.3f}")
print(f"macro F1  {report.macro_f1:.3f}")
for rc, m in report.per_class.items():
    print(f"  {rc.value:10s} precision={m.precision:.3f} recall={m.recall:.3f} f1={m.f1:.3f}")
print("confusion:", report.confusion)

# ---------------------------------------------------------------------------
# determinism: same seed, same bytes
# ---------------------------------------------------------------------------

workdir = Path(tempfile.mkdtemp(prefix="ontogen_demo_"))
paths = [workdir / "m1.json", workdir / "m2.json"]
dataset = [(fuse(features, None), rel) for _, features, rel in train_rows]
for path in paths:
    save_model(train_forest(dataset, ForestHyperparams(n_trees=20), seed=7), path)
print()
print("same seed, bit-identical model files:", paths[0].read_bytes() == paths[1].read_bytes())

loaded = load_model(paths[0])
vec = fuse(AggregateFeatures(50, 400, 45, 0.7875), None)
prediction = predict(loaded, vec, pair=("random forest", "machine learning"))
print("single prediction:", prediction.predicted.value,
      "probabilities:", [round(p, 3) for p in prediction.probabilities])
