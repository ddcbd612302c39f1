"""Classification metrics and the model evaluation loop.

The confusion matrix (rows = gold, columns = predicted, fixed class order)
is the single source of truth: accuracy, per-class precision/recall/F1 and
macro F1 are all derived from it, and any of them can be recomputed from
the raw (gold, predicted) pairs for cross-checking. Undefined ratios
(empty row or column) are 0, never an exception.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .errors import ProviderError
from .features import AggregateFeatures, YearlyFeatures, fuse
from .forest import ForestModel, predict
from .relations import CLASS_INDEX, CLASS_ORDER, N_CLASSES, RelationClass


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float


@dataclass
class EvalReport:
    confusion: list[list[int]]  # [gold][predicted]
    accuracy: float
    per_class: dict[RelationClass, ClassMetrics]
    macro_f1: float

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "confusion": self.confusion,
            "class_order": [rc.value for rc in CLASS_ORDER],
            "per_class": {
                rc.value: {"precision": m.precision, "recall": m.recall, "f1": m.f1}
                for rc, m in self.per_class.items()
            },
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=2, sort_keys=True), encoding="utf-8"
        )


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def report_from_confusion(confusion: Sequence[Sequence[int]]) -> EvalReport:
    total = sum(sum(row) for row in confusion)
    correct = sum(confusion[i][i] for i in range(N_CLASSES))
    per_class: dict[RelationClass, ClassMetrics] = {}
    for i, rc in enumerate(CLASS_ORDER):
        gold_i = sum(confusion[i])
        pred_i = sum(confusion[g][i] for g in range(N_CLASSES))
        precision = _safe_div(confusion[i][i], pred_i)
        recall = _safe_div(confusion[i][i], gold_i)
        f1 = _safe_div(2 * precision * recall, precision + recall)
        per_class[rc] = ClassMetrics(precision, recall, f1)
    macro_f1 = sum(m.f1 for m in per_class.values()) / N_CLASSES
    return EvalReport(
        confusion=[list(row) for row in confusion],
        accuracy=_safe_div(correct, total),
        per_class=per_class,
        macro_f1=macro_f1,
    )


def report_from_pairs(
    outcomes: Iterable[tuple[RelationClass, RelationClass]]
) -> EvalReport:
    """Build the report from raw (gold, predicted) pairs."""
    confusion = [[0] * N_CLASSES for _ in range(N_CLASSES)]
    for gold, predicted in outcomes:
        confusion[CLASS_INDEX[gold]][CLASS_INDEX[predicted]] += 1
    return report_from_confusion(confusion)


def evaluate(
    model: ForestModel,
    testset: Sequence[tuple[tuple[str, str], AggregateFeatures | YearlyFeatures, RelationClass]],
    lm_provider: Callable[[tuple[str, str]], RelationClass | None] | None = None,
) -> EvalReport:
    """Run the model over (pair, numeric features, gold) rows.

    When an LM provider is given it is consulted for every pair; a provider
    failure aborts the evaluation naming the offending pair.
    """
    outcomes: list[tuple[RelationClass, RelationClass]] = []
    for pair, numeric, gold in testset:
        lm = None
        if lm_provider is not None:
            try:
                lm = lm_provider(pair)
            except ProviderError:
                raise
            except Exception as exc:
                raise ProviderError(f"LM provider failed on pair {pair!r}: {exc}") from exc
        vector = fuse(numeric, lm)
        outcomes.append((gold, predict(model, vector, pair).predicted))
    return report_from_pairs(outcomes)
