"""The four-class relation vocabulary, labeled-triple files, and the
leakage-safe train/validation/test split.

A pair and its inverse ordering are never separated: splits sample atomic
groups of triples that share the same unordered topic pair, so the
inverse-pair invariant holds by construction.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import normalize_text
from .errors import EncodingError, TripleParseError

logger = logging.getLogger(__name__)


class RelationClass(Enum):
    """Closed set; enum order is the fixed class order used everywhere
    (one-hot layout, argmax tie-breaks, confusion matrix axes)."""

    SUPERTOPIC = "supertopic"
    SUBTOPIC = "subtopic"
    SAME_AS = "same-as"
    OTHER = "other"

    @classmethod
    def parse(cls, label: str) -> "RelationClass":
        key = label.strip().lower().replace("_", "-")
        for rc in cls:
            if rc.value == key:
                return rc
        raise EncodingError(f"unknown relation class: {label!r}")

    def inverse(self) -> "RelationClass":
        if self is RelationClass.SUPERTOPIC:
            return RelationClass.SUBTOPIC
        if self is RelationClass.SUBTOPIC:
            return RelationClass.SUPERTOPIC
        return self  # same-as and other are self-inverse


CLASS_ORDER: tuple[RelationClass, ...] = tuple(RelationClass)
CLASS_INDEX: dict[RelationClass, int] = {rc: i for i, rc in enumerate(CLASS_ORDER)}
N_CLASSES = len(CLASS_ORDER)


@dataclass(frozen=True)
class LabeledTriple:
    topic_a: str
    topic_b: str
    relation: RelationClass

    def __post_init__(self):
        if normalize_text(self.topic_a) == normalize_text(self.topic_b):
            raise TripleParseError(
                f"topic pair is self-referential: {self.topic_a!r} / {self.topic_b!r}"
            )

    def pair(self) -> tuple[str, str]:
        return (self.topic_a, self.topic_b)

    def unordered(self) -> frozenset[str]:
        return frozenset((self.topic_a, self.topic_b))


def load_triples(path: str | Path) -> list[LabeledTriple]:
    """Read a tab-separated triple file (topic_a, topic_b, relation).

    Duplicate lines are preserved but logged; an unknown relation label or a
    structurally bad line is a parse error carrying its line number.
    """
    triples: list[LabeledTriple] = []
    seen: set[tuple[str, str, str]] = set()
    dupes = 0
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise TripleParseError("expected 3 tab-separated fields", line_no)
            a, b, rel = (p.strip() for p in parts)
            try:
                relation = RelationClass.parse(rel)
            except EncodingError as exc:
                raise TripleParseError(str(exc), line_no) from exc
            try:
                triple = LabeledTriple(a, b, relation)
            except TripleParseError as exc:
                raise TripleParseError(str(exc), line_no) from exc
            key = (a, b, relation.value)
            if key in seen:
                dupes += 1
            seen.add(key)
            triples.append(triple)
    if dupes:
        logger.warning("%s: %d duplicate triples preserved", path, dupes)
    if not triples:
        logger.warning("%s: empty triple file", path)
    return triples


def save_triples(triples: Iterable[LabeledTriple], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for t in triples:
            fh.write(f"{t.topic_a}\t{t.topic_b}\t{t.relation.value}\n")


@dataclass
class DatasetSplit:
    train: list[LabeledTriple] = field(default_factory=list)
    validation: list[LabeledTriple] = field(default_factory=list)
    test: list[LabeledTriple] = field(default_factory=list)

    seed: int = 0

    def parts(self) -> dict[str, list[LabeledTriple]]:
        return {"train": self.train, "validation": self.validation, "test": self.test}


def _apportion(n: int, fractions: Sequence[float]) -> list[int]:
    """Largest-remainder apportionment of n items over fractions."""
    quotas = [n * f for f in fractions]
    base = [int(q) for q in quotas]
    short = n - sum(base)
    remainders = sorted(
        range(len(fractions)), key=lambda i: (-(quotas[i] - base[i]), i)
    )
    for i in remainders[:short]:
        base[i] += 1
    return base


def make_splits(
    triples: Sequence[LabeledTriple],
    fractions: tuple[float, float, float] = (0.70, 0.10, 0.20),
    seed: int = 0,
) -> DatasetSplit:
    """Deterministic split that keeps every pair with its inverse.

    Triples sharing an unordered topic pair form one atomic group; groups
    are shuffled under the seed and apportioned to train/validation/test by
    largest remainder over group counts.
    """
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1: {fractions}")
    groups: dict[frozenset[str], list[LabeledTriple]] = {}
    order: list[frozenset[str]] = []
    for t in triples:
        key = t.unordered()
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(t)

    rng = random.Random(seed)
    shuffled = list(order)
    rng.shuffle(shuffled)
    counts = _apportion(len(shuffled), fractions)

    split = DatasetSplit(seed=seed)
    buckets = (split.train, split.validation, split.test)
    pos = 0
    for bucket, n in zip(buckets, counts):
        for key in shuffled[pos : pos + n]:
            bucket.extend(groups[key])
        pos += n
    return split


@dataclass(frozen=True)
class SplitViolation:
    pair: tuple[str, str]
    inverse: tuple[str, str]
    split_a: str
    split_b: str
    kind: str  # "separated_inverse" | "duplicate_pair"


def check_split_integrity(split: DatasetSplit) -> list[SplitViolation]:
    """Every way a split can leak: a pair whose inverse sits in a different
    split, or the same ordered pair appearing in two splits."""
    where: dict[tuple[str, str], set[str]] = {}
    for name, triples in split.parts().items():
        for t in triples:
            where.setdefault(t.pair(), set()).add(name)

    violations: list[SplitViolation] = []
    seen_unordered: set[frozenset[str]] = set()
    for pair in sorted(where):
        splits_of_pair = where[pair]
        if len(splits_of_pair) > 1:
            names = sorted(splits_of_pair)
            violations.append(
                SplitViolation(pair, pair, names[0], names[1], "duplicate_pair")
            )
        key = frozenset(pair)
        if key in seen_unordered:
            continue  # report each unordered pair once
        seen_unordered.add(key)
        inverse = (pair[1], pair[0])
        inv_splits = where.get(inverse)
        if inv_splits is None:
            continue
        if len(splits_of_pair | inv_splits) > 1:
            violations.append(
                SplitViolation(
                    pair,
                    inverse,
                    sorted(splits_of_pair)[0],
                    sorted(inv_splits)[0],
                    "separated_inverse",
                )
            )
    return violations
