"""Relational features for a topic pair, and their fusion with an external
language-model class prediction.

The numeric block is (occ_a, occ_b, coocc_ab, subsumption), either summed
over the whole window (aggregate mode) or repeated per year, oldest year
first (yearly mode). The counting unit is document frequency by default,
which keeps subsumption inside [-1, 1]; raw mention counts are available
behind a switch.

subsumption = coocc_ab/occ_a - coocc_ab/occ_b. Sign convention: a large
positive value means A rarely occurs without B while B often occurs without
A, i.e. A is the more specific topic of the pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import EncodingError, TopicNotFoundError, UndefinedFeatureError
from .relations import CLASS_INDEX, N_CLASSES, RelationClass
from .topic_index import OccurrenceStats

AGGREGATE = "aggregate"
YEARLY = "yearly"

NO_PREDICTION = "-"  # lm_class column value in feature dumps


@dataclass(frozen=True)
class AggregateFeatures:
    occ_a: int
    occ_b: int
    coocc_ab: int
    subsumption: float

    def flat(self) -> tuple[float, ...]:
        return (float(self.occ_a), float(self.occ_b), float(self.coocc_ab), self.subsumption)


@dataclass(frozen=True)
class YearlyFeatures:
    per_year: tuple[AggregateFeatures, ...]  # oldest year first

    def flat(self) -> tuple[float, ...]:
        out: list[float] = []
        for block in self.per_year:
            out.extend(block.flat())
        return tuple(out)


@dataclass(frozen=True)
class FusedFeatureVector:
    numeric: tuple[float, ...]
    lm_onehot: tuple[int, int, int, int]
    schema_version: str

    def flat(self) -> tuple[float, ...]:
        return self.numeric + tuple(float(x) for x in self.lm_onehot)

    def __len__(self) -> int:
        return len(self.numeric) + len(self.lm_onehot)


def schema_for(mode: str, window_years: int = 0) -> str:
    """Frozen feature-layout identifier stored in model files; models refuse
    vectors whose schema differs."""
    if mode == AGGREGATE:
        return "fused/aggregate-v1"
    if mode == YEARLY:
        return f"fused/yearly-v1/w{window_years}"
    raise ValueError(f"unknown feature mode: {mode!r}")


def compute_subsumption(occ_a: int, occ_b: int, coocc_ab: int) -> float:
    """coocc_ab/occ_a - coocc_ab/occ_b; undefined when either count is 0."""
    if occ_a <= 0 or occ_b <= 0:
        raise UndefinedFeatureError(
            f"subsumption undefined for zero occurrence counts ({occ_a}, {occ_b})"
        )
    if coocc_ab < 0 or coocc_ab > min(occ_a, occ_b):
        raise UndefinedFeatureError(
            f"co-occurrence {coocc_ab} outside [0, min({occ_a}, {occ_b})]"
        )
    return coocc_ab / occ_a - coocc_ab / occ_b


def _block(occ_a: int, occ_b: int, coocc_ab: int, strict: bool) -> AggregateFeatures:
    if occ_a > 0 and occ_b > 0:
        sub = compute_subsumption(occ_a, occ_b, coocc_ab)
    elif strict:
        raise UndefinedFeatureError(
            f"zero occurrence counts ({occ_a}, {occ_b}); cannot compute subsumption"
        )
    else:
        sub = 0.0
    return AggregateFeatures(occ_a, occ_b, coocc_ab, sub)


def compute_features(
    pair: tuple[str, str],
    stats: OccurrenceStats,
    mode: str = AGGREGATE,
    unit: str = "doc_freq",
    strict: bool = False,
) -> AggregateFeatures | YearlyFeatures:
    """Feature block(s) for an ordered topic pair.

    Yearly mode always falls back to subsumption 0 for years where either
    occurrence count is 0; aggregate mode does the same unless strict=True,
    in which case a fully absent topic raises.
    """
    a, b = pair
    for t in (a, b):
        if t not in stats:
            raise TopicNotFoundError(f"unknown topic: {t!r}")
    count = stats.df if unit == "doc_freq" else stats.mentions
    if unit not in ("doc_freq", "mentions"):
        raise ValueError(f"unknown counting unit: {unit!r}")

    if mode == AGGREGATE:
        return _block(count(a), count(b), stats.coocc(a, b), strict)
    if mode == YEARLY:
        blocks = tuple(
            _block(count(a, y), count(b, y), stats.coocc(a, b, y), strict=False)
            for y in stats.years()
        )
        return YearlyFeatures(blocks)
    raise ValueError(f"unknown feature mode: {mode!r}")


def fuse(
    numeric: AggregateFeatures | YearlyFeatures,
    lm: RelationClass | str | None = None,
) -> FusedFeatureVector:
    """Append the one-hot LM block in the fixed class order
    (supertopic, subtopic, same-as, other); absent prediction -> all zeros."""
    onehot = [0] * N_CLASSES
    if lm is not None:
        rc = lm if isinstance(lm, RelationClass) else RelationClass.parse(lm)
        onehot[CLASS_INDEX[rc]] = 1
    if isinstance(numeric, YearlyFeatures):
        schema = schema_for(YEARLY, len(numeric.per_year))
    else:
        schema = schema_for(AGGREGATE)
    return FusedFeatureVector(numeric.flat(), tuple(onehot), schema)


# -- feature dump file ----------------------------------------------------
#
# Line format (TSV): topic_a, topic_b, numeric values..., lm_class
# Aggregate rows have 4 numeric values, yearly rows 4 * window_years.


def write_feature_dump(
    path: str | Path,
    rows: Iterable[tuple[str, str, AggregateFeatures | YearlyFeatures, RelationClass | None]],
) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for topic_a, topic_b, numeric, lm in rows:
            values = "\t".join(repr(v) for v in numeric.flat())
            lm_col = lm.value if lm is not None else NO_PREDICTION
            fh.write(f"{topic_a}\t{topic_b}\t{values}\t{lm_col}\n")


def read_feature_dump(
    path: str | Path,
) -> Iterator[tuple[str, str, tuple[float, ...], RelationClass | None]]:
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) < 7:
                raise EncodingError(f"line {line_no}: too few columns for a feature row")
            lm_col = parts[-1]
            lm = None if lm_col == NO_PREDICTION else RelationClass.parse(lm_col)
            numeric = tuple(float(v) for v in parts[2:-1])
            yield parts[0], parts[1], numeric, lm
