"""Per-topic, per-year occurrence statistics over a corpus.

Counting is document-parallel: shards of the corpus can be counted
independently and merged by field-wise addition (`OccurrenceStats.merge`),
which is exactly equivalent to a single pass. The stats cache file is
byte-deterministic so pipeline stages can digest-check their inputs.
"""

from __future__ import annotations

import hashlib
import json
import struct
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np

from .corpus import PaperRecord, normalize_text
from .errors import LexiconError, TopicNotFoundError
from .matching import Matcher

LEXICON_SOURCES = ("external_ner", "allowlist", "manual")

_MAGIC = b"OGSTATS1"
_FORMAT_VERSION = 1


@dataclass(frozen=True)
class LexiconEntry:
    topic_id: str
    label: str
    source: str = "external_ner"


class TopicLexicon:
    """Candidate-topic list; labels are stored normalized and must be unique."""

    def __init__(self, entries: Iterable[LexiconEntry]):
        self.entries: list[LexiconEntry] = []
        seen_ids: set[str] = set()
        seen_labels: set[str] = set()
        for e in entries:
            label = normalize_text(e.label)
            if not label:
                raise LexiconError(f"empty label for topic {e.topic_id!r}")
            if e.source not in LEXICON_SOURCES:
                raise LexiconError(f"unknown lexicon source {e.source!r}")
            if e.topic_id in seen_ids:
                raise LexiconError(f"duplicate topic_id {e.topic_id!r}")
            if label in seen_labels:
                raise LexiconError(f"duplicate label {label!r}")
            seen_ids.add(e.topic_id)
            seen_labels.add(label)
            self.entries.append(LexiconEntry(e.topic_id, label, e.source))
        self._by_id = {e.topic_id: e for e in self.entries}

    @classmethod
    def from_labels(cls, labels: Iterable[str], source: str = "manual") -> "TopicLexicon":
        """Convenience constructor: the normalized label doubles as the id."""
        return cls(LexiconEntry(normalize_text(l), l, source) for l in labels)

    @classmethod
    def load(cls, path: str | Path) -> "TopicLexicon":
        entries = []
        with Path(path).open("r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) == 2:
                    topic_id, label = parts
                    source = "external_ner"
                elif len(parts) == 3:
                    topic_id, label, source = parts
                else:
                    raise LexiconError(f"line {line_no}: expected 2 or 3 tab-separated fields")
                entries.append(LexiconEntry(topic_id, label, source))
        return cls(entries)

    def save(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            for e in self.entries:
                fh.write(f"{e.topic_id}\t{e.label}\t{e.source}\n")

    def digest(self) -> str:
        h = hashlib.sha256()
        for e in self.entries:
            h.update(f"{e.topic_id}\t{e.label}\t{e.source}\n".encode("utf-8"))
        return h.hexdigest()

    def ids(self) -> list[str]:
        return [e.topic_id for e in self.entries]

    def label_of(self, topic_id: str) -> str:
        return self._by_id[topic_id].label

    def labels_by_id(self) -> dict[str, str]:
        return {e.topic_id: e.label for e in self.entries}

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[LexiconEntry]:
        return iter(self.entries)

    def __contains__(self, topic_id: str) -> bool:
        return topic_id in self._by_id


@dataclass
class CandidateFilterConfig:
    allowlist: set[str] = field(default_factory=set)
    denylist: set[str] = field(default_factory=set)
    generic_df_ratio: float = 0.2
    min_doc_freq: int = 1

    def __post_init__(self):
        self.allowlist = {normalize_text(l) for l in self.allowlist}
        self.denylist = {normalize_text(l) for l in self.denylist}
        overlap = self.allowlist & self.denylist
        if overlap:
            raise LexiconError(f"labels in both allow- and deny-list: {sorted(overlap)}")
        if not (0.0 < self.generic_df_ratio <= 1.0):
            raise LexiconError("generic_df_ratio must be in (0, 1]")


class OccurrenceStats:
    """Mention counts, document frequencies and pairwise document
    co-occurrences, per year within a fixed window.

    Co-occurrence is stored once per unordered pair (smaller id first) and
    looked up symmetrically. Documents are the co-occurrence unit, so
    coocc(A, B) <= min(doc_freq(A), doc_freq(B)) always holds.
    """

    def __init__(self, topic_ids: Iterable[str], window: tuple[int, int]):
        start, end = window
        if start > end:
            raise ValueError(f"bad year window: {window}")
        self.window = (int(start), int(end))
        self.topic_ids: list[str] = sorted(set(topic_ids))
        self._known = set(self.topic_ids)
        self.mention_count: dict[str, dict[int, int]] = defaultdict(dict)
        self.doc_freq: dict[str, dict[int, int]] = defaultdict(dict)
        self.cooccurrence: dict[tuple[str, str], dict[int, int]] = defaultdict(dict)
        self.docs_per_year: dict[int, int] = {}

    # -- accumulation -----------------------------------------------------

    def add_document(self, year: int, topic_mentions: Mapping[str, int]) -> None:
        self.docs_per_year[year] = self.docs_per_year.get(year, 0) + 1
        present = sorted(t for t, c in topic_mentions.items() if c > 0)
        for t in present:
            m = self.mention_count[t]
            m[year] = m.get(year, 0) + topic_mentions[t]
            d = self.doc_freq[t]
            d[year] = d.get(year, 0) + 1
        for a, b in combinations(present, 2):
            c = self.cooccurrence[(a, b)]
            c[year] = c.get(year, 0) + 1

    def merge(self, other: "OccurrenceStats") -> "OccurrenceStats":
        """Field-wise addition. Windows and topic universes must match."""
        if self.window != other.window:
            raise ValueError("cannot merge stats with different windows")
        if self.topic_ids != other.topic_ids:
            raise ValueError("cannot merge stats over different lexicons")
        out = OccurrenceStats(self.topic_ids, self.window)
        for src in (self, other):
            for year, n in src.docs_per_year.items():
                out.docs_per_year[year] = out.docs_per_year.get(year, 0) + n
            for t, per_year in src.mention_count.items():
                m = out.mention_count[t]
                for year, n in per_year.items():
                    m[year] = m.get(year, 0) + n
            for t, per_year in src.doc_freq.items():
                d = out.doc_freq[t]
                for year, n in per_year.items():
                    d[year] = d.get(year, 0) + n
            for pair, per_year in src.cooccurrence.items():
                c = out.cooccurrence[pair]
                for year, n in per_year.items():
                    c[year] = c.get(year, 0) + n
        return out

    # -- lookups -----------------------------------------------------------

    def mentions(self, topic_id: str, year: int | None = None) -> int:
        per_year = self.mention_count.get(topic_id, {})
        return per_year.get(year, 0) if year is not None else sum(per_year.values())

    def df(self, topic_id: str, year: int | None = None) -> int:
        per_year = self.doc_freq.get(topic_id, {})
        return per_year.get(year, 0) if year is not None else sum(per_year.values())

    def coocc(self, a: str, b: str, year: int | None = None) -> int:
        key = (a, b) if a <= b else (b, a)
        per_year = self.cooccurrence.get(key, {})
        return per_year.get(year, 0) if year is not None else sum(per_year.values())

    def total_docs(self) -> int:
        return sum(self.docs_per_year.values())

    def years(self) -> range:
        return range(self.window[0], self.window[1] + 1)

    def __contains__(self, topic_id: str) -> bool:
        return topic_id in self._known

    # -- persistence ---------------------------------------------------------

    def save(self, path: str | Path, lexicon_digest: str = "") -> None:
        """Byte-deterministic binary cache: magic, JSON header, then
        little-endian int64 sections. Identical stats always produce
        identical files."""
        years = list(self.years())
        year_idx = {y: i for i, y in enumerate(years)}
        n_topics, n_years = len(self.topic_ids), len(years)
        tid_idx = {t: i for i, t in enumerate(self.topic_ids)}

        mentions = np.zeros((n_topics, n_years), dtype="<i8")
        dfreq = np.zeros((n_topics, n_years), dtype="<i8")
        docs = np.zeros(n_years, dtype="<i8")
        for y, n in self.docs_per_year.items():
            if y in year_idx:
                docs[year_idx[y]] = n
        for t, per_year in self.mention_count.items():
            for y, n in per_year.items():
                mentions[tid_idx[t], year_idx[y]] = n
        for t, per_year in self.doc_freq.items():
            for y, n in per_year.items():
                dfreq[tid_idx[t], year_idx[y]] = n

        rows = []
        for (a, b), per_year in self.cooccurrence.items():
            for y, n in per_year.items():
                rows.append((tid_idx[a], tid_idx[b], year_idx[y], n))
        rows.sort()
        coocc = np.array(rows, dtype="<i8") if rows else np.zeros((0, 4), dtype="<i8")

        header = json.dumps(
            {
                "format_version": _FORMAT_VERSION,
                "window": list(self.window),
                "lexicon_digest": lexicon_digest,
                "n_topics": n_topics,
                "n_pairs": len(rows),
            },
            sort_keys=True,
        ).encode("utf-8")
        topics_blob = json.dumps(self.topic_ids, ensure_ascii=False).encode("utf-8")

        with Path(path).open("wb") as fh:
            fh.write(_MAGIC)
            for blob in (header, topics_blob):
                fh.write(struct.pack("<Q", len(blob)))
                fh.write(blob)
            fh.write(docs.tobytes())
            fh.write(mentions.tobytes())
            fh.write(dfreq.tobytes())
            fh.write(coocc.tobytes())

    @classmethod
    def load(cls, path: str | Path, expect_lexicon_digest: str | None = None) -> "OccurrenceStats":
        with Path(path).open("rb") as fh:
            if fh.read(len(_MAGIC)) != _MAGIC:
                raise ValueError(f"not a stats cache file: {path}")
            header = json.loads(_read_blob(fh))
            if header.get("format_version") != _FORMAT_VERSION:
                raise ValueError(f"unsupported stats format version: {header.get('format_version')}")
            if expect_lexicon_digest is not None and header["lexicon_digest"] != expect_lexicon_digest:
                raise ValueError("stats cache was built from a different lexicon")
            topic_ids = json.loads(_read_blob(fh))
            window = tuple(header["window"])
            stats = cls(topic_ids, window)
            years = list(stats.years())
            n_topics, n_years = header["n_topics"], len(years)
            docs = np.frombuffer(fh.read(8 * n_years), dtype="<i8")
            mentions = np.frombuffer(fh.read(8 * n_topics * n_years), dtype="<i8").reshape(
                n_topics, n_years
            )
            dfreq = np.frombuffer(fh.read(8 * n_topics * n_years), dtype="<i8").reshape(
                n_topics, n_years
            )
            coocc = np.frombuffer(fh.read(8 * 4 * header["n_pairs"]), dtype="<i8").reshape(
                header["n_pairs"], 4
            )
        for i, y in enumerate(years):
            if docs[i]:
                stats.docs_per_year[y] = int(docs[i])
        for ti, t in enumerate(topic_ids):
            for yi, y in enumerate(years):
                if mentions[ti, yi]:
                    stats.mention_count[t][y] = int(mentions[ti, yi])
                if dfreq[ti, yi]:
                    stats.doc_freq[t][y] = int(dfreq[ti, yi])
        for ai, bi, yi, n in coocc:
            stats.cooccurrence[(topic_ids[ai], topic_ids[bi])][years[yi]] = int(n)
        return stats

    def export_occurrences(self, path: str | Path) -> None:
        """Debug export: topic_id, year, mentions, doc_freq (TSV)."""
        with Path(path).open("w", encoding="utf-8") as fh:
            for t in self.topic_ids:
                for y in self.years():
                    m, d = self.mentions(t, y), self.df(t, y)
                    if m or d:
                        fh.write(f"{t}\t{y}\t{m}\t{d}\n")

    def export_pairs(self, path: str | Path) -> None:
        """Debug export: topic_a, topic_b, year, coocc (TSV)."""
        with Path(path).open("w", encoding="utf-8") as fh:
            for pair in sorted(self.cooccurrence):
                per_year = self.cooccurrence[pair]
                for y in sorted(per_year):
                    fh.write(f"{pair[0]}\t{pair[1]}\t{y}\t{per_year[y]}\n")


def _read_blob(fh) -> bytes:
    (length,) = struct.unpack("<Q", fh.read(8))
    return fh.read(length)


def build_matcher(lexicon: TopicLexicon) -> Matcher:
    if len(lexicon) == 0:
        raise LexiconError("cannot build a matcher from an empty lexicon")
    return Matcher((e.topic_id, e.label) for e in lexicon)


def count_occurrences(
    corpus: Iterable[PaperRecord], matcher: Matcher, window: tuple[int, int],
    topic_ids: Iterable[str] | None = None,
) -> OccurrenceStats:
    """Scan title+abstract of every in-window document.

    mention_count counts every match; doc_freq and co-occurrence count
    distinct documents. Pass topic_ids (usually lexicon.ids()) so topics
    that never occur still exist in the stats universe.
    """
    stats = OccurrenceStats(topic_ids or [], window)
    start, end = stats.window
    for rec in corpus:
        if rec.year < start or rec.year > end:
            continue
        counts: Counter = Counter()
        for text in (rec.title, rec.abstract):
            for m in matcher.find_in_text(normalize_text(text)):
                counts[m.topic_id] += 1
        stats.add_document(rec.year, counts)
        stats._known.update(counts)
    stats.topic_ids = sorted(stats._known)
    return stats


def filter_candidates(
    stats: OccurrenceStats, lexicon: TopicLexicon, config: CandidateFilterConfig
) -> TopicLexicon:
    """Drop deny-listed labels, overly generic topics (document-frequency
    ratio above the threshold) and rare topics; allow-listed labels are
    always retained. topic_ids survive unchanged."""
    total = stats.total_docs()
    kept = []
    for e in lexicon:
        if e.label in config.denylist:
            continue
        if e.label in config.allowlist:
            kept.append(e)
            continue
        df = stats.df(e.topic_id)
        if total > 0 and df / total > config.generic_df_ratio:
            continue
        if df < config.min_doc_freq:
            continue
        kept.append(e)
    return TopicLexicon(kept)


def select_related_topics(
    stats: OccurrenceStats,
    root: str,
    k: int,
    labels: Mapping[str, str] | None = None,
    candidates: Iterable[str] | None = None,
) -> list[str]:
    """Up to k topics most co-occurrent with the root, deterministic order:
    descending co-occurrence, then descending doc_freq, then label.
    `candidates` restricts the pool (e.g. to a filtered lexicon)."""
    if root not in stats:
        raise TopicNotFoundError(f"unknown root topic: {root!r}")
    label_of = (labels or {}).get

    def sort_key(t: str):
        return (-stats.coocc(root, t), -stats.df(t), label_of(t, t))

    pool = stats.topic_ids if candidates is None else candidates
    ranked = sorted((t for t in pool if t != root), key=sort_key)
    return ranked[: max(k, 0)]
