"""Paper-metadata ingestion.

Reads line-delimited JSON records (one paper per line), drops records that
are unusable for indexing, and reports exactly where every input line went.
The stream is single-pass; shards of one file can be ingested independently
and their reports merged by addition.
"""

from __future__ import annotations

import datetime
import json
import unicodedata
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable, Iterator

from .errors import IngestionError

MIN_YEAR = 1900

# Most frequent English character trigrams; used by the default language
# heuristic when a record carries no language tag.
_ENGLISH_TRIGRAMS = frozenset(
    (
        "the", "and", "ing", "ion", "tio", "ent", "ati", "for", "her", "ter",
        "hat", "tha", "ere", "ate", "his", "con", "res", "ver", "all", "ons",
        "nce", "men", "ith", "ted", "ers", "pro", "thi", "wit", "are", "ess",
        "not", "ive", "was", "ect", "rea", "com", "eve", "per", "int", "est",
        "sta", "cti", "ica", "ist", "ear", "ain", "one", "our", "iti", "rat",
        "ble", "nte", "ran", "ome", "sed", "ous", "nal", "ore", "nde", "wor",
    )
)


def default_language_detector(text: str) -> str:
    """Crude trigram-frequency heuristic: returns "en" or "other".

    Counts how many of the text's character trigrams are common English
    trigrams. Good enough to reject clearly non-English abstracts; callers
    needing more should plug in a real detector.
    """
    sample = text.lower()[:2000]
    trigrams = [sample[i : i + 3] for i in range(len(sample) - 2)]
    if not trigrams:
        return "other"
    hits = sum(1 for t in trigrams if t in _ENGLISH_TRIGRAMS)
    return "en" if hits / len(trigrams) >= 0.08 else "other"


@dataclass(frozen=True)
class PaperRecord:
    """One publication's metadata; the unit of corpus ingestion."""

    paper_id: str
    title: str
    abstract: str
    year: int


@dataclass
class CorpusFilterReport:
    """Where every input line went. kept + all dropped counts == total_read."""

    total_read: int = 0
    kept: int = 0
    dropped_missing_fields: int = 0
    dropped_language: int = 0
    dropped_year_range: int = 0

    def reconciles(self) -> bool:
        dropped = (
            self.dropped_missing_fields
            + self.dropped_language
            + self.dropped_year_range
        )
        return self.kept + dropped == self.total_read

    def merge(self, other: "CorpusFilterReport") -> "CorpusFilterReport":
        """Field-wise addition; used when shards are ingested independently."""
        return CorpusFilterReport(
            **{
                f.name: getattr(self, f.name) + getattr(other, f.name)
                for f in fields(self)
            }
        )


@dataclass
class CorpusConfig:
    english_only: bool = True
    window_years: int = 10
    reference_year: int | None = None
    language_detector: Callable[[str], str] = field(
        default=default_language_detector, repr=False
    )

    def max_year(self) -> int:
        ref = self.reference_year
        if ref is None:
            ref = datetime.date.today().year
        return ref + 1


def normalize_text(raw: str) -> str:
    """Canonical text form used for all matching: NFC, case-folded,
    punctuation and symbols mapped to spaces, whitespace collapsed.

    Idempotent: normalize_text(normalize_text(x)) == normalize_text(x).
    """
    text = unicodedata.normalize("NFC", raw).casefold()
    text = unicodedata.normalize("NFC", text)
    out = []
    for ch in text:
        cat = unicodedata.category(ch)
        if cat[0] in ("P", "S", "C", "Z"):
            out.append(" ")
        else:
            out.append(ch)
    return " ".join("".join(out).split())


def _parse_line(line: str) -> dict | None:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError:
        return None
    return obj if isinstance(obj, dict) else None


def load_corpus(
    path: str | Path, config: CorpusConfig | None = None
) -> tuple[Iterator[PaperRecord], CorpusFilterReport]:
    """Stream PaperRecords from a line-delimited JSON file.

    Returns the record iterator and a report object that is filled in as the
    stream is consumed; its totals are final once the iterator is exhausted.
    Malformed lines are counted, never fatal. An unreadable file is fatal.
    """
    config = config or CorpusConfig()
    path = Path(path)
    if not path.is_file():
        raise IngestionError(f"corpus file not found: {path}")
    report = CorpusFilterReport()

    def records() -> Iterator[PaperRecord]:
        max_year = config.max_year()
        with path.open("r", encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                report.total_read += 1
                obj = _parse_line(line)
                if obj is None:
                    report.dropped_missing_fields += 1
                    continue
                paper_id = str(obj.get("paper_id") or "").strip()
                title = str(obj.get("title") or "").strip()
                abstract = str(obj.get("abstract") or "").strip()
                year = obj.get("year")
                if not paper_id or not title or not abstract or not isinstance(year, int):
                    report.dropped_missing_fields += 1
                    continue
                if year < MIN_YEAR or year > max_year:
                    report.dropped_year_range += 1
                    continue
                if config.english_only:
                    tag = obj.get("language")
                    if tag is not None:
                        lang = str(tag).lower()
                    else:
                        lang = config.language_detector(f"{title} {abstract}")
                    if lang != "en":
                        report.dropped_language += 1
                        continue
                report.kept += 1
                yield PaperRecord(paper_id=paper_id, title=title, abstract=abstract, year=year)

    return records(), report
