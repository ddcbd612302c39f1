"""Multi-pattern topic matcher.

Lexicon labels are token sequences (the corpus normalizer maps punctuation
to spaces, so token boundary == space boundary). The matcher walks a token
trie, takes the longest label starting at each position, and resumes after
the consumed match, so "learning" is never counted inside "deep learning"
and "sql" never matches inside "mysql".
"""

from __future__ import annotations

from typing import Iterable, NamedTuple

from .errors import LexiconError

_TERMINAL = 0  # trie key for "a pattern ends here"; tokens are str keys


class Match(NamedTuple):
    topic_id: str
    start: int  # token offset, inclusive
    end: int  # token offset, exclusive


class Matcher:
    """Immutable after construction; safe to share across worker threads."""

    def __init__(self, patterns: Iterable[tuple[str, str]]):
        """patterns: (topic_id, normalized label) pairs."""
        self._root: dict = {}
        n = 0
        for topic_id, label in patterns:
            tokens = label.split()
            if not tokens:
                raise LexiconError(f"empty label for topic {topic_id!r}")
            node = self._root
            for tok in tokens:
                node = node.setdefault(tok, {})
            if _TERMINAL in node:
                raise LexiconError(f"duplicate label {label!r}")
            node[_TERMINAL] = topic_id
            n += 1
        if n == 0:
            raise LexiconError("cannot build a matcher from an empty lexicon")

    def find(self, tokens: list[str]) -> list[Match]:
        """All non-overlapping longest matches, left to right."""
        root = self._root
        out: list[Match] = []
        i = 0
        n = len(tokens)
        while i < n:
            node = root
            best_end = -1
            best_id = None
            j = i
            while j < n:
                node = node.get(tokens[j])
                if node is None:
                    break
                j += 1
                hit = node.get(_TERMINAL)
                if hit is not None:
                    best_end = j
                    best_id = hit
            if best_id is not None:
                out.append(Match(best_id, i, best_end))
                i = best_end
            else:
                i += 1
        return out

    def find_in_text(self, normalized_text: str) -> list[Match]:
        return self.find(normalized_text.split())
