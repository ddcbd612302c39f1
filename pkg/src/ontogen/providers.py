"""External prediction and embedding providers.

Both kinds of provider hide the same choice: a local file/deterministic
fallback that makes the pipeline runnable with zero external services, or a
remote JSON-over-HTTP client with bounded exponential-backoff retries for
transient failures. Anything a fine-tuned encoder, an LLM or a real
embedding model produces enters the pipeline through these interfaces.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
import urllib.error
import urllib.request
from pathlib import Path
from typing import Callable, Iterable

from .corpus import normalize_text
from .errors import EncodingError, ProviderError
from .relations import RelationClass


def _post_json(
    url: str,
    payload: dict,
    timeout: float,
    retries: int,
    backoff_base: float,
    sleep: Callable[[float], None] = time.sleep,
) -> dict:
    """POST with retries on transient failures (connection errors, timeouts,
    5xx). Non-transient HTTP errors and malformed bodies fail immediately."""
    body = json.dumps(payload).encode("utf-8")
    last_exc: Exception | None = None
    for attempt in range(retries + 1):
        if attempt:
            sleep(backoff_base * (2 ** (attempt - 1)))
        req = urllib.request.Request(
            url, data=body, headers={"Content-Type": "application/json"}, method="POST"
        )
        try:
            with urllib.request.urlopen(req, timeout=timeout) as resp:
                return json.loads(resp.read().decode("utf-8"))
        except urllib.error.HTTPError as exc:
            if exc.code >= 500:
                last_exc = exc
                continue
            raise ProviderError(f"provider at {url} answered HTTP {exc.code}") from exc
        except (urllib.error.URLError, TimeoutError, OSError) as exc:
            last_exc = exc
            continue
        except json.JSONDecodeError as exc:
            raise ProviderError(f"provider at {url} returned malformed JSON") from exc
    raise ProviderError(f"provider at {url} unreachable after {retries} retries: {last_exc}")


# -- relation-class prediction providers ------------------------------------


class TablePredictionProvider:
    """Predictions from a tab-separated table: topic_a, topic_b, class.

    on_missing: "error" raises for unknown pairs; "feature_only" returns
    None, which downstream encodes as the all-zero one-hot block.
    """

    def __init__(self, path: str | Path, on_missing: str = "error"):
        if on_missing not in ("error", "feature_only"):
            raise ValueError(f"bad on_missing policy: {on_missing!r}")
        self.on_missing = on_missing
        self.table: dict[tuple[str, str], RelationClass] = {}
        with Path(path).open("r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise ProviderError(
                        f"{path}: line {line_no}: expected 3 tab-separated fields"
                    )
                try:
                    rel = RelationClass.parse(parts[2])
                except EncodingError as exc:
                    raise ProviderError(f"{path}: line {line_no}: {exc}") from exc
                self.table[self._key(parts[0], parts[1])] = rel

    @staticmethod
    def _key(a: str, b: str) -> tuple[str, str]:
        return (normalize_text(a), normalize_text(b))

    def get_prediction(self, pair: tuple[str, str]) -> RelationClass | None:
        key = self._key(*pair)
        if key in self.table:
            return self.table[key]
        if self.on_missing == "feature_only":
            return None
        raise ProviderError(f"no prediction available for pair {pair!r}")

    def __call__(self, pair: tuple[str, str]) -> RelationClass | None:
        return self.get_prediction(pair)


class RemotePredictionProvider:
    """Client for a remote relation classifier.

    Wire protocol: POST {endpoint} with {"topic_a": ..., "topic_b": ...};
    the response carries {"relation": "<one of the four classes>"}.
    """

    def __init__(
        self,
        endpoint: str,
        timeout: float = 10.0,
        retries: int = 3,
        backoff_base: float = 0.25,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.endpoint = endpoint
        self.timeout = timeout
        self.retries = retries
        self.backoff_base = backoff_base
        self._sleep = sleep

    def get_prediction(self, pair: tuple[str, str]) -> RelationClass:
        doc = _post_json(
            self.endpoint,
            {"topic_a": pair[0], "topic_b": pair[1]},
            self.timeout,
            self.retries,
            self.backoff_base,
            self._sleep,
        )
        try:
            return RelationClass.parse(str(doc.get("relation")))
        except EncodingError as exc:
            raise ProviderError(
                f"remote provider returned unknown class {doc.get('relation')!r} "
                f"for pair {pair!r}"
            ) from exc

    def __call__(self, pair: tuple[str, str]) -> RelationClass:
        return self.get_prediction(pair)


# -- label embedding providers ----------------------------------------------


class HashingEmbedder:
    """Deterministic character-trigram hashing embedder.

    No model, no service: trigrams of the padded, normalized label are
    hashed into a fixed number of buckets and the count vector is
    L2-normalized. Identical labels embed identically; labels sharing many
    trigrams land close. Good enough to gate same-as candidates when no
    real embedding model is configured.
    """

    def __init__(self, dim: int = 256):
        if dim < 8:
            raise ValueError("embedding dimension too small")
        self.dim = dim

    def embed(self, label: str) -> list[float]:
        text = f" {normalize_text(label)} "
        vec = [0.0] * self.dim
        for i in range(len(text) - 2):
            gram = text[i : i + 3].encode("utf-8")
            bucket = int.from_bytes(hashlib.blake2b(gram, digest_size=8).digest(), "big")
            vec[bucket % self.dim] += 1.0
        norm = math.sqrt(sum(v * v for v in vec))
        return [v / norm for v in vec] if norm else vec

    def __call__(self, label: str) -> list[float]:
        return self.embed(label)


class RemoteEmbedder:
    """Client for a remote embedding model.

    Wire protocol: POST {endpoint} with {"label": ...}; the response carries
    {"vector": [floats]}. The first response fixes the expected dimension.
    """

    def __init__(
        self,
        endpoint: str,
        timeout: float = 10.0,
        retries: int = 3,
        backoff_base: float = 0.25,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.endpoint = endpoint
        self.timeout = timeout
        self.retries = retries
        self.backoff_base = backoff_base
        self._sleep = sleep
        self._dim: int | None = None

    def embed(self, label: str) -> list[float]:
        doc = _post_json(
            self.endpoint,
            {"label": label},
            self.timeout,
            self.retries,
            self.backoff_base,
            self._sleep,
        )
        vector = doc.get("vector")
        if not isinstance(vector, list) or not vector:
            raise ProviderError(f"remote embedder returned no vector for {label!r}")
        if self._dim is None:
            self._dim = len(vector)
        elif len(vector) != self._dim:
            raise ProviderError(
                f"remote embedder changed dimension: {len(vector)} != {self._dim}"
            )
        return [float(v) for v in vector]

    def __call__(self, label: str) -> list[float]:
        return self.embed(label)


def cosine_similarity(u: Iterable[float], v: Iterable[float]) -> float:
    """Clamped to [0, 1]: same-as gating treats opposed vectors as unrelated."""
    u = list(u)
    v = list(v)
    dot = sum(a * b for a, b in zip(u, v))
    nu = math.sqrt(sum(a * a for a in u))
    nv = math.sqrt(sum(b * b for b in v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return min(1.0, max(0.0, dot / (nu * nv)))
