"""Sentence similarity providers: offline lexical cosine and a cached HTTP embedding service."""

from __future__ import annotations

import json
import logging
import math
import threading
import urllib.error
import urllib.request
from collections import Counter
from pathlib import Path
from typing import Optional, Protocol, runtime_checkable

from src.errors import ProviderUnavailable
from src.utils import content_hash, tokenize

logger = logging.getLogger(__name__)


@runtime_checkable
class SimilarityProvider(Protocol):
    name: str

    def similarity(self, a: str, b: str) -> float:
        """Symmetric similarity in [0, 1]; identical texts score 1."""
        ...


class LexicalSimilarity:
    """Cosine over token-count vectors after lowercasing and punctuation stripping."""

    name = "lexical"

    def similarity(self, a: str, b: str) -> float:
        if a == b:
            return 1.0
        va, vb = Counter(tokenize(a)), Counter(tokenize(b))
        if not va or not vb:
            return 0.0
        dot = sum(va[t] * vb[t] for t in va.keys() & vb.keys())
        norm = math.sqrt(sum(v * v for v in va.values())) * math.sqrt(sum(v * v for v in vb.values()))
        return max(0.0, min(1.0, dot / norm))


class SimilarityCache:
    """Persistent content-hash keyed cache; safe for concurrent use."""

    def __init__(self, path: Optional[Path] = None):
        self.path = path
        self._lock = threading.Lock()
        self._values: dict[str, float] = {}
        if path is not None and path.is_file():
            self._values = {k: float(v) for k, v in json.loads(path.read_text(encoding="utf-8")).items()}

    @staticmethod
    def key(a: str, b: str) -> str:
        return content_hash(*sorted((a, b)))

    def get(self, a: str, b: str) -> Optional[float]:
        with self._lock:
            return self._values.get(self.key(a, b))

    def put(self, a: str, b: str, value: float) -> None:
        with self._lock:
            self._values[self.key(a, b)] = value

    def __len__(self) -> int:
        return len(self._values)

    def save(self) -> None:
        if self.path is None:
            return
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text(json.dumps(self._values, sort_keys=True, indent=0), encoding="utf-8")


class HttpSimilarity:
    """Client for an embedding service that scores a sentence pair.

    Request body ``{"a": str, "b": str}``; response ``{"similarity": float}`` or a
    bare number. Concurrent calls are bounded by ``max_in_flight``. Failures fall
    back to the lexical provider with a warning and are not cached.
    """

    name = "http"

    def __init__(
        self,
        url: str,
        cache: Optional[SimilarityCache] = None,
        max_in_flight: int = 4,
        timeout: float = 30.0,
        fallback: Optional[SimilarityProvider] = None,
    ):
        self.url = url
        self.cache = cache if cache is not None else SimilarityCache()
        self.timeout = timeout
        self.fallback = fallback or LexicalSimilarity()
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._warned = False

    def _request(self, a: str, b: str) -> float:
        body = json.dumps({"a": a, "b": b}).encode("utf-8")
        req = urllib.request.Request(
            self.url, data=body, headers={"Content-Type": "application/json"}, method="POST"
        )
        with self._slots:
            try:
                with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                    payload = json.loads(resp.read().decode("utf-8"))
            except (urllib.error.URLError, TimeoutError, OSError, ValueError) as e:
                raise ProviderUnavailable(f"similarity service {self.url} failed: {e}") from e
        value = payload.get("similarity") if isinstance(payload, dict) else payload
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise ProviderUnavailable(f"unexpected similarity response {payload!r}") from None
        return max(0.0, min(1.0, value))

    def similarity(self, a: str, b: str) -> float:
        if a == b:
            return 1.0
        cached = self.cache.get(a, b)
        if cached is not None:
            return cached
        first, second = sorted((a, b))
        try:
            value = self._request(first, second)
        except ProviderUnavailable as e:
            if not self._warned:
                logger.warning("%s; falling back to lexical similarity", e)
                self._warned = True
            return self.fallback.similarity(a, b)
        self.cache.put(a, b, value)
        return value


def build_provider(
    kind: str,
    embed_url: Optional[str] = None,
    cache_path: Optional[Path] = None,
    max_in_flight: int = 4,
) -> SimilarityProvider:
    if kind == "lexical":
        return LexicalSimilarity()
    if kind == "http":
        if not embed_url:
            raise ValueError("http similarity needs an endpoint URL (EMBED_URL)")
        return HttpSimilarity(embed_url, SimilarityCache(cache_path), max_in_flight=max_in_flight)
    raise ValueError(f"unknown similarity provider {kind!r}")
