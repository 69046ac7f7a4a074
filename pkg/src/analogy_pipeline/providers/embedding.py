"""Embedding client with per-text caching and deterministic stub providers."""

from __future__ import annotations

import hashlib
import json
import re
from typing import Protocol

import httpx
import numpy as np

from ..errors import ProviderError
from .cache import ResponseCache, cache_key
from .models import EmbeddingVector, ModelRef, normalized


class EmbeddingProvider(Protocol):
    def embed(self, model: ModelRef, texts: list[str]) -> list[list[float]]: ...


class HttpEmbeddingProvider:
    """OpenAI-compatible ``/embeddings`` endpoint."""

    def __init__(
        self,
        base_url: str,
        api_key: str | None = None,
        timeout: float = 60.0,
        transport: httpx.BaseTransport | None = None,
    ):
        headers = {}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self._client = httpx.Client(
            base_url=base_url.rstrip("/"), headers=headers, timeout=timeout, transport=transport
        )

    def embed(self, model: ModelRef, texts: list[str]) -> list[list[float]]:
        try:
            response = self._client.post(
                "/embeddings", json={"model": model.model_id, "input": texts}
            )
        except httpx.TransportError as exc:
            raise ProviderError(f"transport failure: {exc}", transient=True) from exc
        if response.status_code >= 500 or response.status_code == 429:
            raise ProviderError(f"provider returned {response.status_code}", transient=True)
        if response.status_code >= 400:
            raise ProviderError(f"provider returned {response.status_code}: {response.text}")
        try:
            rows = sorted(response.json()["data"], key=lambda d: d["index"])
            return [row["embedding"] for row in rows]
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderError(f"malformed provider response: {exc}") from exc


class HashEmbeddingProvider:
    """Pseudo-random unit-sphere embedding seeded by (model id, text).

    Identical texts always map to identical vectors; distinct texts land in
    independent random directions. Order-independent, so cached and parallel
    runs agree byte for byte.
    """

    def __init__(self, dim: int = 64):
        self.dim = dim
        self.call_count = 0

    def embed(self, model: ModelRef, texts: list[str]) -> list[list[float]]:
        self.call_count += 1
        out = []
        for text in texts:
            digest = hashlib.sha256(f"{model.model_id}\x1f{text}".encode("utf-8")).digest()
            seed = int.from_bytes(digest[:8], "big")
            rng = np.random.default_rng(seed)
            out.append(rng.standard_normal(self.dim).tolist())
        return out


class TokenHashEmbeddingProvider:
    """Bag-of-tokens embedding with hashed buckets.

    Texts sharing tokens get proportionally similar vectors and disjoint
    texts are orthogonal, so similarity behaves like a crude lexical model:
    deterministic, order-independent, and always non-negative.
    """

    _TOKEN_RE = re.compile(r"[a-z0-9]+")

    def __init__(self, dim: int = 128):
        self.dim = dim
        self.call_count = 0

    def embed(self, model: ModelRef, texts: list[str]) -> list[list[float]]:
        self.call_count += 1
        out = []
        for text in texts:
            vec = [0.0] * self.dim
            for token in self._TOKEN_RE.findall(text.lower()):
                digest = hashlib.sha256(token.encode("utf-8")).digest()
                vec[int.from_bytes(digest[:4], "big") % self.dim] += 1.0
            if not any(vec):
                vec[0] = 1.0  # texts with no word characters still embed
            out.append(vec)
        return out


class OrthonormalStubEmbedding:
    """Assigns each distinct text the next standard-basis vector.

    Gives exactly-orthogonal vectors for distinct texts and identical vectors
    for repeats; useful when a test needs cosine values of exactly 0 or 1.
    """

    def __init__(self, dim: int = 64):
        self.dim = dim
        self._assignments: dict[str, int] = {}
        self.call_count = 0

    def embed(self, model: ModelRef, texts: list[str]) -> list[list[float]]:
        self.call_count += 1
        out = []
        for text in texts:
            if text not in self._assignments:
                if len(self._assignments) >= self.dim:
                    raise ProviderError(
                        f"orthonormal stub exhausted its {self.dim} basis vectors"
                    )
                self._assignments[text] = len(self._assignments)
            vec = [0.0] * self.dim
            vec[self._assignments[text]] = 1.0
            out.append(vec)
        return out


class ScriptedEmbeddingProvider:
    """Returns exactly the scripted vector per text; unknown text is an error."""

    def __init__(self, mapping: dict[str, list[float]]):
        self.mapping = dict(mapping)
        self.call_count = 0

    def embed(self, model: ModelRef, texts: list[str]) -> list[list[float]]:
        self.call_count += 1
        try:
            return [list(self.mapping[t]) for t in texts]
        except KeyError as exc:
            raise ProviderError(f"scripted embedder has no vector for {exc}") from exc


class EmbeddingClient:
    """Batches, caches per text, and L2-normalizes provider embeddings."""

    def __init__(
        self,
        provider: EmbeddingProvider,
        cache: ResponseCache | None = None,
        batch_size: int = 64,
    ):
        self.provider = provider
        self.cache = cache
        self.batch_size = batch_size

    def embed(self, model: ModelRef, texts: list[str]) -> list[EmbeddingVector]:
        if not texts:
            raise ValueError("texts must be non-empty")
        if any(not t.strip() for t in texts):
            raise ValueError("every text in the batch must be non-empty")

        results: list[EmbeddingVector | None] = [None] * len(texts)
        pending: list[int] = []
        for i, text in enumerate(texts):
            cached = self._cache_get(model, text)
            if cached is not None:
                results[i] = cached
            else:
                pending.append(i)

        for start in range(0, len(pending), self.batch_size):
            block = pending[start : start + self.batch_size]
            raw = self.provider.embed(model, [texts[i] for i in block])
            if len(raw) != len(block):
                raise ProviderError(
                    f"provider returned {len(raw)} vectors for {len(block)} texts"
                )
            dims = {len(v) for v in raw}
            if len(dims) > 1:
                raise ProviderError(f"provider dimension mismatch across batch: {sorted(dims)}")
            for i, values in zip(block, raw):
                try:
                    vec = normalized([float(v) for v in values], model.model_id)
                except ValueError as exc:
                    raise ProviderError(str(exc)) from exc
                self._cache_set(model, texts[i], vec)
                results[i] = vec

        dims = {v.dim for v in results if v is not None}
        if len(dims) > 1:
            raise ProviderError(f"provider dimension mismatch across batch: {sorted(dims)}")
        return [v for v in results if v is not None]

    def embed_one(self, model: ModelRef, text: str) -> EmbeddingVector:
        return self.embed(model, [text])[0]

    def _key(self, model: ModelRef, text: str) -> str:
        return cache_key(model.model_id, "embed\x00" + text, 0.0)

    def _cache_get(self, model: ModelRef, text: str) -> EmbeddingVector | None:
        if self.cache is None:
            return None
        raw = self.cache.get(self._key(model, text))
        if raw is None:
            return None
        return EmbeddingVector(tuple(json.loads(raw)), model.model_id)

    def _cache_set(self, model: ModelRef, text: str, vec: EmbeddingVector):
        if self.cache is not None:
            self.cache.set(self._key(model, text), json.dumps(list(vec.values)))


def embed_text(client: EmbeddingClient, model: ModelRef, texts: list[str]) -> list[EmbeddingVector]:
    """One normalized vector per input text, order preserved."""
    return client.embed(model, texts)
