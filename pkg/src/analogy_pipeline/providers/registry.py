"""Build chat/embedding clients from config-file provider specs.

Spec shapes (JSON-friendly dicts):

    {"kind": "openai", "base_url": "https://...", "api_key_env": "OPENAI_API_KEY"}
    {"kind": "synthetic"}
    {"kind": "scripted", "script": "path/to/script.json"}   # or inline dict
    {"kind": "hash", "dim": 64}                             # embeddings
    {"kind": "orthonormal", "dim": 64}                      # embeddings
    {"kind": "scripted-embed", "mapping": {"text": [..]}}   # embeddings

API keys are read from the named environment variable, never from the
config file itself.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

from ..errors import ConfigError
from .cache import ResponseCache
from .chat import ChatClient, HttpChatProvider, ScriptedChatProvider, SyntheticChatProvider
from .embedding import (
    EmbeddingClient,
    HashEmbeddingProvider,
    HttpEmbeddingProvider,
    OrthonormalStubEmbedding,
    ScriptedEmbeddingProvider,
    TokenHashEmbeddingProvider,
)


def _api_key(spec: dict) -> str | None:
    env = spec.get("api_key_env")
    if not env:
        return None
    key = os.environ.get(env)
    if key is None:
        raise ConfigError(f"environment variable {env!r} is not set")
    return key


def _load_script(spec: dict):
    script = spec.get("script")
    if script is None:
        raise ConfigError("scripted provider spec requires a 'script' entry")
    if isinstance(script, (str, Path)):
        return json.loads(Path(script).read_text(encoding="utf-8"))
    return script


def build_chat_client(
    spec: dict,
    cache: ResponseCache | None = None,
    transcript_path: str | Path | None = None,
    max_concurrency: int = 4,
    backoff_base: float = 0.5,
) -> ChatClient:
    kind = spec.get("kind", "openai")
    if kind == "openai":
        if "base_url" not in spec:
            raise ConfigError("openai chat provider spec requires 'base_url'")
        provider = HttpChatProvider(spec["base_url"], api_key=_api_key(spec))
    elif kind == "synthetic":
        provider = SyntheticChatProvider()
    elif kind == "scripted":
        provider = ScriptedChatProvider(_load_script(spec))
    else:
        raise ConfigError(f"unknown chat provider kind {kind!r}")
    return ChatClient(
        provider,
        cache=cache,
        transcript_path=transcript_path,
        max_concurrency=max_concurrency,
        backoff_base=backoff_base,
    )


def build_embedding_client(spec: dict, cache: ResponseCache | None = None) -> EmbeddingClient:
    kind = spec.get("kind", "openai")
    if kind == "openai":
        if "base_url" not in spec:
            raise ConfigError("openai embedding provider spec requires 'base_url'")
        provider = HttpEmbeddingProvider(spec["base_url"], api_key=_api_key(spec))
    elif kind == "hash":
        provider = HashEmbeddingProvider(dim=int(spec.get("dim", 64)))
    elif kind == "token-hash":
        provider = TokenHashEmbeddingProvider(dim=int(spec.get("dim", 128)))
    elif kind == "orthonormal":
        provider = OrthonormalStubEmbedding(dim=int(spec.get("dim", 64)))
    elif kind == "scripted-embed":
        provider = ScriptedEmbeddingProvider(spec.get("mapping", {}))
    else:
        raise ConfigError(f"unknown embedding provider kind {kind!r}")
    return EmbeddingClient(provider, cache=cache)
