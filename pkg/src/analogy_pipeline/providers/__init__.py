"""Uniform chat and embedding clients with structured prompts and caching."""

from .models import EmbeddingVector, ModelRef, cosine
from .signatures import PromptSignature, parse_response, render_prompt, render_response
from .cache import ResponseCache
from .chat import (
    ChatClient,
    ChatRequest,
    CompletionResult,
    HttpChatProvider,
    ScriptedChatProvider,
    SyntheticChatProvider,
    chat_complete,
)
from .embedding import (
    EmbeddingClient,
    HashEmbeddingProvider,
    HttpEmbeddingProvider,
    OrthonormalStubEmbedding,
    ScriptedEmbeddingProvider,
    TokenHashEmbeddingProvider,
    embed_text,
)
from .registry import build_chat_client, build_embedding_client

__all__ = [
    "ChatClient",
    "ChatRequest",
    "CompletionResult",
    "EmbeddingClient",
    "EmbeddingVector",
    "HashEmbeddingProvider",
    "HttpChatProvider",
    "HttpEmbeddingProvider",
    "ModelRef",
    "OrthonormalStubEmbedding",
    "PromptSignature",
    "ResponseCache",
    "ScriptedChatProvider",
    "ScriptedEmbeddingProvider",
    "SyntheticChatProvider",
    "TokenHashEmbeddingProvider",
    "build_chat_client",
    "build_embedding_client",
    "chat_complete",
    "cosine",
    "embed_text",
    "parse_response",
    "render_prompt",
    "render_response",
]
